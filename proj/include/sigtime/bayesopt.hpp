#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sigtime/common.hpp"

namespace sigtime {

struct BoundedDim {
    std::string name;
    double lo = 0;
    double hi = 1;
    bool log_scale = false;
    bool integer = false;
};

struct SearchSpace {
    std::vector<BoundedDim> dims;
};

// Maps a unit-cube coordinate to the dimension's value. Log dimensions are
// mapped log-uniformly; integer dimensions are rounded at evaluation only
// (the surrogate works on the continuous relaxation).
inline double dim_value_from_unit(const BoundedDim& d, double u) {
    u = std::clamp(u, 0.0, 1.0);
    double v;
    if (d.log_scale) {
        v = std::exp(std::log(d.lo) + u * (std::log(d.hi) - std::log(d.lo)));
    } else {
        v = d.lo + u * (d.hi - d.lo);
    }
    if (d.integer) v = std::clamp(std::round(v), d.lo, d.hi);
    return v;
}

inline std::vector<double> space_values_from_unit(const SearchSpace& space, const std::vector<double>& unit) {
    std::vector<double> out(space.dims.size());
    for (std::size_t i = 0; i < space.dims.size(); ++i) {
        out[i] = dim_value_from_unit(space.dims[i], unit[i]);
    }
    return out;
}

struct BoEvaluation {
    std::vector<double> unit;    // surrogate-space coordinates
    std::vector<double> values;  // mapped (and rounded) parameter values
    double score = 0;            // objective value; -inf marks a failed evaluation
};

struct BoResult {
    std::vector<double> best_values;
    std::vector<double> best_unit;
    double best_score = -std::numeric_limits<double>::infinity();
    std::vector<BoEvaluation> history;
};

namespace detail {

// Matern 5/2 correlation with isotropic length scale.
inline double matern52(double r, double ell) {
    const double s = std::sqrt(5.0) * r / ell;
    return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

class GaussianProcess {
public:
    // Fits a zero-mean unit-signal GP on standardized targets; the length
    // scale is chosen from a fixed grid by marginal likelihood.
    void fit(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys, double jitter) {
        const auto n = static_cast<Eigen::Index>(xs.size());
        xs_ = xs;
        y_mean_ = 0;
        for (double y : ys) y_mean_ += y;
        y_mean_ /= static_cast<double>(ys.size());
        double var = 0;
        for (double y : ys) var += (y - y_mean_) * (y - y_mean_);
        var /= static_cast<double>(ys.size());
        y_scale_ = var > 0 ? std::sqrt(var) : 1.0;

        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) y(i) = (ys[static_cast<std::size_t>(i)] - y_mean_) / y_scale_;

        Eigen::MatrixXd dist(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) {
                const double r = distance(xs_[static_cast<std::size_t>(i)], xs_[static_cast<std::size_t>(j)]);
                dist(i, j) = r;
                dist(j, i) = r;
            }
        }

        double best_lml = -std::numeric_limits<double>::infinity();
        for (double ell = 0.05; ell <= 2.0 + 1e-12; ell *= 1.2160068645) {  // 20-step geometric grid
            Eigen::MatrixXd K(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < n; ++j) K(i, j) = matern52(dist(i, j), ell);
                K(i, i) += jitter;
            }
            Eigen::LLT<Eigen::MatrixXd> llt(K);
            if (llt.info() != Eigen::Success) continue;
            const Eigen::VectorXd alpha = llt.solve(y);
            double log_det = 0;
            for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
            const double lml = -0.5 * y.dot(alpha) - 0.5 * log_det;
            if (lml > best_lml) {
                best_lml = lml;
                ell_ = ell;
                llt_ = llt;
                alpha_ = alpha;
            }
        }
        fitted_ = best_lml > -std::numeric_limits<double>::infinity();
        best_standardized_ = y.maxCoeff();
    }

    bool fitted() const { return fitted_; }
    double best_standardized() const { return best_standardized_; }

    void predict(const std::vector<double>& x, double& mean, double& sd) const {
        const auto n = static_cast<Eigen::Index>(xs_.size());
        Eigen::VectorXd k(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            k(i) = matern52(distance(x, xs_[static_cast<std::size_t>(i)]), ell_);
        }
        mean = k.dot(alpha_);
        const Eigen::VectorXd v = llt_.matrixL().solve(k);
        const double var = 1.0 - v.squaredNorm();
        sd = std::sqrt(std::max(var, 1e-12));
    }

    // Expected improvement over the incumbent, in standardized units.
    double expected_improvement(const std::vector<double>& x) const {
        double mu, sd;
        predict(x, mu, sd);
        const double imp = mu - best_standardized_;
        const double z = imp / sd;
        const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
        const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
        return imp * cdf + sd * pdf;
    }

private:
    static double distance(const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(s);
    }

    std::vector<std::vector<double>> xs_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
    double ell_ = 0.2;
    double y_mean_ = 0;
    double y_scale_ = 1;
    double best_standardized_ = 0;
    bool fitted_ = false;
};

// Derivative-free pattern search on the unit cube; best-of-probes moves with
// step halving. Deterministic given the start point.
template <typename F>
inline std::pair<std::vector<double>, double> pattern_search(std::vector<double> x, F&& f) {
    double fx = f(x);
    double step = 0.25;
    int guard = 0;
    while (step >= 0.0078125 && guard++ < 200) {
        std::vector<double> best_probe;
        double best_val = fx;
        for (std::size_t d = 0; d < x.size(); ++d) {
            for (double sgn : {1.0, -1.0}) {
                std::vector<double> probe = x;
                probe[d] = std::clamp(probe[d] + sgn * step, 0.0, 1.0);
                const double val = f(probe);
                if (val > best_val) {
                    best_val = val;
                    best_probe = probe;
                }
            }
        }
        if (!best_probe.empty()) {
            x = std::move(best_probe);
            fx = best_val;
        } else {
            step *= 0.5;
        }
    }
    return {x, fx};
}

}  // namespace detail

// Maximizes `objective` over the search space: seeded Latin-hypercube
// initialization, then a Gaussian-process surrogate (Matern 5/2, jitter 1e-6)
// with expected-improvement proposals found by seeded multi-start local
// search (64 restarts). Failed (non-finite) evaluations are recorded with
// score -inf and the loop continues.
inline BoResult bayes_optimize(const std::function<double(const std::vector<double>&)>& objective,
                               const SearchSpace& space, int n_init = 10, int n_iter = 50,
                               std::uint64_t seed = 0) {
    if (space.dims.empty()) throw std::invalid_argument("bayes_optimize: empty search space");
    if (n_init < 1) throw std::invalid_argument("bayes_optimize: need at least one initialization point");
    const std::size_t dim = space.dims.size();
    constexpr double kJitter = 1e-6;
    constexpr int kRestarts = 64;

    Rng rng(derive_seed(seed, "bayesopt"));
    BoResult result;

    auto evaluate = [&](const std::vector<double>& unit) {
        BoEvaluation ev;
        ev.unit = unit;
        ev.values = space_values_from_unit(space, unit);
        double score = objective(ev.values);
        if (!std::isfinite(score)) score = -std::numeric_limits<double>::infinity();
        ev.score = score;
        if (score > result.best_score) {
            result.best_score = score;
            result.best_values = ev.values;
            result.best_unit = ev.unit;
        }
        result.history.push_back(std::move(ev));
    };

    // Latin hypercube: one stratum per initialization point and dimension.
    std::vector<std::vector<double>> strata(dim, std::vector<double>(static_cast<std::size_t>(n_init)));
    for (std::size_t d = 0; d < dim; ++d) {
        std::vector<int> perm(static_cast<std::size_t>(n_init));
        for (int i = 0; i < n_init; ++i) perm[static_cast<std::size_t>(i)] = i;
        rng.shuffle(perm);
        for (int i = 0; i < n_init; ++i) {
            strata[d][static_cast<std::size_t>(i)] =
                (static_cast<double>(perm[static_cast<std::size_t>(i)]) + rng.uniform()) /
                static_cast<double>(n_init);
        }
    }
    for (int i = 0; i < n_init; ++i) {
        std::vector<double> unit(dim);
        for (std::size_t d = 0; d < dim; ++d) unit[d] = strata[d][static_cast<std::size_t>(i)];
        evaluate(unit);
    }

    for (int iter = 0; iter < n_iter; ++iter) {
        // Surrogate data: finite scores only; failures are clamped below the
        // worst finite score so the GP stays well-posed.
        std::vector<std::vector<double>> xs;
        std::vector<double> ys;
        double worst = std::numeric_limits<double>::infinity();
        double spread = 0;
        for (const auto& ev : result.history) {
            if (std::isfinite(ev.score)) {
                worst = std::min(worst, ev.score);
                spread = std::max(spread, std::abs(ev.score));
            }
        }
        const bool any_finite = std::isfinite(worst);
        for (const auto& ev : result.history) {
            xs.push_back(ev.unit);
            ys.push_back(std::isfinite(ev.score) ? ev.score
                                                 : (any_finite ? worst - (spread + 1.0) : -1.0));
        }

        detail::GaussianProcess gp;
        gp.fit(xs, ys, kJitter);

        std::vector<double> next(dim);
        if (!gp.fitted()) {
            for (auto& u : next) u = rng.uniform();
        } else {
            auto acq = [&gp](const std::vector<double>& x) { return gp.expected_improvement(x); };
            double best_acq = -std::numeric_limits<double>::infinity();
            for (int r = 0; r < kRestarts; ++r) {
                std::vector<double> start(dim);
                for (auto& u : start) u = rng.uniform();
                auto [x, val] = detail::pattern_search(start, acq);
                if (val > best_acq) {
                    best_acq = val;
                    next = std::move(x);
                }
            }
        }
        evaluate(next);
    }
    return result;
}

}  // namespace sigtime
