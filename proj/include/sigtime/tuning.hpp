#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sigtime/bayesopt.hpp"
#include "sigtime/common.hpp"
#include "sigtime/features.hpp"
#include "sigtime/gbdt.hpp"

namespace sigtime {

struct Metrics {
    double mae = 0;
    std::optional<double> r2;  // empty when the target variance is zero
    std::size_t n_points = 0;
    double fraction_within_2s = 0;
};

inline Metrics compute_metrics(const Eigen::VectorXd& preds, const Eigen::VectorXd& targets) {
    if (preds.size() == 0 || preds.size() != targets.size()) {
        throw std::invalid_argument("compute_metrics: prediction/target lengths must match and be nonzero");
    }
    Metrics m;
    m.n_points = static_cast<std::size_t>(preds.size());
    const Eigen::ArrayXd err = (preds - targets).array();
    m.mae = err.abs().mean();
    m.fraction_within_2s = (err.abs() < 2.0).cast<double>().mean();
    const double y_mean = targets.mean();
    const double ss_tot = (targets.array() - y_mean).square().sum();
    if (ss_tot > 0) {
        m.r2 = 1.0 - err.square().sum() / ss_tot;
    }
    return m;
}

// Uniform random split without replacement; disjoint and seed-deterministic.
inline std::pair<std::vector<int>, std::vector<int>> train_test_split_indices(std::size_t n,
                                                                              double test_fraction,
                                                                              std::uint64_t seed) {
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
        throw std::invalid_argument("train_test_split: fraction outside (0, 1)");
    }
    std::vector<int> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(idx);
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
    std::vector<int> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<int> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

template <typename Sample>
inline std::pair<std::vector<Sample>, std::vector<Sample>> train_test_split(const std::vector<Sample>& data,
                                                                            double test_fraction,
                                                                            std::uint64_t seed) {
    if (data.size() < 5) throw std::invalid_argument("train_test_split: need at least 5 points");
    auto [train_idx, test_idx] = train_test_split_indices(data.size(), test_fraction, seed);
    std::pair<std::vector<Sample>, std::vector<Sample>> out;
    for (int i : train_idx) out.first.push_back(data[static_cast<std::size_t>(i)]);
    for (int i : test_idx) out.second.push_back(data[static_cast<std::size_t>(i)]);
    return out;
}

struct CvResult {
    Eigen::VectorXd oof_predictions;        // aligned to the input rows
    std::vector<int> fold_of;               // validation fold of each row
    std::vector<ScalerParams> fold_scalers; // scaler fit on each fold's training rows
};

// Out-of-fold predictions: each point is predicted exactly once by a model
// that never saw it. The feature scaler is fit per training fold, never on
// the full data.
inline CvResult kfold_cv_predict(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GbdtParams& params,
                                 int k = 5, std::uint64_t seed = 0) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (k < 2) throw std::invalid_argument("kfold_cv_predict: k must be >= 2");
    if (n < static_cast<std::size_t>(k)) throw std::invalid_argument("kfold_cv_predict: k exceeds dataset size");

    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    Rng rng(derive_seed(seed, "kfold"));
    rng.shuffle(order);

    CvResult result;
    result.oof_predictions.resize(static_cast<Eigen::Index>(n));
    result.fold_of.assign(n, -1);
    result.fold_scalers.resize(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        result.fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i % static_cast<std::size_t>(k));
    }

    auto run_fold = [&](int fold) {
        std::vector<int> train_rows, val_rows;
        for (std::size_t i = 0; i < n; ++i) {
            (result.fold_of[i] == fold ? val_rows : train_rows).push_back(static_cast<int>(i));
        }
        Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train_rows.size()), X.cols());
        Eigen::VectorXd ytr(static_cast<Eigen::Index>(train_rows.size()));
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = X.row(train_rows[i]);
            ytr(static_cast<Eigen::Index>(i)) = y(train_rows[i]);
        }
        const ScalerParams scaler = fit_scaler(Xtr);
        GbdtParams fold_params = params;
        fold_params.rng_seed = derive_seed(seed, "kfold.model/" + std::to_string(fold));
        const GbdtModel model = gbdt_train(apply_scaler(scaler, Xtr), ytr, fold_params);

        Eigen::MatrixXd Xval(static_cast<Eigen::Index>(val_rows.size()), X.cols());
        for (std::size_t i = 0; i < val_rows.size(); ++i) {
            Xval.row(static_cast<Eigen::Index>(i)) = X.row(val_rows[i]);
        }
        const Eigen::VectorXd pv = gbdt_predict(model, apply_scaler(scaler, Xval));
        return std::tuple<int, std::vector<int>, Eigen::VectorXd, ScalerParams>(fold, val_rows, pv, scaler);
    };

    std::vector<std::future<std::tuple<int, std::vector<int>, Eigen::VectorXd, ScalerParams>>> futures;
    futures.reserve(static_cast<std::size_t>(k));
    for (int fold = 0; fold < k; ++fold) {
        futures.push_back(std::async(std::launch::async, run_fold, fold));
    }
    for (auto& fut : futures) {
        auto [fold, val_rows, pv, scaler] = fut.get();
        result.fold_scalers[static_cast<std::size_t>(fold)] = scaler;
        for (std::size_t i = 0; i < val_rows.size(); ++i) {
            result.oof_predictions(val_rows[i]) = pv(static_cast<Eigen::Index>(i));
        }
    }
    return result;
}

// Table-style search bounds. min_starts is scanned by the cutoff procedure
// rather than the Bayesian optimizer.
struct CycleTuneSpace {
    SearchSpace bo_space;  // 7 model dims + n_fourier
    int min_starts_lo = 2;
    int min_starts_hi = 250;
};

inline CycleTuneSpace cycle_tune_space(int n_fourier_max = 30) {
    CycleTuneSpace s;
    s.bo_space.dims = {
        {"n_estimators", 100, 2000, false, true},
        {"learning_rate", 1e-4, 1.0, true, false},
        {"max_depth", 2, 20, false, true},
        {"gamma", 1e-5, 1.0, true, false},
        {"min_child_weight", 1, 10, false, false},
        {"subsample", 0.5, 1.0, false, false},
        {"colsample_by_tree", 0.5, 1.0, false, false},
        {"n_fourier", 2, static_cast<double>(n_fourier_max), false, true},
    };
    return s;
}

inline GbdtParams gbdt_params_from_values(const std::vector<double>& v, std::uint64_t seed) {
    GbdtParams p;
    p.n_estimators = static_cast<int>(std::llround(v[0]));
    p.learning_rate = v[1];
    p.max_depth = static_cast<int>(std::llround(v[2]));
    p.gamma = v[3];
    p.min_child_weight = v[4];
    p.subsample = v[5];
    p.colsample_by_tree = v[6];
    p.rng_seed = seed;
    return p;
}

struct CutoffResult {
    int cutoff = 0;
    bool found = false;
};

// Minimum c in [c_lo, c_hi] such that, over CV points with n_starts > c, the
// fraction with |error| < tol_s reaches the threshold. Values of c whose
// restriction is empty are skipped; if none qualifies the upper bound is
// returned with found = false.
inline CutoffResult select_min_starts_cutoff(const std::vector<std::pair<int, double>>& cv_errors, int c_lo = 2,
                                             int c_hi = 250, double threshold = 0.95, double tol_s = 2.0) {
    if (cv_errors.empty()) throw std::invalid_argument("select_min_starts_cutoff: empty error list");
    for (int c = c_lo; c <= c_hi; ++c) {
        std::size_t total = 0, within = 0;
        for (const auto& [n_starts, abs_err] : cv_errors) {
            if (n_starts > c) {
                ++total;
                if (abs_err < tol_s) ++within;
            }
        }
        if (total == 0) continue;
        if (static_cast<double>(within) / static_cast<double>(total) >= threshold) {
            return {c, true};
        }
    }
    return {c_hi, false};
}

struct MultistageOptions {
    int bo_init = 10;
    int bo_iter = 50;
    int cv_folds = 5;
    int n_fourier_max = 30;
    int cutoff_lo = 2;
    int cutoff_hi = 250;
    double cutoff_threshold = 0.95;
    double cutoff_tol_s = 2.0;
    std::uint64_t seed = 0;
};

struct MultistageResult {
    GbdtParams params;
    int n_fourier = 1;
    CutoffResult cutoff;
    BoResult stage1;
    BoResult stage4;
};

namespace detail {

struct CycleObjective {
    const std::vector<CycleSample>* samples;
    int cv_folds;
    std::uint64_t seed;

    double operator()(const std::vector<double>& values) const {
        const int k = static_cast<int>(std::llround(values[7]));
        const GbdtParams params = gbdt_params_from_values(values, derive_seed(seed, "cv.gbdt"));
        const Eigen::MatrixXd X = cycle_feature_matrix(*samples, k);
        const Eigen::VectorXd y = target_vector(*samples, &CycleSample::target_cycle_s);
        const CvResult cv = kfold_cv_predict(X, y, params, cv_folds, derive_seed(seed, "cv"));
        return -(cv.oof_predictions - y).array().abs().mean();  // score = -CV MAE
    }
};

}  // namespace detail

// The four-step tuning procedure: optimize hyperparameters and n_fourier,
// compute CV predictions at the optimum, choose the minimum-starts cutoff,
// then down-select and re-optimize on the filtered training set.
// `train_set` must carry features for n_fourier_max frequencies.
inline MultistageResult multistage_tune(const std::vector<CycleSample>& train_set,
                                        const MultistageOptions& opt = {}) {
    if (train_set.size() < static_cast<std::size_t>(5 * opt.cv_folds)) {
        throw DataError("multistage_tune: training set smaller than " + std::to_string(5 * opt.cv_folds) +
                        " points");
    }
    MultistageResult result;

    detail::CycleObjective objective{&train_set, opt.cv_folds, opt.seed};
    const CycleTuneSpace space = cycle_tune_space(opt.n_fourier_max);
    result.stage1 = bayes_optimize(objective, space.bo_space, opt.bo_init, opt.bo_iter,
                                   derive_seed(opt.seed, "bo.stage1"));

    const int k1 = static_cast<int>(std::llround(result.stage1.best_values[7]));
    const GbdtParams p1 = gbdt_params_from_values(result.stage1.best_values, derive_seed(opt.seed, "cv.gbdt"));
    const Eigen::MatrixXd X1 = cycle_feature_matrix(train_set, k1);
    const Eigen::VectorXd y1 = target_vector(train_set, &CycleSample::target_cycle_s);
    const CvResult cv = kfold_cv_predict(X1, y1, p1, opt.cv_folds, derive_seed(opt.seed, "cv"));

    std::vector<std::pair<int, double>> cv_errors;
    cv_errors.reserve(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        cv_errors.emplace_back(train_set[i].n_starts,
                               std::abs(cv.oof_predictions(static_cast<Eigen::Index>(i)) -
                                        y1(static_cast<Eigen::Index>(i))));
    }
    result.cutoff = select_min_starts_cutoff(cv_errors, opt.cutoff_lo, opt.cutoff_hi, opt.cutoff_threshold,
                                             opt.cutoff_tol_s);

    std::vector<CycleSample> filtered;
    for (const auto& s : train_set) {
        if (s.n_starts > result.cutoff.cutoff) filtered.push_back(s);
    }
    if (filtered.size() < static_cast<std::size_t>(5 * opt.cv_folds)) {
        throw DataError("multistage_tune: cutoff " + std::to_string(result.cutoff.cutoff) + " leaves only " +
                        std::to_string(filtered.size()) + " points, fewer than " +
                        std::to_string(5 * opt.cv_folds));
    }

    detail::CycleObjective objective4{&filtered, opt.cv_folds, opt.seed};
    result.stage4 = bayes_optimize(objective4, space.bo_space, opt.bo_init, opt.bo_iter,
                                   derive_seed(opt.seed, "bo.stage4"));
    result.n_fourier = static_cast<int>(std::llround(result.stage4.best_values[7]));
    result.params = gbdt_params_from_values(result.stage4.best_values, derive_seed(opt.seed, "final.gbdt"));
    return result;
}

}  // namespace sigtime
