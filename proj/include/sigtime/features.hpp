#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "sigtime/common.hpp"
#include "sigtime/core.hpp"
#include "sigtime/fft.hpp"
#include "sigtime/sim.hpp"

namespace sigtime {

// Fixed analysis grid: 1 Hz over one hour, zero-padded for the transform so
// every window shares the same frequency resolution of 1/4096 Hz.
inline constexpr int kKdeGridLen = 3600;
inline constexpr int kFftLen = 4096;
inline constexpr double kKdeBandwidthS = 6.0;
inline constexpr int kQuantileGridLen = 100;

// ---------------------------------------------------------------------------
// Cycle-length features
// ---------------------------------------------------------------------------

struct CycleBinKey {
    std::string intersection_id;
    Direction direction;
    Movement movement;
    int hour;  // window index: floor(accel_start_s / 3600)

    auto tie() const {
        return std::tie(intersection_id, direction, movement, hour);
    }
    bool operator<(const CycleBinKey& o) const { return tie() < o.tie(); }
    bool operator==(const CycleBinKey& o) const { return tie() == o.tie(); }

    std::string label() const {
        return intersection_id + "/" + to_string(direction) + "/" + to_string(movement) + "/h" +
               std::to_string(hour);
    }
};

struct CycleBin {
    std::vector<double> starts;  // accel-start times, sorted
    double target_cycle_s = 0;
};

// Bins acceleration starts into (intersection, phase, 1-hour window) groups
// and attaches the ground-truth cycle length of that hour.
inline std::map<CycleBinKey, CycleBin> bin_accel_starts(const std::vector<StopEvent>& events,
                                                        const GroundTruth& gt) {
    std::map<CycleBinKey, CycleBin> bins;
    for (const auto& ev : events) {
        CycleBinKey key{ev.intersection_id, ev.direction, ev.movement,
                        static_cast<int>(std::floor(ev.accel_start_s / 3600.0))};
        if (!gt.covers_hour(key.hour)) {
            throw DataError("bin_accel_starts: hour outside ground-truth coverage for bin " + key.label());
        }
        auto& bin = bins[key];
        bin.starts.push_back(ev.accel_start_s);
        bin.target_cycle_s = gt.target_cycle(ev.intersection_id, key.hour);
    }
    for (auto& [key, bin] : bins) std::sort(bin.starts.begin(), bin.starts.end());
    return bins;
}

// Gaussian KDE of relative start times on the fixed 1 Hz grid:
// f(t) = 1/(n h) sum_i phi((t - t_i) / h).
inline std::vector<double> kde_density(const std::vector<double>& starts_rel, double bandwidth_s = kKdeBandwidthS,
                                       int grid_len = kKdeGridLen) {
    if (starts_rel.size() < 2) {
        throw std::invalid_argument("kde_density: needs at least two starts (discard rule upstream)");
    }
    if (!(bandwidth_s > 0)) throw std::invalid_argument("kde_density: bandwidth must be positive");
    const double inv_norm = 1.0 / (static_cast<double>(starts_rel.size()) * bandwidth_s *
                                   std::sqrt(2.0 * 3.14159265358979323846));
    std::vector<double> density(static_cast<std::size_t>(grid_len), 0.0);
    for (double ti : starts_rel) {
        // The Gaussian is negligible beyond 10 bandwidths; restrict the loop.
        const int lo = std::max(0, static_cast<int>(std::floor(ti - 10.0 * bandwidth_s)));
        const int hi = std::min(grid_len - 1, static_cast<int>(std::ceil(ti + 10.0 * bandwidth_s)));
        for (int t = lo; t <= hi; ++t) {
            const double z = (static_cast<double>(t) - ti) / bandwidth_s;
            density[static_cast<std::size_t>(t)] += std::exp(-0.5 * z * z);
        }
    }
    for (double& v : density) v *= inv_norm;
    return density;
}

// Top-k positive-frequency DFT bins ranked by amplitude magnitude (ties go to
// the lower frequency). DC is excluded; returned values are bin frequencies
// j / 4096 Hz in rank order.
inline std::vector<double> top_fourier_frequencies(const std::vector<double>& density, int k) {
    if (k < 1) throw std::invalid_argument("top_fourier_frequencies: k must be >= 1");
    const auto spectrum = fft_real(density, kFftLen);
    const int n_pos = kFftLen / 2;  // bins 1 .. 2048
    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(static_cast<std::size_t>(n_pos));
    for (int j = 1; j <= n_pos; ++j) {
        ranked.emplace_back(std::abs(spectrum[static_cast<std::size_t>(j)]), j);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    const int kk = std::min(k, n_pos);
    std::vector<double> freqs(static_cast<std::size_t>(kk));
    for (int i = 0; i < kk; ++i) {
        freqs[static_cast<std::size_t>(i)] = static_cast<double>(ranked[static_cast<std::size_t>(i)].second) /
                                             static_cast<double>(kFftLen);
    }
    return freqs;
}

// One (intersection, phase, hour) training point for the cycle model.
struct CycleSample {
    std::string intersection_id;
    Direction direction = Direction::North;
    Movement movement = Movement::Through;
    int hour = 0;
    int n_starts = 0;
    std::vector<double> features;  // top-k frequencies, magnitude-rank order
    double target_cycle_s = 0;
};

// Builds the cycle dataset: windows need n_starts >= 2, and when a cutoff
// min_starts >= 2 is given, strictly more than min_starts starts.
inline std::vector<CycleSample> build_cycle_dataset(const std::map<CycleBinKey, CycleBin>& bins, int k,
                                                    int min_starts, double bandwidth_s = kKdeBandwidthS) {
    std::vector<CycleSample> out;
    for (const auto& [key, bin] : bins) {
        const int n = static_cast<int>(bin.starts.size());
        if (n < 2) continue;
        if (min_starts >= 2 && n <= min_starts) continue;
        const double first = bin.starts.front();
        std::vector<double> rel(bin.starts.size());
        for (std::size_t i = 0; i < bin.starts.size(); ++i) rel[i] = bin.starts[i] - first;
        CycleSample s;
        s.intersection_id = key.intersection_id;
        s.direction = key.direction;
        s.movement = key.movement;
        s.hour = key.hour;
        s.n_starts = n;
        s.features = top_fourier_frequencies(kde_density(rel, bandwidth_s), k);
        s.target_cycle_s = bin.target_cycle_s;
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Red-time features
// ---------------------------------------------------------------------------

// Empirical quantile per the set-builder rule
//   Q_alpha = max{ s_i : #{ s_j <= s_i } / n < alpha },
// with two stated overrides: alpha = 1 returns the maximum, and an empty
// candidate set returns the minimum.
inline double empirical_quantile(const std::vector<double>& stops, double alpha) {
    if (stops.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
    if (!(alpha > 0.0) || alpha > 1.0) throw std::domain_error("empirical_quantile: alpha outside (0, 1]");
    std::vector<double> sorted(stops);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (alpha == 1.0) return sorted.back();
    double best = sorted.front();  // min fallback for the empty set
    bool any = false;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
        const double cdf = static_cast<double>(j + 1) / static_cast<double>(n);
        if (cdf < alpha) {
            best = sorted[i];
            any = true;
        } else {
            break;  // cdf is non-decreasing over distinct values
        }
        i = j + 1;
    }
    return any ? best : sorted.front();
}

// The full 100-point quantile vector (alpha = 0.01, 0.02, ..., 1.00).
inline std::vector<double> quantile_vector(const std::vector<double>& stops) {
    std::vector<double> q(kQuantileGridLen);
    for (int i = 1; i <= kQuantileGridLen; ++i) {
        q[static_cast<std::size_t>(i - 1)] = empirical_quantile(stops, static_cast<double>(i) / 100.0);
    }
    return q;
}

struct RedBinKey {
    std::string intersection_id;
    Direction direction;
    TodBin tod_bin;

    auto tie() const { return std::tie(intersection_id, direction, tod_bin); }
    bool operator<(const RedBinKey& o) const { return tie() < o.tie(); }
    bool operator==(const RedBinKey& o) const { return tie() == o.tie(); }

    std::string label() const {
        return intersection_id + "/" + to_string(direction) + "/" + to_string(tod_bin);
    }
};

struct RedSample {
    std::string intersection_id;
    Direction direction = Direction::North;
    TodBin tod_bin = TodBin::OffPeak;
    std::vector<double> quantiles;  // 100 entries, Q_0.01 .. Q_1.00
    double target_red_s = 0;
};

inline std::map<RedBinKey, std::vector<double>> bin_stop_durations(const std::vector<StopEvent>& events) {
    std::map<RedBinKey, std::vector<double>> bins;
    for (const auto& ev : events) {
        bins[RedBinKey{ev.intersection_id, ev.direction, ev.tod_bin}].push_back(ev.stop_duration_s);
    }
    return bins;
}

// Up-samples each (intersection, direction, time-of-day) bin into
// `repetitions` groupings of `samples_per_grouping` stop times drawn with
// replacement, and encodes each grouping as its quantile vector. Per-bin RNG
// streams are derived from the seed and the bin key, so output does not
// depend on iteration or thread order.
inline std::vector<RedSample> build_red_dataset(const std::map<RedBinKey, std::vector<double>>& bins,
                                                const GroundTruth& gt, int samples_per_grouping = 50,
                                                int repetitions = 40, std::uint64_t seed = 0) {
    if (samples_per_grouping < 1 || repetitions < 1) {
        throw std::invalid_argument("build_red_dataset: sampling constants must be positive");
    }
    std::vector<RedSample> out;
    out.reserve(bins.size() * static_cast<std::size_t>(repetitions));
    for (const auto& [key, stops] : bins) {
        if (stops.empty()) continue;
        const Phase& phase = gt.phase_for_direction(key.intersection_id, key.direction);
        Rng rng(derive_seed(seed, "red.resample/" + key.label()));
        for (int rep = 0; rep < repetitions; ++rep) {
            std::vector<double> grouping(static_cast<std::size_t>(samples_per_grouping));
            for (auto& g : grouping) {
                g = stops[static_cast<std::size_t>(rng.below(stops.size()))];
            }
            RedSample s;
            s.intersection_id = key.intersection_id;
            s.direction = key.direction;
            s.tod_bin = key.tod_bin;
            s.quantiles = quantile_vector(grouping);
            s.target_red_s = phase.red_s;
            out.push_back(std::move(s));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Input normalization
// ---------------------------------------------------------------------------

// Per-feature z-score parameters, fit on training rows only. Population
// standard deviation; constant columns get sigma = 1.
struct ScalerParams {
    std::vector<double> mean;
    std::vector<double> stddev;

    bool operator==(const ScalerParams& o) const { return mean == o.mean && stddev == o.stddev; }
};

inline ScalerParams fit_scaler(const Eigen::MatrixXd& X) {
    if (X.rows() == 0) throw std::invalid_argument("fit_scaler: empty matrix");
    ScalerParams p;
    const auto cols = static_cast<std::size_t>(X.cols());
    p.mean.resize(cols);
    p.stddev.resize(cols);
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        const double mu = X.col(c).mean();
        const double var = (X.col(c).array() - mu).square().sum() / static_cast<double>(X.rows());
        const double sd = std::sqrt(var);
        p.mean[static_cast<std::size_t>(c)] = mu;
        p.stddev[static_cast<std::size_t>(c)] = sd > 0 ? sd : 1.0;
    }
    return p;
}

inline Eigen::MatrixXd apply_scaler(const ScalerParams& p, const Eigen::MatrixXd& X) {
    if (static_cast<std::size_t>(X.cols()) != p.mean.size()) {
        throw std::invalid_argument("apply_scaler: column count does not match fitted parameters");
    }
    Eigen::MatrixXd Z = X;
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        Z.col(c) = (X.col(c).array() - p.mean[static_cast<std::size_t>(c)]) /
                   p.stddev[static_cast<std::size_t>(c)];
    }
    return Z;
}

// Feature-matrix assembly. For cycle samples the first `k` ranked
// frequencies are used, which lets tuning slice one max-k build.
inline Eigen::MatrixXd cycle_feature_matrix(const std::vector<CycleSample>& samples, int k) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(samples.size()), k);
    for (std::size_t r = 0; r < samples.size(); ++r) {
        if (static_cast<int>(samples[r].features.size()) < k) {
            throw std::invalid_argument("cycle_feature_matrix: sample has fewer than k features");
        }
        for (int c = 0; c < k; ++c) {
            X(static_cast<Eigen::Index>(r), c) = samples[r].features[static_cast<std::size_t>(c)];
        }
    }
    return X;
}

inline Eigen::MatrixXd red_feature_matrix(const std::vector<RedSample>& samples) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(samples.size()), kQuantileGridLen);
    for (std::size_t r = 0; r < samples.size(); ++r) {
        for (int c = 0; c < kQuantileGridLen; ++c) {
            X(static_cast<Eigen::Index>(r), c) = samples[r].quantiles[static_cast<std::size_t>(c)];
        }
    }
    return X;
}

template <typename Sample>
inline Eigen::VectorXd target_vector(const std::vector<Sample>& samples, double Sample::*field) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t r = 0; r < samples.size(); ++r) y(static_cast<Eigen::Index>(r)) = samples[r].*field;
    return y;
}

}  // namespace sigtime
