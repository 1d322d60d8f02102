#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sigtime/common.hpp"

namespace sigtime {

struct GbdtParams {
    int n_estimators = 1050;          // Table-style midpoints as test defaults
    double learning_rate = 0.01;
    int max_depth = 11;
    double gamma = 0.0031622776601683794;  // 10^-2.5
    double min_child_weight = 5.5;
    double subsample = 0.75;
    double colsample_by_tree = 0.75;
    double lambda = 1.0;  // leaf L2 regularization
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (n_estimators < 0) throw std::invalid_argument("gbdt: n_estimators must be >= 0");
        if (!(learning_rate > 0)) throw std::invalid_argument("gbdt: learning_rate must be positive");
        if (max_depth < 1) throw std::invalid_argument("gbdt: max_depth must be >= 1");
        if (gamma < 0 || min_child_weight < 0 || lambda < 0) {
            throw std::invalid_argument("gbdt: gamma, min_child_weight and lambda must be >= 0");
        }
        if (!(subsample > 0) || subsample > 1 || !(colsample_by_tree > 0) || colsample_by_tree > 1) {
            throw std::invalid_argument("gbdt: subsample and colsample_by_tree must lie in (0, 1]");
        }
    }
};

// Binary regression tree stored as a flat node array; index 0 is the root.
struct GbdtNode {
    int feature = -1;          // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double leaf_weight = 0;
};

struct GbdtTree {
    std::vector<GbdtNode> nodes;

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        int idx = 0;
        while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
            const auto& nd = nodes[static_cast<std::size_t>(idx)];
            idx = x(nd.feature) < nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(idx)].leaf_weight;
    }

    int depth_below(int idx = 0) const {
        const auto& nd = nodes[static_cast<std::size_t>(idx)];
        if (nd.feature < 0) return 0;
        return 1 + std::max(depth_below(nd.left), depth_below(nd.right));
    }
};

struct GbdtModel {
    double base_score = 0;
    std::vector<GbdtTree> trees;
    GbdtParams params;
    Eigen::Index n_features = 0;

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        double acc = base_score;
        for (const auto& tree : trees) acc += params.learning_rate * tree.predict_row(x);
        return acc;
    }
};

namespace detail {

struct SplitChoice {
    double gain = 0;
    int feature = -1;
    double threshold = 0;
};

// Gain of splitting gradient/hessian sums (GL, HL | GR, HR):
//   1/2 [ GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l) ] - gamma
inline double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
    const double parent = (gl + gr) * (gl + gr) / (hl + hr + lambda);
    return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent) - gamma;
}

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const std::vector<double>& grad, const std::vector<double>& hess,
                const GbdtParams& params, const std::vector<int>& features)
        : X_(X), grad_(grad), hess_(hess), params_(params), features_(features) {}

    GbdtTree build(std::vector<int> rows) {
        GbdtTree tree;
        grow(tree, std::move(rows), 0);
        return tree;
    }

private:
    int grow(GbdtTree& tree, std::vector<int> rows, int depth) {
        double g_sum = 0, h_sum = 0;
        for (int r : rows) {
            g_sum += grad_[static_cast<std::size_t>(r)];
            h_sum += hess_[static_cast<std::size_t>(r)];
        }

        SplitChoice best;
        if (depth < params_.max_depth && rows.size() >= 2) {
            best = find_best_split(rows, g_sum, h_sum);
        }

        const int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        if (best.feature < 0 || !(best.gain > 0)) {
            tree.nodes[static_cast<std::size_t>(idx)].leaf_weight = -g_sum / (h_sum + params_.lambda);
            return idx;
        }

        std::vector<int> left_rows, right_rows;
        left_rows.reserve(rows.size());
        right_rows.reserve(rows.size());
        for (int r : rows) {
            if (X_(r, best.feature) < best.threshold) {
                left_rows.push_back(r);
            } else {
                right_rows.push_back(r);
            }
        }
        rows.clear();
        rows.shrink_to_fit();

        tree.nodes[static_cast<std::size_t>(idx)].feature = best.feature;
        tree.nodes[static_cast<std::size_t>(idx)].threshold = best.threshold;
        const int l = grow(tree, std::move(left_rows), depth + 1);
        tree.nodes[static_cast<std::size_t>(idx)].left = l;
        const int r = grow(tree, std::move(right_rows), depth + 1);
        tree.nodes[static_cast<std::size_t>(idx)].right = r;
        return idx;
    }

    // Exact greedy: every midpoint between distinct consecutive sorted values
    // is a candidate; both children must satisfy the hessian-sum floor.
    SplitChoice find_best_split(const std::vector<int>& rows, double g_sum, double h_sum) const {
        SplitChoice best;
        std::vector<std::pair<double, int>> order(rows.size());
        for (int f : features_) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                order[i] = {X_(rows[i], f), rows[i]};
            }
            std::sort(order.begin(), order.end());
            double gl = 0, hl = 0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                gl += grad_[static_cast<std::size_t>(order[i].second)];
                hl += hess_[static_cast<std::size_t>(order[i].second)];
                if (order[i].first == order[i + 1].first) continue;
                const double gr = g_sum - gl;
                const double hr = h_sum - hl;
                if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
                const double gain = split_gain(gl, hl, gr, hr, params_.lambda, params_.gamma);
                if (gain > best.gain) {
                    best.gain = gain;
                    best.feature = f;
                    best.threshold = 0.5 * (order[i].first + order[i + 1].first);
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& X_;
    const std::vector<double>& grad_;
    const std::vector<double>& hess_;
    const GbdtParams& params_;
    const std::vector<int>& features_;
};

}  // namespace detail

// Squared-error boosting: per round g_i = yhat_i - y_i, h_i = 1, exact greedy
// splits, leaf weight -G/(H+lambda). Row and feature subsampling use streams
// derived from the seed so results are reproducible.
inline GbdtModel gbdt_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GbdtParams& params) {
    params.validate();
    if (X.rows() == 0) throw std::invalid_argument("gbdt_train: empty training matrix");
    if (X.rows() != y.size()) throw std::invalid_argument("gbdt_train: rows(X) != len(y)");
    if (!y.allFinite()) throw std::invalid_argument("gbdt_train: non-finite targets");

    GbdtModel model;
    model.params = params;
    model.n_features = X.cols();
    model.base_score = y.mean();

    const auto n = static_cast<std::size_t>(X.rows());
    std::vector<double> pred(n, model.base_score);
    std::vector<double> grad(n), hess(n, 1.0);

    Rng row_rng(derive_seed(params.rng_seed, "gbdt.rows"));
    Rng col_rng(derive_seed(params.rng_seed, "gbdt.cols"));
    const int n_cols = static_cast<int>(X.cols());
    const int cols_per_tree =
        std::max(1, static_cast<int>(std::ceil(params.colsample_by_tree * n_cols)));

    for (int round = 0; round < params.n_estimators; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            grad[i] = pred[i] - y(static_cast<Eigen::Index>(i));
        }

        std::vector<int> rows;
        rows.reserve(n);
        if (params.subsample >= 1.0) {
            for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<int>(i));
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                if (row_rng.bernoulli(params.subsample)) rows.push_back(static_cast<int>(i));
            }
            if (rows.empty()) continue;  // degenerate draw; skip the round
        }

        std::vector<int> features(static_cast<std::size_t>(n_cols));
        for (int c = 0; c < n_cols; ++c) features[static_cast<std::size_t>(c)] = c;
        if (cols_per_tree < n_cols) {
            col_rng.shuffle(features);
            features.resize(static_cast<std::size_t>(cols_per_tree));
            std::sort(features.begin(), features.end());
        }

        detail::TreeBuilder builder(X, grad, hess, params, features);
        GbdtTree tree = builder.build(std::move(rows));
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] += params.learning_rate * tree.predict_row(X.row(static_cast<Eigen::Index>(i)));
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

inline Eigen::VectorXd gbdt_predict(const GbdtModel& model, const Eigen::MatrixXd& X) {
    if (X.rows() > 0 && X.cols() != model.n_features) {
        throw std::invalid_argument("gbdt_predict: feature width does not match training");
    }
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r) out(r) = model.predict_row(X.row(r));
    return out;
}

}  // namespace sigtime
