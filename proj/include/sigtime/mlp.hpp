#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sigtime/common.hpp"

namespace sigtime {

struct MlpConfig {
    int input_dim = 100;
    std::vector<int> hidden_sizes = {550, 1000, 900, 800, 700, 600, 500, 400, 300, 200, 100};
    int output_dim = 1;
    double leaky_relu_alpha = 0.01;
    int minibatch = 32;
    int patience = 50;
    int max_epochs = 2000;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t rng_seed = 0;

    std::vector<int> layer_sizes() const {
        std::vector<int> sizes;
        sizes.push_back(input_dim);
        sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
        sizes.push_back(output_dim);
        return sizes;
    }

    void validate() const {
        if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("mlp: dimensions must be positive");
        for (int h : hidden_sizes) {
            if (h < 1) throw std::invalid_argument("mlp: hidden sizes must be positive");
        }
        if (minibatch < 1 || patience < 1 || max_epochs < 1) {
            throw std::invalid_argument("mlp: minibatch, patience and max_epochs must be positive");
        }
        if (!(learning_rate > 0)) throw std::invalid_argument("mlp: learning rate must be positive");
    }
};

// Dense network with Leaky ReLU hidden activations and an identity output.
// weights[l] has shape (size_{l+1}, size_l); samples are stored as columns.
struct MlpModel {
    MlpConfig config;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    std::vector<double> val_history;  // validation MSE per epoch
    int best_epoch = -1;
    double best_val_mse = std::numeric_limits<double>::infinity();
};

inline MlpModel mlp_init(const MlpConfig& config) {
    config.validate();
    MlpModel model;
    model.config = config;
    Rng rng(derive_seed(config.rng_seed, "mlp.init"));
    const auto sizes = config.layer_sizes();
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Eigen::MatrixXd W(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) {
                W(r, c) = rng.uniform(-bound, bound);
            }
        }
        model.weights.push_back(std::move(W));
        model.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
    }
    return model;
}

namespace detail {

inline Eigen::MatrixXd leaky_relu(const Eigen::MatrixXd& z, double alpha) {
    return z.array().max(z.array() * alpha).matrix();
}

inline Eigen::MatrixXd leaky_relu_grad(const Eigen::MatrixXd& z, double alpha) {
    return (z.array() > 0.0).select(Eigen::MatrixXd::Ones(z.rows(), z.cols()),
                                    Eigen::MatrixXd::Constant(z.rows(), z.cols(), alpha));
}

}  // namespace detail

// Batched forward pass; X has one sample per column.
inline Eigen::RowVectorXd mlp_forward_batch(const MlpModel& model, const Eigen::MatrixXd& X) {
    if (X.rows() != model.config.input_dim) {
        throw std::invalid_argument("mlp_forward: input dimension mismatch");
    }
    Eigen::MatrixXd a = X;
    const std::size_t n_layers = model.weights.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd z = (model.weights[l] * a).colwise() + model.biases[l];
        a = (l + 1 < n_layers) ? detail::leaky_relu(z, model.config.leaky_relu_alpha) : std::move(z);
    }
    return a.row(0);
}

inline double mlp_forward(const MlpModel& model, const Eigen::VectorXd& x) {
    if (!x.allFinite()) throw std::invalid_argument("mlp_forward: non-finite input");
    return mlp_forward_batch(model, x)(0);
}

struct MlpGradients {
    double loss = 0;  // mean squared error over the batch
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_biases;
};

// Analytic backpropagation of the batch MSE. Kept public so the
// finite-difference oracle can check it coordinate by coordinate.
inline MlpGradients mlp_gradients(const MlpModel& model, const Eigen::MatrixXd& X, const Eigen::RowVectorXd& y) {
    const std::size_t n_layers = model.weights.size();
    const double batch = static_cast<double>(X.cols());

    std::vector<Eigen::MatrixXd> activations;  // a_0 .. a_L
    std::vector<Eigen::MatrixXd> pre_acts;     // z_1 .. z_L
    activations.reserve(n_layers + 1);
    pre_acts.reserve(n_layers);
    activations.push_back(X);
    for (std::size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd z = (model.weights[l] * activations.back()).colwise() + model.biases[l];
        pre_acts.push_back(z);
        activations.push_back(l + 1 < n_layers ? detail::leaky_relu(z, model.config.leaky_relu_alpha)
                                               : std::move(z));
    }

    MlpGradients g;
    g.d_weights.resize(n_layers);
    g.d_biases.resize(n_layers);

    const Eigen::RowVectorXd resid = activations.back().row(0) - y;
    g.loss = resid.squaredNorm() / batch;

    Eigen::MatrixXd delta = (2.0 / batch) * resid;  // dL/dz_L (identity output)
    for (std::size_t l = n_layers; l-- > 0;) {
        g.d_weights[l] = delta * activations[l].transpose();
        g.d_biases[l] = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd da = model.weights[l].transpose() * delta;
            delta = da.cwiseProduct(detail::leaky_relu_grad(pre_acts[l - 1], model.config.leaky_relu_alpha));
        }
    }
    return g;
}

inline double mlp_mse(const MlpModel& model, const Eigen::MatrixXd& X, const Eigen::RowVectorXd& y) {
    const Eigen::RowVectorXd pred = mlp_forward_batch(model, X);
    return (pred - y).squaredNorm() / static_cast<double>(X.cols());
}

// Minibatch Adam on the MSE with early stopping: monitors validation MSE,
// stops after `patience` epochs without improvement, restores best weights.
inline MlpModel mlp_train(MlpModel model, const Eigen::MatrixXd& X_train, const Eigen::RowVectorXd& y_train,
                          const Eigen::MatrixXd& X_val, const Eigen::RowVectorXd& y_val) {
    const MlpConfig& cfg = model.config;
    if (X_val.cols() == 0) {
        throw std::invalid_argument("mlp_train: empty validation set (patience undefined without it)");
    }
    if (X_train.cols() == 0) throw std::invalid_argument("mlp_train: empty training set");
    if (X_train.cols() != y_train.cols() || X_val.cols() != y_val.cols()) {
        throw std::invalid_argument("mlp_train: feature/target size mismatch");
    }

    const std::size_t n_layers = model.weights.size();
    std::vector<Eigen::MatrixXd> mW(n_layers), vW(n_layers);
    std::vector<Eigen::VectorXd> mB(n_layers), vB(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        mW[l] = Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols());
        vW[l] = mW[l];
        mB[l] = Eigen::VectorXd::Zero(model.biases[l].size());
        vB[l] = mB[l];
    }

    std::vector<Eigen::MatrixXd> best_weights = model.weights;
    std::vector<Eigen::VectorXd> best_biases = model.biases;

    Rng rng(derive_seed(cfg.rng_seed, "mlp.shuffle"));
    std::vector<int> order(static_cast<std::size_t>(X_train.cols()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    long step = 0;
    int since_best = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.minibatch)) {
            const std::size_t count = std::min(static_cast<std::size_t>(cfg.minibatch), order.size() - start);
            Eigen::MatrixXd Xb(X_train.rows(), static_cast<Eigen::Index>(count));
            Eigen::RowVectorXd yb(static_cast<Eigen::Index>(count));
            for (std::size_t i = 0; i < count; ++i) {
                Xb.col(static_cast<Eigen::Index>(i)) = X_train.col(order[start + i]);
                yb(static_cast<Eigen::Index>(i)) = y_train(order[start + i]);
            }

            const MlpGradients g = mlp_gradients(model, Xb, yb);
            ++step;
            const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
            for (std::size_t l = 0; l < n_layers; ++l) {
                mW[l] = cfg.adam_beta1 * mW[l] + (1.0 - cfg.adam_beta1) * g.d_weights[l];
                vW[l] = cfg.adam_beta2 * vW[l] + (1.0 - cfg.adam_beta2) * g.d_weights[l].cwiseProduct(g.d_weights[l]);
                model.weights[l] -= (cfg.learning_rate * (mW[l] / bc1).array() /
                                     ((vW[l] / bc2).array().sqrt() + cfg.adam_epsilon))
                                        .matrix();
                mB[l] = cfg.adam_beta1 * mB[l] + (1.0 - cfg.adam_beta1) * g.d_biases[l];
                vB[l] = cfg.adam_beta2 * vB[l] + (1.0 - cfg.adam_beta2) * g.d_biases[l].cwiseProduct(g.d_biases[l]);
                model.biases[l] -= (cfg.learning_rate * (mB[l] / bc1).array() /
                                    ((vB[l] / bc2).array().sqrt() + cfg.adam_epsilon))
                                       .matrix();
            }
        }

        const double val_mse = mlp_mse(model, X_val, y_val);
        model.val_history.push_back(val_mse);
        if (val_mse < model.best_val_mse) {
            model.best_val_mse = val_mse;
            model.best_epoch = epoch;
            best_weights = model.weights;
            best_biases = model.biases;
            since_best = 0;
        } else {
            ++since_best;
            if (since_best >= cfg.patience) break;
        }
    }

    model.weights = std::move(best_weights);
    model.biases = std::move(best_biases);
    return model;
}

}  // namespace sigtime
