#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "gravbench/features.hpp"

namespace gravbench {

struct MlpParams {
    int hidden = 100;
    int max_epochs = 500;
    double learning_rate = 1e-3;  // Adam step size
    int batch_size = 200;
    double tol = 1e-6;  // relative change of full-sample loss per epoch
};

struct MlpWeights {
    Eigen::MatrixXd w1;  // hidden x inputs
    Eigen::VectorXd b1;  // hidden
    Eigen::VectorXd w2;  // hidden
    double b2 = 0.0;

    Eigen::Index size() const { return w1.size() + b1.size() + w2.size() + 1; }
};

Eigen::VectorXd pack_weights(const MlpWeights& weights);
MlpWeights unpack_weights(const Eigen::VectorXd& flat, Eigen::Index inputs, Eigen::Index hidden);

// Mean Poisson negative log likelihood (up to the y!-term) of the network
// eta = w2'relu(w1 x + b1) + b2, mu = exp(eta).
double mlp_poisson_nll(const MlpWeights& weights, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y);
Eigen::VectorXd mlp_poisson_nll_grad(const MlpWeights& weights, const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y);

// Single-hidden-layer rectifier network with exponential output, trained by
// mini-batch Adam on the Poisson loss. Requires standardized features; all
// predictions are strictly positive. Deterministic given the seed.
class PoissonMlpModel {
public:
    static PoissonMlpModel fit(const FeatureSet& features, const Eigen::VectorXd& y,
                               const MlpParams& params, std::uint64_t seed);

    // X must already be standardized with the training scaler.
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

    const MlpWeights& weights() const { return weights_; }
    int epochs() const { return epochs_; }

private:
    MlpWeights weights_;
    int epochs_ = 0;
};

}  // namespace gravbench
