#include "gravbench/mlp.hpp"

#include <cmath>

#include "gravbench/common.hpp"
#include "gravbench/rng.hpp"

namespace gravbench {

Eigen::VectorXd pack_weights(const MlpWeights& weights) {
    Eigen::VectorXd flat(weights.size());
    Eigen::Index pos = 0;
    for (Eigen::Index j = 0; j < weights.w1.cols(); ++j)
        for (Eigen::Index h = 0; h < weights.w1.rows(); ++h) flat[pos++] = weights.w1(h, j);
    for (Eigen::Index h = 0; h < weights.b1.size(); ++h) flat[pos++] = weights.b1[h];
    for (Eigen::Index h = 0; h < weights.w2.size(); ++h) flat[pos++] = weights.w2[h];
    flat[pos++] = weights.b2;
    return flat;
}

MlpWeights unpack_weights(const Eigen::VectorXd& flat, Eigen::Index inputs,
                          Eigen::Index hidden) {
    MlpWeights weights;
    weights.w1.resize(hidden, inputs);
    weights.b1.resize(hidden);
    weights.w2.resize(hidden);
    Eigen::Index pos = 0;
    for (Eigen::Index j = 0; j < inputs; ++j)
        for (Eigen::Index h = 0; h < hidden; ++h) weights.w1(h, j) = flat[pos++];
    for (Eigen::Index h = 0; h < hidden; ++h) weights.b1[h] = flat[pos++];
    for (Eigen::Index h = 0; h < hidden; ++h) weights.w2[h] = flat[pos++];
    weights.b2 = flat[pos++];
    return weights;
}

namespace {

// Hidden activations and linear outputs for a row block.
void forward(const MlpWeights& weights, const Eigen::MatrixXd& X, Eigen::MatrixXd* hidden,
             Eigen::VectorXd* eta) {
    *hidden = ((X * weights.w1.transpose()).rowwise() + weights.b1.transpose())
                  .cwiseMax(0.0);
    *eta = (*hidden * weights.w2).array() + weights.b2;
}

}  // namespace

double mlp_poisson_nll(const MlpWeights& weights, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y) {
    Eigen::MatrixXd hidden;
    Eigen::VectorXd eta;
    forward(weights, X, &hidden, &eta);
    const Eigen::ArrayXd mu = eta.array().exp();
    return (mu - y.array() * eta.array()).mean();
}

Eigen::VectorXd mlp_poisson_nll_grad(const MlpWeights& weights, const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y) {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd hidden;
    Eigen::VectorXd eta;
    forward(weights, X, &hidden, &eta);
    const Eigen::VectorXd d_eta =
        ((eta.array().exp() - y.array()) / static_cast<double>(n)).matrix();

    MlpWeights grad;
    grad.b2 = d_eta.sum();
    grad.w2 = hidden.transpose() * d_eta;
    Eigen::MatrixXd d_hidden = d_eta * weights.w2.transpose();  // n x hidden
    d_hidden = (hidden.array() > 0.0).select(d_hidden, 0.0);
    grad.w1 = d_hidden.transpose() * X;
    grad.b1 = d_hidden.colwise().sum().transpose();
    return pack_weights(grad);
}

PoissonMlpModel PoissonMlpModel::fit(const FeatureSet& features, const Eigen::VectorXd& y,
                                     const MlpParams& params, std::uint64_t seed) {
    if (!features.standardized)
        throw Error("poisson mlp: features must be standardized");
    const Eigen::MatrixXd& X = features.X;
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (n != y.size()) throw Error("poisson mlp: row count mismatch");
    if ((y.array() < 0.0).any()) throw Error("poisson mlp: outcomes must be >= 0");

    const Eigen::Index hidden = params.hidden;
    Rng rng = Rng::from(seed, {0x6d6c70ULL});

    PoissonMlpModel model;
    auto& weights = model.weights_;
    weights.w1.resize(hidden, p);
    weights.b1 = Eigen::VectorXd::Zero(hidden);
    weights.w2.resize(hidden);
    const double limit1 = std::sqrt(6.0 / static_cast<double>(p + hidden));
    const double limit2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    for (Eigen::Index h = 0; h < hidden; ++h)
        for (Eigen::Index j = 0; j < p; ++j) weights.w1(h, j) = rng.uniform(-limit1, limit1);
    for (Eigen::Index h = 0; h < hidden; ++h) weights.w2[h] = rng.uniform(-limit2, limit2);
    weights.b2 = std::log(y.mean() + 1e-12);  // start predictions at the sample mean

    Eigen::VectorXd theta = pack_weights(weights);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;

    const int batch_size = std::min<Eigen::Index>(params.batch_size, n);
    std::vector<std::int32_t> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    double prev_loss = mlp_poisson_nll(weights, X, y);
    for (int epoch = 1; epoch <= params.max_epochs; ++epoch) {
        model.epochs_ = epoch;
        rng.shuffle(order);
        for (Eigen::Index start = 0; start < n; start += batch_size) {
            const Eigen::Index size = std::min<Eigen::Index>(batch_size, n - start);
            Eigen::MatrixXd xb(size, p);
            Eigen::VectorXd yb(size);
            for (Eigen::Index i = 0; i < size; ++i) {
                xb.row(i) = X.row(order[static_cast<std::size_t>(start + i)]);
                yb[i] = y[order[static_cast<std::size_t>(start + i)]];
            }
            const Eigen::VectorXd grad = mlp_poisson_nll_grad(weights, xb, yb);
            ++step;
            m = beta1 * m + (1.0 - beta1) * grad;
            v = beta2 * v.array().matrix() + (1.0 - beta2) * grad.array().square().matrix();
            const double mc = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double vc = 1.0 - std::pow(beta2, static_cast<double>(step));
            theta.array() -= params.learning_rate * (m.array() / mc) /
                             ((v.array() / vc).sqrt() + eps);
            weights = unpack_weights(theta, p, hidden);
        }
        const double loss = mlp_poisson_nll(weights, X, y);
        if (!std::isfinite(loss))
            throw Error("poisson mlp: loss diverged at epoch " + std::to_string(epoch));
        if (std::fabs(loss - prev_loss) / (1e-10 + std::fabs(prev_loss)) < params.tol) {
            prev_loss = loss;
            break;
        }
        prev_loss = loss;
    }
    return model;
}

Eigen::VectorXd PoissonMlpModel::predict(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd hidden;
    Eigen::VectorXd eta;
    forward(weights_, X, &hidden, &eta);
    return eta.array().min(700.0).exp();
}

}  // namespace gravbench
