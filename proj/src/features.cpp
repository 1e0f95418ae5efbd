#include "gravbench/features.hpp"

#include <cmath>

#include "gravbench/gravity.hpp"

namespace gravbench {

Scaler fit_scaler(const Eigen::MatrixXd& X) {
    Scaler scaler;
    const Eigen::Index p = X.cols();
    scaler.mean.resize(p);
    scaler.sd.resize(p);
    scaler.constant.assign(static_cast<std::size_t>(p), 0);
    const double n = static_cast<double>(X.rows());
    for (Eigen::Index j = 0; j < p; ++j) {
        const double mean = X.col(j).mean();
        const double var = (X.col(j).array() - mean).square().sum() / n;
        scaler.mean[j] = mean;
        scaler.sd[j] = std::sqrt(var);
        if (scaler.sd[j] == 0.0) scaler.constant[static_cast<std::size_t>(j)] = 1;
    }
    return scaler;
}

Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& X) {
    Eigen::MatrixXd out(X.rows(), X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (scaler.constant[static_cast<std::size_t>(j)]) {
            out.col(j).setZero();
        } else {
            out.col(j) = (X.col(j).array() - scaler.mean[j]) / scaler.sd[j];
        }
    }
    return out;
}

namespace {

Eigen::MatrixXd raw_features(const TradePanel& panel, std::span<const std::int32_t> rows,
                             const PpmlFit* fe_fit, std::vector<std::string>* names) {
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index p = kNumCovariates + (fe_fit ? 3 : 0);
    Eigen::MatrixXd X(n, p);
    names->clear();
    for (int c = 0; c < kNumCovariates; ++c) {
        names->push_back(kCovariateNames[c]);
        for (Eigen::Index i = 0; i < n; ++i) X(i, c) = panel.covariate(rows[i], c);
    }
    if (fe_fit) {
        if (fe_fit->fe.size() != 3)
            throw Error("build_features: fe_fit must carry three dimensions");
        names->push_back("fe_exporter_year");
        names->push_back("fe_importer_year");
        names->push_back("fe_pair");
        for (Eigen::Index i = 0; i < n; ++i) {
            const std::int32_t row = rows[i];
            const auto ey = country_year_key(panel.exporter_id(row), panel.year(row));
            const auto iy = country_year_key(panel.importer_id(row), panel.year(row));
            X(i, kNumCovariates + 0) = fe_fit->fe[0].value_for(ey);
            X(i, kNumCovariates + 1) = fe_fit->fe[1].value_for(iy);
            X(i, kNumCovariates + 2) = fe_fit->fe[2].value_for(panel.pair_id(row));
        }
    }
    return X;
}

}  // namespace

FeatureSet build_features(const TradePanel& panel, std::span<const std::int32_t> rows,
                          const PpmlFit* fe_fit, bool standardize) {
    FeatureSet fs;
    fs.X = raw_features(panel, rows, fe_fit, &fs.names);
    if (standardize) {
        fs.scaler = fit_scaler(fs.X);
        fs.X = apply_scaler(*fs.scaler, fs.X);
        fs.standardized = true;
    }
    return fs;
}

FeatureSet build_features_like(const FeatureSet& train, const TradePanel& panel,
                               std::span<const std::int32_t> rows, const PpmlFit* fe_fit) {
    FeatureSet fs;
    fs.X = raw_features(panel, rows, fe_fit, &fs.names);
    if (fs.names != train.names) throw Error("build_features_like: feature layout mismatch");
    if (train.standardized) {
        fs.X = apply_scaler(*train.scaler, fs.X);
        fs.standardized = true;
        fs.scaler = train.scaler;
    }
    return fs;
}

}  // namespace gravbench
