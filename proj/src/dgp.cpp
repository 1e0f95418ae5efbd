#include "gravbench/dgp.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "gravbench/common.hpp"

namespace gravbench {

namespace {

std::string country_code(char prefix, int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%c%03d", prefix, index + 1);
    return buf;
}

constexpr std::uint64_t kTagGdp = 1;
constexpr std::uint64_t kTagDist = 2;
constexpr std::uint64_t kTagDummies = 3;
constexpr std::uint64_t kTagEffects = 4;
constexpr std::uint64_t kTagTreat = 5;
constexpr std::uint64_t kTagError = 6;

}  // namespace

GeneratedPanel generate_panel(const DgpParams& params) {
    const int ne = params.n_exporters;
    const int ni = params.n_importers;
    const int ny = params.n_years;
    if (ne < 1 || ni < 1 || ny < 1 || static_cast<long>(ne) * ni * ny < 50)
        throw Error("generate_panel: need n_exporters*n_importers*n_years >= 50");
    if (params.sd_exporter_year < 0 || params.sd_importer_year < 0 || params.sd_pair < 0)
        throw Error("generate_panel: effect standard deviations must be >= 0");
    if (std::fabs(params.selection_link) > 1.0)
        throw Error("generate_panel: selection_link must be in [-1, 1]");

    // Log GDPs as country-year random walks.
    Rng rng_gdp = Rng::from(params.seed, {kTagGdp});
    Eigen::MatrixXd ln_gdp_exp(ne, ny), ln_gdp_imp(ni, ny);
    for (int i = 0; i < ne; ++i) {
        ln_gdp_exp(i, 0) = rng_gdp.normal(10.0, 1.0);
        for (int t = 1; t < ny; ++t)
            ln_gdp_exp(i, t) = ln_gdp_exp(i, t - 1) + rng_gdp.normal(0.02, 0.1);
    }
    for (int j = 0; j < ni; ++j) {
        ln_gdp_imp(j, 0) = rng_gdp.normal(10.0, 1.0);
        for (int t = 1; t < ny; ++t)
            ln_gdp_imp(j, t) = ln_gdp_imp(j, t - 1) + rng_gdp.normal(0.02, 0.1);
    }

    const int n_pairs = ne * ni;
    Rng rng_dist = Rng::from(params.seed, {kTagDist});
    Eigen::VectorXd ln_dist(n_pairs);
    for (int p = 0; p < n_pairs; ++p) ln_dist[p] = rng_dist.normal(8.0, 0.75);

    Rng rng_dummies = Rng::from(params.seed, {kTagDummies});
    Eigen::MatrixXd pair_dummy(n_pairs, 3);  // contig, comlang, colony
    for (int p = 0; p < n_pairs; ++p) {
        pair_dummy(p, 0) = rng_dummies.bernoulli(0.05) ? 1.0 : 0.0;
        pair_dummy(p, 1) = rng_dummies.bernoulli(0.15) ? 1.0 : 0.0;
        pair_dummy(p, 2) = rng_dummies.bernoulli(0.05) ? 1.0 : 0.0;
    }

    Rng rng_fe = Rng::from(params.seed, {kTagEffects});
    Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(ne, ny);
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(ni, ny);
    for (int i = 0; i < ne; ++i)
        for (int t = 0; t < ny; ++t) alpha(i, t) = rng_fe.normal(0.0, params.sd_exporter_year);
    for (int j = 0; j < ni; ++j)
        for (int t = 0; t < ny; ++t) gamma(j, t) = rng_fe.normal(0.0, params.sd_importer_year);
    Eigen::VectorXd eta(n_pairs);
    const double rho = params.selection_link;
    for (int p = 0; p < n_pairs; ++p) {
        const double covariate_score = (8.0 - ln_dist[p]) / 0.75;  // closer pairs score higher
        eta[p] = params.sd_pair *
                 (rho * covariate_score + std::sqrt(1.0 - rho * rho) * rng_fe.normal());
    }

    Rng rng_treat = Rng::from(params.seed, {kTagTreat});
    Rng rng_error = Rng::from(params.seed, {kTagError});

    const std::size_t n = static_cast<std::size_t>(n_pairs) * ny;
    std::vector<Observation> rows;
    rows.reserve(n);
    DgpTruth truth;
    truth.mu.resize(static_cast<Eigen::Index>(n));
    truth.treated.resize(n, 0);
    truth.alpha_row.resize(static_cast<Eigen::Index>(n));
    truth.gamma_row.resize(static_cast<Eigen::Index>(n));
    truth.eta_row.resize(static_cast<Eigen::Index>(n));
    truth.intercept = params.intercept;
    truth.beta = params.beta;
    truth.tau = params.tau;

    const double ln_sigma = params.lognormal_sigma;
    std::size_t row_index = 0;
    for (int i = 0; i < ne; ++i) {
        for (int j = 0; j < ni; ++j) {
            const int p = i * ni + j;
            for (int t = 0; t < ny; ++t, ++row_index) {
                Observation row;
                row.exporter = country_code('E', i);
                row.importer = country_code('I', j);
                row.year = params.first_year + t;
                row.covariates[0] = ln_gdp_exp(i, t);
                row.covariates[1] = ln_gdp_imp(j, t);
                row.covariates[2] = ln_dist[p];
                row.covariates[3] = rng_dummies.bernoulli(0.08) ? 1.0 : 0.0;  // eu
                row.covariates[4] = rng_dummies.bernoulli(0.05) ? 1.0 : 0.0;  // cu
                row.covariates[5] = rng_dummies.bernoulli(0.25) ? 1.0 : 0.0;  // rta
                row.covariates[6] = pair_dummy(p, 0);
                row.covariates[7] = pair_dummy(p, 1);
                row.covariates[8] = pair_dummy(p, 2);
                row.covariates[9] = rng_dummies.bernoulli(0.03) ? 1.0 : 0.0;  // sanction

                const bool treated = params.treat_prob > 0.0 && rng_treat.bernoulli(params.treat_prob);
                double link = params.intercept;
                for (int c = 0; c < kNumCovariates; ++c)
                    link += params.beta[c] * row.covariates[c];
                link += alpha(i, t) + gamma(j, t) + eta[p];
                if (treated) link += params.tau;
                if (link > 700.0)
                    throw Error("generate_panel: exp overflow; parameters rejected");
                const double mu = std::exp(link);

                double y;
                if (params.error_kind == DgpParams::ErrorKind::Poisson) {
                    y = static_cast<double>(rng_error.poisson(mu));
                } else {
                    y = mu * std::exp(ln_sigma * rng_error.normal() - 0.5 * ln_sigma * ln_sigma);
                }
                row.trade = y;

                truth.mu[static_cast<Eigen::Index>(row_index)] = mu;
                truth.treated[row_index] = treated ? 1 : 0;
                truth.alpha_row[static_cast<Eigen::Index>(row_index)] = alpha(i, t);
                truth.gamma_row[static_cast<Eigen::Index>(row_index)] = gamma(j, t);
                truth.eta_row[static_cast<Eigen::Index>(row_index)] = eta[p];
                rows.push_back(std::move(row));
            }
        }
    }

    GeneratedPanel out{TradePanel::from_observations(std::move(rows)), std::move(truth)};
    return out;
}

Eigen::VectorXd true_counterfactual(const DgpTruth& truth, std::span<const std::int32_t> rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::int32_t r = rows[i];
        out[static_cast<Eigen::Index>(i)] =
            truth.treated[r] ? truth.mu[r] * std::exp(-truth.tau) : truth.mu[r];
    }
    return out;
}

}  // namespace gravbench
