#include "gravbench/ppml.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gravbench {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LayoutDim {
    std::string name;
    std::function<std::string(std::int64_t)> label;
    std::vector<std::int32_t> gid;  // per active row
    std::int32_t n_groups = 0;
    std::vector<std::int64_t> group_key;
    std::unordered_map<std::int64_t, std::int32_t> group_of;
};

std::vector<LayoutDim> build_layout(const std::vector<FeDimension>& fe,
                                    std::span<const std::int32_t> rows) {
    std::vector<LayoutDim> dims;
    dims.reserve(fe.size());
    for (const auto& dim : fe) {
        LayoutDim layout;
        layout.name = dim.name;
        layout.label = dim.label;
        layout.gid.reserve(rows.size());
        for (std::int32_t row : rows) {
            const std::int64_t key = dim.keys[row];
            auto [it, inserted] = layout.group_of.emplace(key, layout.n_groups);
            if (inserted) {
                layout.group_key.push_back(key);
                ++layout.n_groups;
            }
            layout.gid.push_back(it->second);
        }
        dims.push_back(std::move(layout));
    }
    return dims;
}

// Gauss-Seidel alternating projections: per sweep, every dimension's
// (weighted) group means are subtracted from every column, using values
// updated by earlier dimensions in the same sweep. Stops when the largest
// group mean, relative to the column's scale, falls below tol.
int demean(RowMajorMatrix& M, const std::vector<LayoutDim>& dims, const double* w,
           const Eigen::VectorXd& scale, double tol, int max_sweeps) {
    if (dims.empty() || M.rows() == 0 || M.cols() == 0) return 0;
    const Eigen::Index n = M.rows();
    const Eigen::Index c = M.cols();

    std::vector<Eigen::VectorXd> wsum(dims.size());
    for (std::size_t d = 0; d < dims.size(); ++d) {
        wsum[d].setZero(dims[d].n_groups);
        for (Eigen::Index i = 0; i < n; ++i)
            wsum[d][dims[d].gid[i]] += w ? w[i] : 1.0;
    }

    RowMajorMatrix acc;
    int sweep = 0;
    while (sweep < max_sweeps) {
        ++sweep;
        double worst = 0.0;
        for (std::size_t d = 0; d < dims.size(); ++d) {
            const auto& gid = dims[d].gid;
            acc.setZero(dims[d].n_groups, c);
            if (w) {
                for (Eigen::Index i = 0; i < n; ++i) acc.row(gid[i]) += w[i] * M.row(i);
            } else {
                for (Eigen::Index i = 0; i < n; ++i) acc.row(gid[i]) += M.row(i);
            }
            for (std::int32_t g = 0; g < dims[d].n_groups; ++g) {
                acc.row(g) /= wsum[d][g];
                for (Eigen::Index col = 0; col < c; ++col)
                    worst = std::max(worst, std::fabs(acc(g, col)) / scale[col]);
            }
            for (Eigen::Index i = 0; i < n; ++i) M.row(i) -= acc.row(gid[i]);
        }
        if (worst < tol) break;
    }
    return sweep;
}

struct UnionFind {
    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
    std::vector<std::size_t> parent;
};

int count_components(const std::vector<LayoutDim>& dims, std::size_t n_rows,
                     std::vector<std::vector<std::int32_t>>* component_of = nullptr) {
    if (dims.empty()) return 0;
    std::vector<std::size_t> offset(dims.size(), 0);
    std::size_t total = 0;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        offset[d] = total;
        total += static_cast<std::size_t>(dims[d].n_groups);
    }
    UnionFind uf(total);
    for (std::size_t i = 0; i < n_rows; ++i)
        for (std::size_t d = 1; d < dims.size(); ++d)
            uf.unite(offset[0] + dims[0].gid[i], offset[d] + dims[d].gid[i]);

    std::unordered_map<std::size_t, std::int32_t> root_id;
    for (std::size_t x = 0; x < total; ++x) {
        const std::size_t root = uf.find(x);
        root_id.emplace(root, static_cast<std::int32_t>(root_id.size()));
    }
    if (component_of) {
        component_of->assign(dims.size(), {});
        for (std::size_t d = 0; d < dims.size(); ++d) {
            (*component_of)[d].resize(dims[d].n_groups);
            for (std::int32_t g = 0; g < dims[d].n_groups; ++g)
                (*component_of)[d][g] = root_id[uf.find(offset[d] + g)];
        }
    }
    return static_cast<int>(root_id.size());
}

// Decomposes target into additive per-dimension group values by unweighted
// alternating projections, then normalizes: dimensions after the first are
// mean-zero within each connected component.
std::vector<FeValues> decompose_fe(const Eigen::VectorXd& target,
                                   const std::vector<LayoutDim>& dims,
                                   const PpmlOptions& opts, int components,
                                   const std::vector<std::vector<std::int32_t>>& component_of) {
    const Eigen::Index n = target.size();
    std::vector<Eigen::VectorXd> values(dims.size());
    std::vector<Eigen::VectorXd> counts(dims.size());
    for (std::size_t d = 0; d < dims.size(); ++d) {
        values[d].setZero(dims[d].n_groups);
        counts[d].setZero(dims[d].n_groups);
        for (Eigen::Index i = 0; i < n; ++i) counts[d][dims[d].gid[i]] += 1.0;
    }

    Eigen::VectorXd resid = target;
    const double scale = std::max(1.0, resid.cwiseAbs().maxCoeff());
    const double tol = 1e-13 * scale;
    Eigen::VectorXd mean;
    for (int sweep = 0; sweep < opts.max_recover_sweeps; ++sweep) {
        double worst = 0.0;
        for (std::size_t d = 0; d < dims.size(); ++d) {
            const auto& gid = dims[d].gid;
            mean.setZero(dims[d].n_groups);
            for (Eigen::Index i = 0; i < n; ++i) mean[gid[i]] += resid[i];
            mean.array() /= counts[d].array();
            worst = std::max(worst, mean.cwiseAbs().maxCoeff());
            values[d] += mean;
            for (Eigen::Index i = 0; i < n; ++i) resid[i] -= mean[gid[i]];
        }
        if (worst < tol) break;
    }
    const double max_resid = n > 0 ? resid.cwiseAbs().maxCoeff() : 0.0;
    if (max_resid > opts.tol_recover) {
        throw Error("fixed-effect recovery residual " + std::to_string(max_resid) +
                    " exceeds tolerance; design has " + std::to_string(components) +
                    " connected component(s)");
    }

    if (dims.size() >= 2) {
        std::vector<double> shift(static_cast<std::size_t>(components), 0.0);
        for (std::size_t d = 1; d < dims.size(); ++d) {
            std::vector<double> sum(static_cast<std::size_t>(components), 0.0);
            std::vector<int> cnt(static_cast<std::size_t>(components), 0);
            for (std::int32_t g = 0; g < dims[d].n_groups; ++g) {
                sum[component_of[d][g]] += values[d][g];
                ++cnt[component_of[d][g]];
            }
            for (std::int32_t g = 0; g < dims[d].n_groups; ++g) {
                const auto comp = component_of[d][g];
                values[d][g] -= sum[comp] / cnt[comp];
            }
            for (int comp = 0; comp < components; ++comp)
                if (cnt[comp] > 0) shift[comp] += sum[comp] / cnt[comp];
        }
        for (std::int32_t g = 0; g < dims[0].n_groups; ++g)
            values[0][g] += shift[component_of[0][g]];
    }

    std::vector<FeValues> out(dims.size());
    for (std::size_t d = 0; d < dims.size(); ++d) {
        out[d].name = dims[d].name;
        out[d].group_of = dims[d].group_of;
        out[d].group_key = dims[d].group_key;
        out[d].values = std::move(values[d]);
        out[d].label = dims[d].label;
    }
    return out;
}

std::vector<std::int32_t> all_rows(Eigen::Index n) {
    std::vector<std::int32_t> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

// Iteratively flags rows belonging to groups whose outcome sum is zero; the
// Poisson MLE does not exist for those groups.
std::vector<std::int32_t> screen_separation(const Eigen::VectorXd& y,
                                            const std::vector<FeDimension>& fe,
                                            std::size_t* flagged) {
    std::vector<char> active(static_cast<std::size_t>(y.size()), 1);
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& dim : fe) {
            std::unordered_map<std::int64_t, double> group_sum;
            for (Eigen::Index i = 0; i < y.size(); ++i)
                if (active[i]) group_sum[dim.keys[i]] += y[i];
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                if (active[i] && group_sum[dim.keys[i]] == 0.0) {
                    active[i] = 0;
                    changed = true;
                }
            }
        }
    }
    std::vector<std::int32_t> rows;
    rows.reserve(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (active[i]) rows.push_back(static_cast<std::int32_t>(i));
    *flagged = static_cast<std::size_t>(y.size()) - rows.size();
    return rows;
}

}  // namespace

double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] > 0.0) {
            dev += y[i] * std::log(y[i] / mu[i]) - (y[i] - mu[i]);
        } else {
            dev += mu[i];
        }
    }
    return 2.0 * dev;
}

CollinearityResult drop_collinear(const Eigen::MatrixXd& X,
                                  const std::vector<FeDimension>& fe, double tol_rank,
                                  std::span<const std::int32_t> rows) {
    CollinearityResult result;
    const Eigen::Index p = X.cols();
    if (p == 0) return result;

    std::vector<std::int32_t> default_rows;
    if (rows.empty()) {
        default_rows = all_rows(X.rows());
        rows = default_rows;
    }
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const auto dims = build_layout(fe, rows);

    RowMajorMatrix work(n, p);
    std::vector<char> zero_column(static_cast<std::size_t>(p), 0);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) work(i, j) = X(rows[i], j);
        const double norm = work.col(j).norm();
        if (norm == 0.0) {
            zero_column[j] = 1;
        } else {
            work.col(j) /= norm;  // scale invariance
        }
    }
    const Eigen::VectorXd scale = Eigen::VectorXd::Ones(p);
    demean(work, dims, nullptr, scale, 1e-12, 2000);

    Eigen::MatrixXd basis(n, p);  // orthonormal columns of kept transforms
    Eigen::Index basis_cols = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
        const int col = static_cast<int>(j);
        // Columns were unit-normalized, so the squared norm of the
        // transformed column is already the within/total variance ratio.
        if (zero_column[j] || work.col(j).squaredNorm() <= tol_rank) {
            result.dropped.push_back(col);
            continue;
        }
        Eigen::VectorXd v = work.col(j);
        const double within = v.squaredNorm();
        if (basis_cols > 0) {
            const auto Q = basis.leftCols(basis_cols);
            v -= Q * (Q.transpose() * v);
            v -= Q * (Q.transpose() * v);  // reorthogonalize
        }
        if (v.squaredNorm() <= tol_rank * within) {
            result.dropped.push_back(col);
            continue;
        }
        basis.col(basis_cols++) = v / v.norm();
        result.kept.push_back(col);
    }
    return result;
}

std::vector<FeValues> recover_fixed_effects(const PpmlFit& fit, const Eigen::MatrixXd& X,
                                            const std::vector<FeDimension>& fe,
                                            const PpmlOptions& opts) {
    if (!fit.converged) throw Error("recover_fixed_effects: fit did not converge");
    const auto& rows = fit.active_rows;
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    Eigen::VectorXd target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double eta = std::log(fit.fitted_mu[i]);
        for (std::size_t j = 0; j < fit.kept_columns.size(); ++j)
            eta -= fit.beta[static_cast<Eigen::Index>(j)] * X(rows[i], fit.kept_columns[j]);
        target[i] = eta;
    }
    const auto dims = build_layout(fe, rows);
    std::vector<std::vector<std::int32_t>> component_of;
    const int components = count_components(dims, rows.size(), &component_of);
    return decompose_fe(target, dims, opts, components, component_of);
}

double PpmlFit::predict_mu(std::span<const double> full_row,
                           std::span<const std::int64_t> keys) const {
    if (keys.size() != fe.size())
        throw Error("predict_mu: expected " + std::to_string(fe.size()) + " group keys");
    double eta = 0.0;
    for (std::size_t j = 0; j < kept_columns.size(); ++j)
        eta += beta[static_cast<Eigen::Index>(j)] * full_row[kept_columns[j]];
    for (std::size_t d = 0; d < fe.size(); ++d) eta += fe[d].value_for(keys[d]);
    return std::exp(eta);
}

PpmlFit fit_ppml(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                 const std::vector<std::string>& names, const std::vector<FeDimension>& fe,
                 const PpmlOptions& opts) {
    const Eigen::Index n_total = y.size();
    if (X.rows() != n_total) throw Error("fit_ppml: y and X row counts differ");
    if (static_cast<Eigen::Index>(names.size()) != X.cols())
        throw Error("fit_ppml: one name per design column required");
    for (const auto& dim : fe)
        if (static_cast<Eigen::Index>(dim.keys.size()) != n_total)
            throw Error("fit_ppml: dimension '" + dim.name + "' has wrong key count");
    for (Eigen::Index i = 0; i < n_total; ++i)
        if (!(y[i] >= 0.0) || !std::isfinite(y[i]))
            throw Error("fit_ppml: outcome must be finite and non-negative");
    if (!(y.array() > 0.0).any()) throw Error("fit_ppml: all outcomes are zero");

    PpmlFit fit;
    fit.active_rows = screen_separation(y, fe, &fit.separated_rows);
    const auto& rows = fit.active_rows;
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());

    const auto collinearity = drop_collinear(X, fe, opts.tol_rank, rows);
    fit.kept_columns = collinearity.kept;
    fit.dropped_columns = collinearity.dropped;
    for (int j : collinearity.kept) fit.kept_names.push_back(names[j]);
    for (int j : collinearity.dropped) fit.dropped_names.push_back(names[j]);
    const Eigen::Index p = static_cast<Eigen::Index>(fit.kept_columns.size());

    Eigen::VectorXd ya(n);
    Eigen::MatrixXd Xa(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        ya[i] = y[rows[i]];
        for (Eigen::Index j = 0; j < p; ++j) Xa(i, j) = X(rows[i], fit.kept_columns[j]);
    }

    const auto dims = build_layout(fe, rows);
    std::vector<std::vector<std::int32_t>> component_of;
    fit.components = count_components(dims, rows.size(), &component_of);

    const double ybar = ya.mean();
    Eigen::VectorXd mu = (ya.array() + ybar) / 2.0;
    Eigen::VectorXd eta = mu.array().log();
    double dev = poisson_deviance(ya, mu);
    double delta = std::numeric_limits<double>::infinity();

    RowMajorMatrix work(n, p + 1);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd scale(p + 1);

    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        fit.iterations = iter;
        const Eigen::VectorXd w = mu;
        const double wsum = w.sum();
        work.col(0) = eta.array() + (ya - mu).array() / mu.array();
        for (Eigen::Index j = 0; j < p; ++j) work.col(j + 1) = Xa.col(j);
        for (Eigen::Index c = 0; c < p + 1; ++c) {
            const double wrms = std::sqrt((w.array() * work.col(c).array().square()).sum() / wsum);
            scale[c] = std::max(1.0, wrms);
        }
        const Eigen::VectorXd z = work.col(0);

        const int sweeps =
            demean(work, dims, w.data(), scale, opts.tol_project, opts.max_project_sweeps);

        if (p > 0) {
            const Eigen::MatrixXd xt = work.rightCols(p);
            const Eigen::MatrixXd gram = xt.transpose() * w.asDiagonal() * xt;
            const Eigen::VectorXd rhs = xt.transpose() * (w.asDiagonal() * work.col(0));
            beta = gram.ldlt().solve(rhs);
            if (!beta.allFinite()) {
                const Eigen::MatrixXd sw = w.array().sqrt().matrix().asDiagonal() * xt;
                const Eigen::VectorXd sz =
                    w.array().sqrt().matrix().asDiagonal() * work.col(0);
                beta = sw.colPivHouseholderQr().solve(sz);
            }
        }

        Eigen::VectorXd eta_candidate = z - work.col(0);
        if (p > 0) eta_candidate += (work.rightCols(p) * beta).eval();
        // eta_candidate = z - (z~ - X~ beta): FE part enters via z - z~.

        // The starting mean lies outside the model span and can have lower
        // deviance than any in-model fit, so the first full step is accepted
        // unconditionally; monotone step-halving applies afterwards.
        const bool first_step = iter == 1;
        double step = 1.0;
        Eigen::VectorXd eta_new, mu_new;
        double dev_new = std::numeric_limits<double>::infinity();
        while (true) {
            eta_new = eta + step * (eta_candidate - eta);
            mu_new = eta_new.array().min(700.0).exp();
            dev_new = poisson_deviance(ya, mu_new);
            if (std::isfinite(dev_new) &&
                (first_step || dev_new <= dev + 1e-12 * std::fabs(dev)))
                break;
            step /= 2.0;
            if (step < 1e-8) break;
        }

        delta = std::fabs(dev_new - dev) / (1e-10 + std::fabs(dev));
        eta = eta_new;
        mu = mu_new;
        dev = dev_new;
        if (opts.keep_trace) {
            std::ostringstream line;
            line << "iter " << iter << " deviance " << dev << " delta " << delta
                 << " sweeps " << sweeps << " step " << step;
            fit.trace.push_back(line.str());
        }
        if (delta < opts.tol_dev) {
            fit.converged = true;
            break;
        }
    }
    fit.final_deviance = dev;
    fit.final_deviance_change = delta;
    if (!fit.converged) {
        throw Error("fit_ppml: no convergence after " + std::to_string(fit.iterations) +
                    " iterations (relative deviance change " + std::to_string(delta) + ")");
    }

    fit.beta = beta;
    fit.fitted_mu = mu;
    fit.sum_y = ya.sum();
    fit.sum_mu = mu.sum();

    const Eigen::VectorXd score_resid = ya - mu;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double num = std::fabs(score_resid.dot(Xa.col(j)));
        const double den = (mu.array() * Xa.col(j).array().abs()).sum();
        if (den > 0.0) fit.max_score_regressor = std::max(fit.max_score_regressor, num / den);
    }
    for (const auto& dim : dims) {
        Eigen::VectorXd num = Eigen::VectorXd::Zero(dim.n_groups);
        Eigen::VectorXd den = Eigen::VectorXd::Zero(dim.n_groups);
        for (Eigen::Index i = 0; i < n; ++i) {
            num[dim.gid[i]] += score_resid[i];
            den[dim.gid[i]] += mu[i];
        }
        for (std::int32_t g = 0; g < dim.n_groups; ++g)
            fit.max_score_group = std::max(fit.max_score_group, std::fabs(num[g]) / den[g]);
    }

    if (!dims.empty()) {
        Eigen::VectorXd target = eta;
        if (p > 0) target -= Xa * beta;
        fit.fe = decompose_fe(target, dims, opts, fit.components, component_of);
    }
    return fit;
}

}  // namespace gravbench
