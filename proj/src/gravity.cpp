#include "gravbench/gravity.hpp"

#include <cmath>
#include <numeric>

namespace gravbench {

namespace {

// Covariate indices in kCovariateNames order.
enum Cov { LnGdpO = 0, LnGdpD, LnDist, Eu, Cu, Rta, Contig, Comlang, Colony, Sanction };

std::vector<int> design_covariates(GravityKind kind) {
    switch (kind) {
        case GravityKind::Traditional:
            return {LnGdpO, LnGdpD, LnDist, Eu, Cu, Rta, Contig, Comlang, Colony, Sanction};
        case GravityKind::TwoWay:
            return {LnDist, Eu, Cu, Rta, Contig, Comlang, Colony, Sanction};
        case GravityKind::OneWay:
            return {LnGdpO, LnGdpD, Eu, Cu, Rta, Sanction};
        case GravityKind::ThreeWay:
        case GravityKind::ThreeWayMl:
            return {Eu, Cu, Rta, Sanction};
    }
    throw Error("unknown gravity kind");
}

bool has_intercept(GravityKind kind) { return kind == GravityKind::Traditional; }

std::shared_ptr<const std::vector<std::string>> country_table(const TradePanel& panel) {
    auto table = std::make_shared<std::vector<std::string>>();
    table->reserve(panel.num_countries());
    for (std::size_t id = 0; id < panel.num_countries(); ++id)
        table->push_back(panel.country(static_cast<std::int32_t>(id)));
    return table;
}

FeDimension make_country_year_dim(const TradePanel& panel, bool exporter_side) {
    FeDimension dim;
    dim.name = exporter_side ? "exporter-year" : "importer-year";
    dim.keys.reserve(panel.size());
    for (std::size_t i = 0; i < panel.size(); ++i) {
        const std::int32_t cid = exporter_side ? panel.exporter_id(i) : panel.importer_id(i);
        dim.keys.push_back(country_year_key(cid, panel.year(i)));
    }
    auto names = country_table(panel);
    dim.label = [names](std::int64_t key) {
        const auto cid = static_cast<std::size_t>(key >> 16);
        const int year = static_cast<int>(key & 0xffff);
        const std::string country =
            cid < names->size() ? (*names)[cid] : "#" + std::to_string(cid);
        return country + "@" + std::to_string(year);
    };
    return dim;
}

FeDimension make_pair_dim(const TradePanel& panel) {
    FeDimension dim;
    dim.name = "pair";
    dim.keys.reserve(panel.size());
    for (std::size_t i = 0; i < panel.size(); ++i) dim.keys.push_back(panel.pair_id(i));
    auto names = country_table(panel);
    std::vector<std::pair<std::int32_t, std::int32_t>> defs;
    defs.reserve(panel.num_pairs());
    for (std::size_t pid = 0; pid < panel.num_pairs(); ++pid)
        defs.push_back(panel.pair_countries(static_cast<std::int32_t>(pid)));
    auto defs_ptr = std::make_shared<std::vector<std::pair<std::int32_t, std::int32_t>>>(
        std::move(defs));
    dim.label = [names, defs_ptr](std::int64_t key) {
        const auto pid = static_cast<std::size_t>(key);
        if (pid >= defs_ptr->size()) return "#" + std::to_string(key);
        const auto& [e, i] = (*defs_ptr)[pid];
        return (*names)[e] + "->" + (*names)[i];
    };
    return dim;
}

std::vector<FeDimension> design_dimensions(GravityKind kind, const TradePanel& panel) {
    switch (kind) {
        case GravityKind::Traditional:
            return {};
        case GravityKind::TwoWay:
            return {make_country_year_dim(panel, true), make_country_year_dim(panel, false)};
        case GravityKind::OneWay:
            return {make_pair_dim(panel)};
        case GravityKind::ThreeWay:
        case GravityKind::ThreeWayMl:
            return {make_country_year_dim(panel, true), make_country_year_dim(panel, false),
                    make_pair_dim(panel)};
    }
    throw Error("unknown gravity kind");
}

std::vector<std::int32_t> sequential_rows(std::size_t n) {
    std::vector<std::int32_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

// Full design row (same column layout as build_design) for prediction.
void fill_design_row(const GravitySpec& spec, const TradePanel& panel, std::int32_t row,
                     double log_aug, std::vector<double>* out) {
    out->clear();
    if (has_intercept(spec.kind)) out->push_back(1.0);
    for (int c : design_covariates(spec.kind)) out->push_back(panel.covariate(row, c));
    if (spec.kind == GravityKind::ThreeWayMl) out->push_back(log_aug);
}

}  // namespace

std::int64_t country_year_key(std::int32_t country_id, int year) {
    return (static_cast<std::int64_t>(country_id) << 16) |
           static_cast<std::int64_t>(year & 0xffff);
}

GravityDesign build_design(const GravitySpec& spec, const TradePanel& panel) {
    if (panel.empty()) throw Error("build_design: empty panel");
    GravityDesign design;
    const std::size_t n = panel.size();
    const auto covariates = design_covariates(spec.kind);
    const bool intercept = has_intercept(spec.kind);
    const bool augmented = spec.kind == GravityKind::ThreeWayMl;

    Eigen::Index p = static_cast<Eigen::Index>(covariates.size()) + (intercept ? 1 : 0) +
                     (augmented ? 1 : 0);
    design.y.resize(static_cast<Eigen::Index>(n));
    design.X.resize(static_cast<Eigen::Index>(n), p);
    for (std::size_t i = 0; i < n; ++i) design.y[static_cast<Eigen::Index>(i)] = panel.trade(i);

    Eigen::Index col = 0;
    if (intercept) {
        design.X.col(col).setOnes();
        design.names.push_back("const");
        ++col;
    }
    for (int c : covariates) {
        for (std::size_t i = 0; i < n; ++i)
            design.X(static_cast<Eigen::Index>(i), col) = panel.covariate(i, c);
        design.names.push_back(kCovariateNames[c]);
        ++col;
    }
    if (augmented) {
        if (!spec.augmentation)
            throw Error("build_design: three-way-ml requires an augmentation provider");
        const auto rows = sequential_rows(n);
        const Eigen::VectorXd fitted = spec.augmentation(panel, rows);
        if (fitted.size() != static_cast<Eigen::Index>(n))
            throw Error("build_design: augmentation returned wrong length");
        for (std::size_t i = 0; i < n; ++i) {
            const double v = fitted[static_cast<Eigen::Index>(i)];
            if (!(v > 0.0) || !std::isfinite(v))
                throw Error("build_design: augmentation value must be strictly positive");
            design.X(static_cast<Eigen::Index>(i), col) = std::log(v);
        }
        design.names.push_back("ln_aug");
        ++col;
    }

    design.fe = design_dimensions(spec.kind, panel);
    return design;
}

GravityModel GravityModel::fit(const GravitySpec& spec, const TradePanel& train,
                               const PpmlOptions& opts) {
    GravityModel model;
    model.spec_ = spec;
    const GravityDesign design = build_design(spec, train);
    model.fit_ = fit_ppml(design.y, design.X, design.names, design.fe, opts);
    return model;
}

std::vector<double> GravityModel::predict(const TradePanel& panel,
                                          std::span<const std::int32_t> rows) const {
    Eigen::VectorXd augmented;
    if (spec_.kind == GravityKind::ThreeWayMl) {
        augmented = spec_.augmentation(panel, rows);
        if (augmented.size() != static_cast<Eigen::Index>(rows.size()))
            throw Error("predict: augmentation returned wrong length");
    }

    std::vector<double> out;
    out.reserve(rows.size());
    std::vector<double> full_row;
    std::vector<std::int64_t> keys;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::int32_t row = rows[i];
        double log_aug = 0.0;
        if (spec_.kind == GravityKind::ThreeWayMl) {
            const double v = augmented[static_cast<Eigen::Index>(i)];
            if (!(v > 0.0) || !std::isfinite(v))
                throw Error("predict: augmentation value must be strictly positive");
            log_aug = std::log(v);
        }
        fill_design_row(spec_, panel, row, log_aug, &full_row);

        keys.clear();
        switch (spec_.kind) {
            case GravityKind::Traditional:
                break;
            case GravityKind::TwoWay:
                keys.push_back(country_year_key(panel.exporter_id(row), panel.year(row)));
                keys.push_back(country_year_key(panel.importer_id(row), panel.year(row)));
                break;
            case GravityKind::OneWay:
                keys.push_back(panel.pair_id(row));
                break;
            case GravityKind::ThreeWay:
            case GravityKind::ThreeWayMl:
                keys.push_back(country_year_key(panel.exporter_id(row), panel.year(row)));
                keys.push_back(country_year_key(panel.importer_id(row), panel.year(row)));
                keys.push_back(panel.pair_id(row));
                break;
        }
        out.push_back(fit_.predict_mu(full_row, keys));
    }
    return out;
}

std::string GravityModel::name() const {
    switch (spec_.kind) {
        case GravityKind::Traditional: return "trad";
        case GravityKind::OneWay: return "oneway";
        case GravityKind::TwoWay: return "twoway";
        case GravityKind::ThreeWay: return "threeway";
        case GravityKind::ThreeWayMl: return "threeway-ml";
    }
    return "gravity";
}

}  // namespace gravbench
