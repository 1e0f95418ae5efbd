#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gravbench/panel.hpp"
#include "gravbench/ppml.hpp"
#include "gravbench/regressor.hpp"

namespace gravbench {

enum class GravityKind { Traditional, OneWay, TwoWay, ThreeWay, ThreeWayMl };

// Strictly positive fitted values for arbitrary rows of a panel, used to
// augment the three-way design with a log column.
using AugmentationProvider =
    std::function<Eigen::VectorXd(const TradePanel&, std::span<const std::int32_t>)>;

struct GravitySpec {
    GravityKind kind = GravityKind::ThreeWay;
    AugmentationProvider augmentation;  // required for ThreeWayMl
};

struct GravityDesign {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::vector<std::string> names;
    std::vector<FeDimension> fe;
};

std::int64_t country_year_key(std::int32_t country_id, int year);

// Design matrix and fixed-effect layout of one gravity variant. Collinear
// columns are not removed here; fit_ppml applies drop_collinear, so a listed
// column is not guaranteed to survive.
GravityDesign build_design(const GravitySpec& spec, const TradePanel& panel);

class GravityModel : public Regressor {
public:
    static GravityModel fit(const GravitySpec& spec, const TradePanel& train,
                            const PpmlOptions& opts = {});

    std::vector<double> predict(const TradePanel& panel,
                                std::span<const std::int32_t> rows) const override;
    std::string name() const override;

    const PpmlFit& fit_result() const { return fit_; }
    GravityKind kind() const { return spec_.kind; }

private:
    GravitySpec spec_;
    PpmlFit fit_;
};

}  // namespace gravbench
