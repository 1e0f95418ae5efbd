#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gravbench/panel.hpp"

namespace gravbench {

// Uniform prediction surface for gravity specifications, machine-learning
// learners, and the stacked ensemble. Implementations are immutable after
// fitting and never read outcome values of the rows they predict.
class Regressor {
public:
    virtual ~Regressor() = default;
    virtual std::vector<double> predict(const TradePanel& panel,
                                        std::span<const std::int32_t> rows) const = 0;
    virtual std::string name() const = 0;
};

}  // namespace gravbench
