#pragma once

#include <stdexcept>
#include <string>

namespace gravbench {

inline constexpr const char* kVersion = "0.1.0";

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Prediction requested for a fixed-effect group that was not identified in
// the training sample (absent, or excluded by separation screening).
class UnidentifiedGroupError : public Error {
public:
    UnidentifiedGroupError(const std::string& dimension, const std::string& key)
        : Error("unidentified group: dimension '" + dimension + "', key '" + key + "'"),
          dimension_(dimension), key_(key) {}

    const std::string& dimension() const { return dimension_; }
    const std::string& key() const { return key_; }

private:
    std::string dimension_;
    std::string key_;
};

}  // namespace gravbench
