#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace tn2v {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Raised when caller-supplied data violates a documented precondition
// (malformed files, asymmetric matrices, bad config values).
class InvalidInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a numerical procedure cannot continue (non-finite gradients).
class RuntimeAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Round-trippable decimal representation (17 significant digits).
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInput(msg);
}

} // namespace tn2v
