#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace steinpearson {

enum class ErrorKind {
    unknown_name,
    invalid_parameter,
    validation_failed,
    discrete_only,
    continuous_only,
    moment_does_not_exist,
    insufficient_moments,
    zero_weight_point,
    step_underflow,
    nonconvergent,
    nonconvergent_tail,
    nonconvergent_hypothesis,
    order_exceeded,
    invalid_index,
    nonpositive_x,
    usage,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::unknown_name: return "unknown-name";
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::validation_failed: return "validation-failed";
    case ErrorKind::discrete_only: return "discrete-only";
    case ErrorKind::continuous_only: return "continuous-only";
    case ErrorKind::moment_does_not_exist: return "moment-does-not-exist";
    case ErrorKind::insufficient_moments: return "insufficient-moments";
    case ErrorKind::zero_weight_point: return "zero-weight-point";
    case ErrorKind::step_underflow: return "step-underflow";
    case ErrorKind::nonconvergent: return "nonconvergent";
    case ErrorKind::nonconvergent_tail: return "nonconvergent-tail";
    case ErrorKind::nonconvergent_hypothesis: return "nonconvergent-hypothesis";
    case ErrorKind::order_exceeded: return "order-exceeded";
    case ErrorKind::invalid_index: return "invalid-index";
    case ErrorKind::nonpositive_x: return "nonpositive-x";
    case ErrorKind::usage: return "usage";
    }
    return "unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Input problems, as opposed to hypothesis or convergence failures.
    bool is_usage() const noexcept {
        return kind_ == ErrorKind::usage || kind_ == ErrorKind::unknown_name ||
               kind_ == ErrorKind::invalid_parameter || kind_ == ErrorKind::invalid_index;
    }

private:
    ErrorKind kind_;
};

} // namespace steinpearson
