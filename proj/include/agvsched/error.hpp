#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agvsched {

enum class ErrorCode {
    InvalidArgument,
    NonPositiveBreakpoint,
    BelowReferenceDistance,
    ZeroDistance,
    NegativePower,
    MissingRate,
    NotATaskEdge,
    UnsatisfiableSpec,
    ParseError,
    SchemaVersionMismatch,
    PredecessorUnmapped,
    InstanceTooLarge,
    TemplateInfeasibleForAlpha1,
    HeterogeneousD,
    Infeasible,
    Unbounded,
    NumericalFailure,
    BaselineInfeasible,
    NoFeasibleSchedule,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveBreakpoint: return "NonPositiveBreakpoint";
    case ErrorCode::BelowReferenceDistance: return "BelowReferenceDistance";
    case ErrorCode::ZeroDistance: return "ZeroDistance";
    case ErrorCode::NegativePower: return "NegativePower";
    case ErrorCode::MissingRate: return "MissingRate";
    case ErrorCode::NotATaskEdge: return "NotATaskEdge";
    case ErrorCode::UnsatisfiableSpec: return "UnsatisfiableSpec";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::PredecessorUnmapped: return "PredecessorUnmapped";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::TemplateInfeasibleForAlpha1: return "TemplateInfeasibleForAlpha1";
    case ErrorCode::HeterogeneousD: return "HeterogeneousD";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::BaselineInfeasible: return "BaselineInfeasible";
    case ErrorCode::NoFeasibleSchedule: return "NoFeasibleSchedule";
    }
    return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

    ErrorCode code() const noexcept { return code_; }
    /// The message without the code prefix, for re-wrapping with more context.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

}  // namespace agvsched
