#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jdcredit {

enum class ErrorCode {
    InvalidArgument,
    PoleAtEta,
    DegenerateJumpless,
    NoConvergence,
    OrderTooLarge,
    TransformEvaluationFailed,
    ContourFailure,
    NearDefaultIllConditioned,
    QuadratureFailure,
    GridTooCoarse,
    GridMismatch,
    AllStartsFailed,
    NonPositivePrice,
    WindowTooLong,
    TooFewFirms,
    EmptyGroup,
    EmptyBucket,
    RankDeficient,
    Unbounded,
    FirmTooShort,
    PerfectCollinearity,
    ZeroVariance,
    SchemaMismatch,
    IntegrityViolation,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PoleAtEta: return "PoleAtEta";
    case ErrorCode::DegenerateJumpless: return "DegenerateJumpless";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::OrderTooLarge: return "OrderTooLarge";
    case ErrorCode::TransformEvaluationFailed: return "TransformEvaluationFailed";
    case ErrorCode::ContourFailure: return "ContourFailure";
    case ErrorCode::NearDefaultIllConditioned: return "NearDefaultIllConditioned";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::AllStartsFailed: return "AllStartsFailed";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::WindowTooLong: return "WindowTooLong";
    case ErrorCode::TooFewFirms: return "TooFewFirms";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::EmptyBucket: return "EmptyBucket";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::FirmTooShort: return "FirmTooShort";
    case ErrorCode::PerfectCollinearity: return "PerfectCollinearity";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::IntegrityViolation: return "IntegrityViolation";
    }
    return "Unknown";
}

/// Errors caused by malformed input rather than a failed computation.
[[nodiscard]] constexpr bool is_input_error(ErrorCode code) noexcept
{
    return code == ErrorCode::InvalidArgument || code == ErrorCode::SchemaMismatch
        || code == ErrorCode::IntegrityViolation || code == ErrorCode::GridMismatch;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what)
{
    if (!condition)
        throw Error(code, what);
}

} // namespace jdcredit
