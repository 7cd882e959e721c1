#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qsk {

enum class ErrorCode {
    ZeroRow,
    DimensionMismatch,
    IndexOutOfRange,
    EmptySelection,
    NonFinite,
    NotNormalized,
    ParseError,
    UnsupportedField,
    IoError,
    InvalidDualPair,
    NoRoot,
    DegenerateDirection,
    EmptyInput,
    InvalidQuantile,
    EmptyAcceptableSet,
    ConfigInvalid,
    SpecInvalid,
    BudgetExceeded,
    DegenerateSelection,
    ZeroGroundTruth,
    ParameterOrderViolation,
    MissingGroundTruth,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library. `code()` identifies the failure,
/// `detail()` carries the offending row index or line number when relevant.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::size_t> detail = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> detail_;
};

} // namespace qsk
