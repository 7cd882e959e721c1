#include "qsk/error.hpp"

namespace qsk {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ZeroRow: return "ZeroRow";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedField: return "UnsupportedField";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidDualPair: return "InvalidDualPair";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidQuantile: return "InvalidQuantile";
    case ErrorCode::EmptyAcceptableSet: return "EmptyAcceptableSet";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::DegenerateSelection: return "DegenerateSelection";
    case ErrorCode::ZeroGroundTruth: return "ZeroGroundTruth";
    case ErrorCode::ParameterOrderViolation: return "ParameterOrderViolation";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    }
    return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message,
                    std::optional<std::size_t> detail) {
    std::string out(to_string(code));
    if (detail) out += "(" + std::to_string(*detail) + ")";
    if (!message.empty()) out += ": " + message;
    return out;
}

} // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> detail)
    : std::runtime_error(compose(code, message, detail)), code_(code), detail_(detail) {}

} // namespace qsk
