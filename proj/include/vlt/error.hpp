#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vlt {

enum class ErrorCode {
  unknown_element,
  min_size_violation,
  locked_property_violation,
  malformed_xml,
  missing_canvas_size,
  unsupported_transform,
  missing_fragment,
  unmatched_element,
  not_a_chain,
  infeasible_rule,
  unknown_command,
  invalid_argument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_element: return "UnknownElement";
    case ErrorCode::min_size_violation: return "MinSizeViolation";
    case ErrorCode::locked_property_violation: return "LockedPropertyViolation";
    case ErrorCode::malformed_xml: return "MalformedXml";
    case ErrorCode::missing_canvas_size: return "MissingCanvasSize";
    case ErrorCode::unsupported_transform: return "UnsupportedTransform";
    case ErrorCode::missing_fragment: return "MissingFragment";
    case ErrorCode::unmatched_element: return "UnmatchedElement";
    case ErrorCode::not_a_chain: return "NotAChain";
    case ErrorCode::infeasible_rule: return "InfeasibleRule";
    case ErrorCode::unknown_command: return "UnknownCommand";
    case ErrorCode::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Errors that come from bad input documents or malformed requests, as
/// opposed to commands that are well-formed but cannot be satisfied.
constexpr bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::malformed_xml:
    case ErrorCode::missing_canvas_size:
    case ErrorCode::unsupported_transform:
    case ErrorCode::missing_fragment:
    case ErrorCode::unknown_command:
    case ErrorCode::invalid_argument:
    case ErrorCode::unknown_element:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace vlt
