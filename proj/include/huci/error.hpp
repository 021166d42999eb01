#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace huci {

/// Every failure class the library reports. The kebab-case spelling returned
/// by to_string() is what appears on the wire and in CLI reports.
enum class ErrorCode {
  malformed_id,
  unknown_resource,
  unknown_citation,
  clock_regression,
  not_found,
  invalid_identifier,
  unknown_format,
  malformed_record,
  csv_ragged_row,
  missing_id,
  invalid_year,
  invalid_language,
  invalid_mapping,
  empty_reference,
  invalid_since,
  invalid_page_size,
  restricted_context,
  duplicate_node_id,
  unknown_node,
  node_disabled,
  node_unreachable,
  dump_invalid,
  seq_race_exhausted,
  invalid_reference_distribution,
  invalid_params,
  invalid_config,
  io_error,
  forbidden,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
        code_(code) {}
  explicit Error(ErrorCode code) : Error(code, "") {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace huci
