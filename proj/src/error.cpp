#include "huci/error.hpp"

namespace huci {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::malformed_id: return "malformed-id";
    case ErrorCode::unknown_resource: return "unknown-resource";
    case ErrorCode::unknown_citation: return "unknown-citation";
    case ErrorCode::clock_regression: return "clock-regression";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::invalid_identifier: return "invalid-identifier";
    case ErrorCode::unknown_format: return "unknown-format";
    case ErrorCode::malformed_record: return "malformed-record";
    case ErrorCode::csv_ragged_row: return "csv-ragged-row";
    case ErrorCode::missing_id: return "missing-id";
    case ErrorCode::invalid_year: return "invalid-year";
    case ErrorCode::invalid_language: return "invalid-language";
    case ErrorCode::invalid_mapping: return "invalid-mapping";
    case ErrorCode::empty_reference: return "empty-reference";
    case ErrorCode::invalid_since: return "invalid-since";
    case ErrorCode::invalid_page_size: return "invalid-page-size";
    case ErrorCode::restricted_context: return "restricted-context";
    case ErrorCode::duplicate_node_id: return "duplicate-node-id";
    case ErrorCode::unknown_node: return "unknown-node";
    case ErrorCode::node_disabled: return "node-disabled";
    case ErrorCode::node_unreachable: return "node-unreachable";
    case ErrorCode::dump_invalid: return "dump-invalid";
    case ErrorCode::seq_race_exhausted: return "seq-race-exhausted";
    case ErrorCode::invalid_reference_distribution: return "invalid-reference-distribution";
    case ErrorCode::invalid_params: return "invalid-params";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::forbidden: return "forbidden";
  }
  return "unknown-error";
}

}  // namespace huci
