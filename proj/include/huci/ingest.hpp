#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "huci/clock.hpp"
#include "huci/error.hpp"
#include "huci/model.hpp"

namespace huci {

using Json = nlohmann::ordered_json;

enum class SourceFormat { marc_json, flat_json, csv };

std::string_view to_string(SourceFormat f) noexcept;
std::optional<SourceFormat> parse_source_format(std::string_view s) noexcept;

/// One source record flattened to ordered (path, value) pairs.
struct ProviderRecord {
  SourceFormat format = SourceFormat::flat_json;
  std::vector<std::pair<std::string, std::string>> raw_fields;

  friend bool operator==(const ProviderRecord&, const ProviderRecord&) = default;
};

struct RecordFailure {
  std::size_t index = 0;  // position of the record in its source file
  ErrorCode code = ErrorCode::malformed_record;
  std::string reason;
};

/// Malformed records fail individually; the rest of the batch survives.
struct ParseBatch {
  std::vector<ProviderRecord> records;
  std::vector<std::size_t> indices;  // source index of each parsed record
  std::vector<RecordFailure> failures;
};

/// Throws Error{unknown_format} for empty or unrecognised payloads.
SourceFormat detect_format(std::string_view bytes);

/// These throw only when the payload as a whole is unusable (not a JSON array,
/// CSV without header, unterminated quote); per-record problems land in
/// ParseBatch::failures.
ParseBatch parse_marc_json(std::string_view bytes);
ParseBatch parse_flat_json(std::string_view bytes);
ParseBatch parse_csv(std::string_view bytes);
ParseBatch parse_records(std::string_view bytes, SourceFormat format);

/// Re-serializes flattened flat-json records (the inverse of parse_flat_json
/// for records produced by it).
std::string serialize_flat_json(const std::vector<ProviderRecord>& records);

// ---------------------------------------------------------------------------
// Alignment

enum class TargetField {
  id,
  title,
  authors,
  year,
  language,
  typology,
  frbr_level,
  parent_id,
  collections,
  identifiers,
  is_primary_source,
};

std::string_view to_string(TargetField f) noexcept;
std::optional<TargetField> parse_target_field(std::string_view s) noexcept;

enum class TransformKind { none, year_extract, identifier, language_code, split_authors };

struct Transform {
  TransformKind kind = TransformKind::none;
  /// Fixed scheme for identifier(scheme). Without one the scheme comes from a
  /// sibling ".scheme" path or a "scheme:value" prefix.
  std::optional<IdScheme> scheme;

  static Transform parse(std::string_view spelled);  // "identifier(doi)", "year-extract", ...
  std::string to_string() const;
};

struct MappingEntry {
  /// Exact path, or a pattern where "[*]" matches any array index.
  std::string source_path;
  TargetField target = TargetField::title;
  Transform transform;
};

struct AlignmentMapping {
  std::string name;
  std::vector<MappingEntry> entries;
  /// Constant values for fields the source does not carry (keyed by target field name).
  std::map<std::string, Json> defaults;
  /// Provider table for non-two-letter language codes (e.g. "ita" -> "it").
  std::map<std::string, std::string> language_map;

  /// Validates that each target other than identifiers appears at most once.
  static AlignmentMapping from_json(const Json& j);  // throws invalid_mapping
  Json to_json() const;
};

AlignmentMapping builtin_mapping(SourceFormat format);
const std::map<std::string, std::string>& builtin_language_map();

struct AlignedResource {
  BibliographicResource resource;
  std::vector<std::string> consumed_paths;
  std::vector<std::string> unmapped_paths;
  /// Provenance notes for the create record (mapping name, unmapped paths).
  std::vector<std::string> notes;
};

/// Throws missing_id, malformed_id, invalid_year, invalid_language or
/// malformed_record.
AlignedResource apply_alignment(const ProviderRecord& record, const AlignmentMapping& mapping,
                                std::string_view provider_id);

/// First exactly-four-digit number, with a leading minus when the minus is
/// not glued to a preceding letter or digit.
std::optional<std::int64_t> extract_year(std::string_view text);

/// Splits "Family, Given; Family2, Given2".
std::vector<Author> split_authors(std::string_view text, bool pipe_separated = false);

/// Scopes a provider-local id as "provider:local" (unchanged if already scoped).
std::string scope_id(std::string_view provider_id, std::string_view local_id);

// ---------------------------------------------------------------------------
// Datasets

struct DatasetHeader {
  std::string provider_id;
  License license = License::unspecified;
  std::optional<Timestamp> created;
};

DatasetHeader header_from_json(const Json& j);  // throws malformed_record
Json to_json(const DatasetHeader& h);

enum class LicenseStatus { pass, warn };
LicenseStatus validate_license(const DatasetHeader& header) noexcept;

/// Everything a node ingests in one go.
struct DatasetBundle {
  DatasetHeader header;
  std::vector<BibliographicResource> resources;
  std::vector<Citation> citations;
  /// Extra provenance notes per resource id (unmapped paths, mapping name).
  std::map<std::string, std::vector<std::string>> notes;
};

/// Reads {"header":{...},"resources":[...],"citations":[...]}. The header may
/// name the provider as "provider_id" or "node_id" (so dumps re-ingest).
DatasetBundle bundle_from_json(const Json& j);
Json to_json(const DatasetBundle& b);

/// Reads a provider citation list: [{citing_id, cited_id, locus?, context?, license?}].
/// Endpoint ids are scoped to the provider; a missing license inherits the
/// dataset's, and an unspecified dataset license always wins.
std::vector<Citation> citations_from_json(const Json& j, const DatasetHeader& header);

}  // namespace huci
