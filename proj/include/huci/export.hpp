#pragma once

// Canonical serializations of a CitationIndex. All exporters redact
// restricted contexts and produce identical bytes for equal indexes.

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "huci/model.hpp"

namespace huci {

using Json = nlohmann::ordered_json;

enum class ExportFormat { csv, json, nt };
enum class CsvTable { citations, resources };

std::string_view to_string(ExportFormat f) noexcept;
std::optional<ExportFormat> parse_export_format(std::string_view s) noexcept;
std::optional<CsvTable> parse_csv_table(std::string_view s) noexcept;

inline constexpr std::string_view kVocabularyNamespace = "https://huci.example/ns#";
inline constexpr std::string_view kResourceBase = "https://huci.example/resource/";

/// {"header":…,"resources":[…],"citations":[…]}, two-space indent, trailing newline.
std::string export_json(const CitationIndex& index, const Json& header);

/// One table with a header line; rows sorted by id.
std::string export_csv(const CitationIndex& index, CsvTable table = CsvTable::citations);

/// Sorted N-Triples lines, each terminated by "\n".
std::string export_nt(const CitationIndex& index);

std::string export_index(const CitationIndex& index, ExportFormat format, const Json& header,
                         CsvTable table = CsvTable::citations);

/// Percent-encodes everything outside [A-Za-z0-9-._~:].
std::string percent_encode(std::string_view id);
std::string resource_iri(std::string_view id);
/// Escapes \\, \", \n and \r for an N-Triples string literal.
std::string nt_escape(std::string_view s);
/// Quotes a CSV cell when it holds a comma, quote or line break.
std::string csv_cell(std::string_view s);

/// Parses a JSON export back into an index (inverse of export_json for the
/// entity arrays). Throws dump_invalid on grammar violations.
CitationIndex index_from_export(const Json& j);

}  // namespace huci
