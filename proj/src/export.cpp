#include "huci/export.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

#include "huci/codec.hpp"
#include "huci/error.hpp"

namespace huci {

namespace {

constexpr std::string_view kXsdInteger = "<http://www.w3.org/2001/XMLSchema#integer>";
constexpr std::string_view kXsdBoolean = "<http://www.w3.org/2001/XMLSchema#boolean>";

std::string predicate(std::string_view local) {
  std::string out = "<";
  out.append(kVocabularyNamespace).append(local).append(">");
  return out;
}

std::string iri(std::string_view id) { return "<" + resource_iri(id) + ">"; }

std::string literal(std::string_view s) { return "\"" + nt_escape(s) + "\""; }

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

std::string authors_cell(const std::vector<Author>& authors) {
  std::vector<std::string> parts;
  for (const auto& a : authors) parts.push_back(a.given ? a.family + ", " + *a.given : a.family);
  return join(parts, '|');
}

std::string year_cell(const ResourceStore& store, const std::string& id) {
  auto it = store.find(id);
  return it != store.end() && it->second.year ? std::to_string(*it->second.year) : std::string();
}

}  // namespace

std::string_view to_string(ExportFormat f) noexcept {
  switch (f) {
    case ExportFormat::csv: return "csv";
    case ExportFormat::json: return "json";
    case ExportFormat::nt: return "nt";
  }
  return "?";
}

std::optional<ExportFormat> parse_export_format(std::string_view s) noexcept {
  if (s == "csv") return ExportFormat::csv;
  if (s == "json") return ExportFormat::json;
  if (s == "nt") return ExportFormat::nt;
  return std::nullopt;
}

std::optional<CsvTable> parse_csv_table(std::string_view s) noexcept {
  if (s == "citations") return CsvTable::citations;
  if (s == "resources") return CsvTable::resources;
  return std::nullopt;
}

std::string percent_encode(std::string_view id) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : id) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~' || c == ':') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

std::string resource_iri(std::string_view id) { return std::string(kResourceBase) + percent_encode(id); }

std::string nt_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string csv_cell(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string export_json(const CitationIndex& index, const Json& header) {
  Json j;
  j["header"] = header;
  Json resources = Json::array();
  for (const auto& [_, r] : index.resources) resources.push_back(to_json(r));
  j["resources"] = std::move(resources);
  Json citations = Json::array();
  for (const auto& [_, c] : index.citations) citations.push_back(to_json(redacted(c)));
  j["citations"] = std::move(citations);
  return pretty(j);
}

std::string export_csv(const CitationIndex& index, CsvTable table) {
  std::string out;
  if (table == CsvTable::resources) {
    out = "id,title,authors,year,language,typology,frbr_level,parent_id,identifiers,collections,is_primary_source\n";
    for (const auto& [id, r] : index.resources) {
      std::vector<std::string> ids;
      for (const auto& pid : r.identifiers) ids.push_back(pid.to_string());
      const std::vector<std::string> row{
          csv_cell(id),
          csv_cell(r.title),
          csv_cell(authors_cell(r.authors)),
          r.year ? std::to_string(*r.year) : std::string(),
          csv_cell(r.language.value_or("")),
          std::string(to_string(r.typology)),
          std::string(to_string(r.frbr_level)),
          csv_cell(r.parent_id.value_or("")),
          csv_cell(join(ids, '|')),
          csv_cell(join({r.collections.begin(), r.collections.end()}, '|')),
          r.is_primary_source ? "true" : "false",
      };
      out += join(row, ',') + "\n";
    }
    return out;
  }
  out = "citation_id,citing_id,cited_id,citing_year,cited_year,license,context_available,collection\n";
  for (const auto& [cid, raw] : index.citations) {
    const Citation c = redacted(raw);
    const bool context_available = c.context && c.context->access == Access::open && c.context->excerpt &&
                                   !c.context->excerpt->empty();
    std::string collection;
    if (auto it = index.resources.find(c.citing_id); it != index.resources.end())
      collection = join({it->second.collections.begin(), it->second.collections.end()}, '|');
    const std::vector<std::string> row{
        csv_cell(cid),
        csv_cell(c.citing_id),
        csv_cell(c.cited_id),
        year_cell(index.resources, c.citing_id),
        year_cell(index.resources, c.cited_id),
        std::string(to_string(c.license)),
        context_available ? "true" : "false",
        csv_cell(collection),
    };
    out += join(row, ',') + "\n";
  }
  return out;
}

std::string export_nt(const CitationIndex& index) {
  std::vector<std::string> lines;
  auto emit = [&lines](const std::string& s, std::string_view p, const std::string& o) {
    lines.push_back(s + " " + predicate(p) + " " + o + " .");
  };
  for (const auto& [id, r] : index.resources) {
    const std::string s = iri(id);
    if (!r.title.empty()) emit(s, "title", literal(r.title));
    if (r.year) emit(s, "year", literal(std::to_string(*r.year)) + "^^" + std::string(kXsdInteger));
    if (r.language) emit(s, "language", literal(*r.language));
    emit(s, "typology", literal(to_string(r.typology)));
    emit(s, "frbrLevel", literal(to_string(r.frbr_level)));
    if (r.parent_id) emit(s, "parent", iri(*r.parent_id));
    for (const auto& pid : r.identifiers) emit(s, "identifier", literal(pid.to_string()));
    for (const auto& tag : r.collections) emit(s, "collection", literal(tag));
    emit(s, "primarySource", literal(r.is_primary_source ? "true" : "false") + "^^" + std::string(kXsdBoolean));
  }
  for (const auto& [_, c] : index.citations) emit(iri(c.citing_id), "cites", iri(c.cited_id));
  std::sort(lines.begin(), lines.end());
  lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string export_index(const CitationIndex& index, ExportFormat format, const Json& header, CsvTable table) {
  switch (format) {
    case ExportFormat::csv: return export_csv(index, table);
    case ExportFormat::json: return export_json(index, header);
    case ExportFormat::nt: return export_nt(index);
  }
  throw Error(ErrorCode::unknown_format);
}

CitationIndex index_from_export(const Json& j) {
  if (!j.is_object() || !j.contains("header") || !j["header"].is_object() || !j.contains("resources") ||
      !j["resources"].is_array() || !j.contains("citations") || !j["citations"].is_array())
    throw Error(ErrorCode::dump_invalid, "expected {header, resources[], citations[]}");
  CitationIndex index;
  try {
    for (const auto& r : j["resources"]) {
      auto res = resource_from_json(r);
      if (!index.resources.emplace(res.id, res).second) throw Error(ErrorCode::dump_invalid, "duplicate resource " + res.id);
    }
    for (const auto& c : j["citations"]) {
      auto cit = citation_from_json(c);
      if (cit.citation_id != mint_citation_id(cit.citing_id, cit.cited_id))
        throw Error(ErrorCode::dump_invalid, "citation id does not match endpoints: " + cit.citation_id);
      if (!index.citations.emplace(cit.citation_id, cit).second)
        throw Error(ErrorCode::dump_invalid, "duplicate citation " + cit.citation_id);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::dump_invalid) throw;
    throw Error(ErrorCode::dump_invalid, e.what());
  }
  return index;
}

}  // namespace huci
