#include "huci/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include "huci/codec.hpp"
#include "huci_builtin_data.hpp"

namespace huci {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view strip_bom(std::string_view s) {
  if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF && static_cast<unsigned char>(s[1]) == 0xBB &&
      static_cast<unsigned char>(s[2]) == 0xBF)
    s.remove_prefix(3);
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Json parse_json_or_throw(std::string_view bytes, ErrorCode code) {
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(code, e.what());
  }
}

// --- CSV (RFC 4180) ---------------------------------------------------------

struct CsvRow {
  std::vector<std::string> cells;
};

std::vector<CsvRow> read_csv_rows(std::string_view text) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string cell;
  bool in_quotes = false;
  bool row_has_content = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_content = true;
        break;
      case ',':
        row.cells.push_back(std::move(cell));
        cell.clear();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_content || !cell.empty()) {
          row.cells.push_back(std::move(cell));
          rows.push_back(std::move(row));
        }
        row = {};
        cell.clear();
        row_has_content = false;
        break;
      default:
        cell.push_back(c);
        row_has_content = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::malformed_record, "unterminated quoted CSV field");
  if (row_has_content || !cell.empty()) {
    row.cells.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- flat JSON flattening ---------------------------------------------------

void flatten(const Json& v, const std::string& path, std::vector<std::pair<std::string, std::string>>& out) {
  switch (v.type()) {
    case Json::value_t::null:
      return;
    case Json::value_t::string:
      if (!v.get_ref<const std::string&>().empty()) out.emplace_back(path, v.get<std::string>());
      return;
    case Json::value_t::boolean:
      out.emplace_back(path, v.get<bool>() ? "true" : "false");
      return;
    case Json::value_t::array: {
      std::size_t i = 0;
      for (const auto& e : v) flatten(e, path + "[" + std::to_string(i++) + "]", out);
      return;
    }
    case Json::value_t::object:
      for (const auto& [k, e] : v.items()) flatten(e, path.empty() ? k : path + "." + k, out);
      return;
    default:
      out.emplace_back(path, v.dump());
  }
}

// --- mapping helpers ----------------------------------------------------------

bool path_matches(std::string_view pattern, std::string_view path) {
  std::size_t i = 0, j = 0;
  while (i < pattern.size()) {
    if (pattern.compare(i, 3, "[*]") == 0) {
      if (j >= path.size() || path[j] != '[') return false;
      std::size_t k = j + 1;
      while (k < path.size() && std::isdigit(static_cast<unsigned char>(path[k]))) ++k;
      if (k == j + 1 || k >= path.size() || path[k] != ']') return false;
      i += 3;
      j = k + 1;
      continue;
    }
    if (j >= path.size() || pattern[i] != path[j]) return false;
    ++i;
    ++j;
  }
  return j == path.size();
}

bool is_two_letter(std::string_view s) {
  return s.size() == 2 && std::islower(static_cast<unsigned char>(s[0])) && std::islower(static_cast<unsigned char>(s[1]));
}

std::string normalize_language(std::string_view raw, const std::map<std::string, std::string>& table) {
  const std::string code = lower(trim(raw));
  if (is_two_letter(code)) return code;
  if (auto it = table.find(code); it != table.end()) return it->second;
  throw Error(ErrorCode::invalid_language, "'" + std::string(raw) + "' is not an ISO 639-1 code");
}

std::int64_t parse_integer_year(std::string_view raw) {
  std::string_view s = trim(raw);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::invalid_year, "'" + std::string(raw) + "' is not an integer year");
  return v;
}

bool parse_bool(std::string_view raw) {
  const std::string s = lower(trim(raw));
  if (s == "true" || s == "1" || s == "yes" || s == "y") return true;
  if (s == "false" || s == "0" || s == "no" || s == "n" || s.empty()) return false;
  throw Error(ErrorCode::malformed_record, "'" + std::string(raw) + "' is not a boolean");
}

std::string clean_title(std::string_view raw) {
  std::string_view s = trim(raw);
  // ISBD punctuation that MARC leaves dangling at the end of 245$a.
  while (!s.empty() && (s.back() == '/' || s.back() == ':' || s.back() == ';' || s.back() == '=' || s.back() == ','))
    s = trim(s.substr(0, s.size() - 1));
  return std::string(s);
}

const std::map<std::string, std::string>& parsed_language_map() {
  static const std::map<std::string, std::string> table = [] {
    std::map<std::string, std::string> out;
    const Json j = Json::parse(builtin_data::kLanguageMap);
    for (const auto& [k, v] : j.items()) out[k] = v.get<std::string>();
    return out;
  }();
  return table;
}

}  // namespace

std::string_view to_string(SourceFormat f) noexcept {
  switch (f) {
    case SourceFormat::marc_json: return "marc-json";
    case SourceFormat::flat_json: return "flat-json";
    case SourceFormat::csv: return "csv";
  }
  return "?";
}

std::optional<SourceFormat> parse_source_format(std::string_view s) noexcept {
  if (s == "marc-json") return SourceFormat::marc_json;
  if (s == "flat-json") return SourceFormat::flat_json;
  if (s == "csv") return SourceFormat::csv;
  return std::nullopt;
}

SourceFormat detect_format(std::string_view bytes) {
  const std::string_view body = trim(strip_bom(bytes));
  if (body.empty()) throw Error(ErrorCode::unknown_format, "empty input");
  if (body.front() == '[') {
    Json j;
    try {
      j = Json::parse(body.begin(), body.end());
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorCode::unknown_format, "payload starts like JSON but does not parse");
    }
    if (j.is_array() && !j.empty() && j.front().is_object()) {
      const Json& first = j.front();
      if (first.contains("leader") && first.contains("fields")) return SourceFormat::marc_json;
      if (first.contains("id")) return SourceFormat::flat_json;
    }
    throw Error(ErrorCode::unknown_format, "JSON array without MARC or flat-json records");
  }
  const auto eol = body.find('\n');
  std::string_view header = body.substr(0, eol);
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  bool has_id = false, has_title = false;
  for (auto& cell : split(header, ',')) {
    std::string_view c = trim(cell);
    if (c.size() >= 2 && c.front() == '"' && c.back() == '"') c = c.substr(1, c.size() - 2);
    has_id |= c == "id";
    has_title |= c == "title";
  }
  if (has_id && has_title) return SourceFormat::csv;
  throw Error(ErrorCode::unknown_format, "not MARC-in-JSON, flat JSON or CSV");
}

ParseBatch parse_marc_json(std::string_view bytes) {
  const Json root = parse_json_or_throw(strip_bom(bytes), ErrorCode::malformed_record);
  if (!root.is_array()) throw Error(ErrorCode::malformed_record, "MARC-in-JSON payload must be an array of records");
  ParseBatch batch;
  for (std::size_t idx = 0; idx < root.size(); ++idx) {
    const Json& rec = root[idx];
    auto fail = [&](std::string reason) { batch.failures.push_back({idx, ErrorCode::malformed_record, std::move(reason)}); };
    if (!rec.is_object()) { fail("record is not an object"); continue; }
    if (!rec.contains("leader") || !rec["leader"].is_string()) { fail("missing string 'leader'"); continue; }
    if (!rec.contains("fields") || !rec["fields"].is_array()) { fail("missing 'fields' array"); continue; }
    ProviderRecord out{SourceFormat::marc_json, {}};
    if (!rec["leader"].get_ref<const std::string&>().empty()) out.raw_fields.emplace_back("LDR", rec["leader"].get<std::string>());
    bool ok = true;
    for (const Json& field : rec["fields"]) {
      if (!field.is_object() || field.size() != 1) { fail("field must be a single-key object"); ok = false; break; }
      const auto& [tag, body] = *field.items().begin();
      if (tag.empty()) { fail("empty field tag"); ok = false; break; }
      if (body.is_string()) {
        if (!body.get_ref<const std::string&>().empty()) out.raw_fields.emplace_back(tag, body.get<std::string>());
        continue;
      }
      if (!body.is_object() || !body.contains("subfields") || !body["subfields"].is_array()) {
        fail("data field " + tag + " lacks a 'subfields' array");
        ok = false;
        break;
      }
      for (const Json& sub : body["subfields"]) {
        if (!sub.is_object()) { fail("subfield of " + tag + " is not an object"); ok = false; break; }
        for (const auto& [code, value] : sub.items()) {
          if (!value.is_string()) { fail("subfield " + tag + "$" + code + " is not a string"); ok = false; break; }
          if (!value.get_ref<const std::string&>().empty()) out.raw_fields.emplace_back(tag + "$" + code, value.get<std::string>());
        }
        if (!ok) break;
      }
      if (!ok) break;
    }
    if (!ok) continue;
    batch.records.push_back(std::move(out));
    batch.indices.push_back(idx);
  }
  return batch;
}

ParseBatch parse_flat_json(std::string_view bytes) {
  const Json root = parse_json_or_throw(strip_bom(bytes), ErrorCode::malformed_record);
  if (!root.is_array()) throw Error(ErrorCode::malformed_record, "flat JSON payload must be an array of objects");
  ParseBatch batch;
  for (std::size_t idx = 0; idx < root.size(); ++idx) {
    if (!root[idx].is_object()) {
      batch.failures.push_back({idx, ErrorCode::malformed_record, "record is not an object"});
      continue;
    }
    ProviderRecord out{SourceFormat::flat_json, {}};
    flatten(root[idx], "", out.raw_fields);
    batch.records.push_back(std::move(out));
    batch.indices.push_back(idx);
  }
  return batch;
}

ParseBatch parse_csv(std::string_view bytes) {
  const auto rows = read_csv_rows(strip_bom(bytes));
  if (rows.empty()) throw Error(ErrorCode::malformed_record, "CSV without header row");
  std::vector<std::string> header;
  for (const auto& h : rows.front().cells) header.emplace_back(trim(h));
  ParseBatch batch;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::size_t idx = r - 1;
    const auto& cells = rows[r].cells;
    if (cells.size() != header.size()) {
      batch.failures.push_back({idx, ErrorCode::csv_ragged_row,
                                "row has " + std::to_string(cells.size()) + " cells, header has " + std::to_string(header.size())});
      continue;
    }
    ProviderRecord out{SourceFormat::csv, {}};
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (!cells[c].empty()) out.raw_fields.emplace_back(header[c], cells[c]);
    batch.records.push_back(std::move(out));
    batch.indices.push_back(idx);
  }
  return batch;
}

ParseBatch parse_records(std::string_view bytes, SourceFormat format) {
  switch (format) {
    case SourceFormat::marc_json: return parse_marc_json(bytes);
    case SourceFormat::flat_json: return parse_flat_json(bytes);
    case SourceFormat::csv: return parse_csv(bytes);
  }
  throw Error(ErrorCode::unknown_format);
}

std::string serialize_flat_json(const std::vector<ProviderRecord>& records) {
  // Rebuild nested values from "key[0].sub" paths.
  Json root = Json::array();
  for (const auto& rec : records) {
    Json obj = Json::object();
    for (const auto& [path, value] : rec.raw_fields) {
      Json* cur = &obj;
      std::size_t i = 0;
      while (i < path.size()) {
        if (path[i] == '[') {
          const auto close = path.find(']', i);
          const auto index = static_cast<std::size_t>(std::stoul(path.substr(i + 1, close - i - 1)));
          if (!cur->is_array()) *cur = Json::array();
          while (cur->size() <= index) cur->push_back(nullptr);
          cur = &(*cur)[index];
          i = close + 1;
        } else {
          if (path[i] == '.') ++i;
          auto end = path.find_first_of(".[", i);
          if (end == std::string::npos) end = path.size();
          if (!cur->is_object()) *cur = Json::object();
          cur = &(*cur)[path.substr(i, end - i)];
          i = end;
        }
      }
      *cur = value;
    }
    root.push_back(std::move(obj));
  }
  return root.dump();
}

// ---------------------------------------------------------------------------

std::string_view to_string(TargetField f) noexcept {
  switch (f) {
    case TargetField::id: return "id";
    case TargetField::title: return "title";
    case TargetField::authors: return "authors";
    case TargetField::year: return "year";
    case TargetField::language: return "language";
    case TargetField::typology: return "typology";
    case TargetField::frbr_level: return "frbr_level";
    case TargetField::parent_id: return "parent_id";
    case TargetField::collections: return "collections";
    case TargetField::identifiers: return "identifiers";
    case TargetField::is_primary_source: return "is_primary_source";
  }
  return "?";
}

std::optional<TargetField> parse_target_field(std::string_view s) noexcept {
  static constexpr std::array kAll{TargetField::id,          TargetField::title,      TargetField::authors,
                                   TargetField::year,        TargetField::language,   TargetField::typology,
                                   TargetField::frbr_level,  TargetField::parent_id,  TargetField::collections,
                                   TargetField::identifiers, TargetField::is_primary_source};
  for (auto f : kAll)
    if (to_string(f) == s) return f;
  return std::nullopt;
}

Transform Transform::parse(std::string_view s) {
  if (s == "none") return {TransformKind::none, std::nullopt};
  if (s == "year-extract") return {TransformKind::year_extract, std::nullopt};
  if (s == "language-code") return {TransformKind::language_code, std::nullopt};
  if (s == "split-authors") return {TransformKind::split_authors, std::nullopt};
  if (s == "identifier") return {TransformKind::identifier, std::nullopt};
  if (s.starts_with("identifier(") && s.ends_with(")")) {
    auto scheme = parse_id_scheme(s.substr(11, s.size() - 12));
    if (!scheme) throw Error(ErrorCode::invalid_mapping, "unknown identifier scheme in '" + std::string(s) + "'");
    return {TransformKind::identifier, scheme};
  }
  throw Error(ErrorCode::invalid_mapping, "unknown transform '" + std::string(s) + "'");
}

std::string Transform::to_string() const {
  switch (kind) {
    case TransformKind::none: return "none";
    case TransformKind::year_extract: return "year-extract";
    case TransformKind::language_code: return "language-code";
    case TransformKind::split_authors: return "split-authors";
    case TransformKind::identifier:
      return scheme ? "identifier(" + std::string(huci::to_string(*scheme)) + ")" : "identifier";
  }
  return "?";
}

AlignmentMapping AlignmentMapping::from_json(const Json& j) {
  try {
    AlignmentMapping m;
    m.name = j.value("name", std::string("custom"));
    std::set<TargetField> seen;
    for (const Json& e : j.at("entries")) {
      MappingEntry entry;
      entry.source_path = e.at("source_path").get<std::string>();
      if (entry.source_path.empty()) throw Error(ErrorCode::invalid_mapping, "empty source_path");
      const auto target = parse_target_field(e.at("target_field").get<std::string>());
      if (!target) throw Error(ErrorCode::invalid_mapping, "unknown target_field " + e.at("target_field").dump());
      entry.target = *target;
      entry.transform = Transform::parse(e.value("transform", std::string("none")));
      if (entry.target != TargetField::identifiers && !seen.insert(entry.target).second)
        throw Error(ErrorCode::invalid_mapping, "target_field '" + std::string(to_string(entry.target)) + "' mapped twice");
      m.entries.push_back(std::move(entry));
    }
    if (auto it = j.find("defaults"); it != j.end()) {
      for (const auto& [k, v] : it->items()) {
        if (!parse_target_field(k)) throw Error(ErrorCode::invalid_mapping, "unknown default field '" + k + "'");
        m.defaults[k] = v;
      }
    }
    if (auto it = j.find("language_map"); it != j.end()) {
      if (it->is_string() && it->get<std::string>() == "builtin") {
        m.language_map = builtin_language_map();
      } else {
        for (const auto& [k, v] : it->items()) m.language_map[lower(k)] = v.get<std::string>();
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_mapping, e.what());
  }
}

Json AlignmentMapping::to_json() const {
  Json j;
  j["name"] = name;
  Json entries_json = Json::array();
  for (const auto& e : entries)
    entries_json.push_back(
        {{"source_path", e.source_path}, {"target_field", huci::to_string(e.target)}, {"transform", e.transform.to_string()}});
  j["entries"] = std::move(entries_json);
  Json d = Json::object();
  for (const auto& [k, v] : defaults) d[k] = v;
  j["defaults"] = std::move(d);
  j["language_map"] = Json(language_map);
  return j;
}

AlignmentMapping builtin_mapping(SourceFormat format) {
  switch (format) {
    case SourceFormat::marc_json: return AlignmentMapping::from_json(Json::parse(builtin_data::kMarcDefault));
    case SourceFormat::flat_json: return AlignmentMapping::from_json(Json::parse(builtin_data::kFlatDefault));
    case SourceFormat::csv: return AlignmentMapping::from_json(Json::parse(builtin_data::kCsvDefault));
  }
  throw Error(ErrorCode::unknown_format);
}

const std::map<std::string, std::string>& builtin_language_map() { return parsed_language_map(); }

std::optional<std::int64_t> extract_year(std::string_view text) {
  auto digit = [&](std::size_t i) { return i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); };
  for (std::size_t i = 0; i + 4 <= text.size(); ++i) {
    if (!digit(i) || (i > 0 && digit(i - 1))) continue;
    if (!(digit(i + 1) && digit(i + 2) && digit(i + 3)) || digit(i + 4)) {
      // Skip the rest of this digit run.
      while (digit(i + 1)) ++i;
      continue;
    }
    std::int64_t v = 0;
    std::from_chars(text.data() + i, text.data() + i + 4, v);
    const bool minus = i > 0 && text[i - 1] == '-' &&
                       (i == 1 || !std::isalnum(static_cast<unsigned char>(text[i - 2])));
    return minus ? -v : v;
  }
  return std::nullopt;
}

std::vector<Author> split_authors(std::string_view text, bool pipe_separated) {
  std::vector<Author> out;
  std::string normalized(text);
  if (pipe_separated) std::replace(normalized.begin(), normalized.end(), '|', ';');
  for (const auto& part : split(normalized, ';')) {
    std::string_view p = trim(part);
    while (!p.empty() && (p.back() == ',' || std::isspace(static_cast<unsigned char>(p.back())))) p.remove_suffix(1);
    if (p.empty()) continue;
    const auto comma = p.find(',');
    if (comma == std::string_view::npos) {
      out.push_back({std::string(p), std::nullopt});
    } else {
      const auto family = trim(p.substr(0, comma));
      const auto given = trim(p.substr(comma + 1));
      out.push_back({std::string(family), given.empty() ? std::nullopt : std::optional<std::string>(given)});
    }
  }
  return out;
}

std::string scope_id(std::string_view provider_id, std::string_view local_id) {
  const std::string_view local = trim(local_id);
  if (local.empty()) throw Error(ErrorCode::missing_id, "empty local id");
  std::string out;
  if (local.size() > provider_id.size() && local.starts_with(provider_id) && local[provider_id.size()] == ':') {
    out = std::string(local);
  } else {
    out = std::string(provider_id) + ":" + std::string(local);
  }
  if (!is_valid_internal_id(out)) throw Error(ErrorCode::malformed_id, "id '" + out + "' contains '->'");
  return out;
}

AlignedResource apply_alignment(const ProviderRecord& record, const AlignmentMapping& mapping,
                                std::string_view provider_id) {
  AlignedResource out;
  BibliographicResource& r = out.resource;
  const auto& fields = record.raw_fields;
  std::vector<bool> used(fields.size(), false);
  const bool csv = record.format == SourceFormat::csv;
  std::set<TargetField> assigned;

  // Defaults first; mapped values override them.
  for (const auto& [name, value] : mapping.defaults) {
    const TargetField f = *parse_target_field(name);
    const std::string v = value.is_string() ? value.get<std::string>() : value.dump();
    switch (f) {
      case TargetField::typology:
        if (auto t = parse_typology(v)) r.typology = *t;
        else throw Error(ErrorCode::invalid_mapping, "bad default typology '" + v + "'");
        break;
      case TargetField::frbr_level:
        if (auto l = parse_frbr_level(v)) r.frbr_level = *l;
        else throw Error(ErrorCode::invalid_mapping, "bad default frbr_level '" + v + "'");
        break;
      case TargetField::collections: r.collections.insert(v); break;
      case TargetField::is_primary_source: r.is_primary_source = parse_bool(v); break;
      case TargetField::language: r.language = normalize_language(v, mapping.language_map); break;
      default: throw Error(ErrorCode::invalid_mapping, "field '" + name + "' cannot have a default");
    }
  }

  std::optional<std::string> local_id;
  for (const MappingEntry& entry : mapping.entries) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (used[i] || !path_matches(entry.source_path, fields[i].first)) continue;
      used[i] = true;
      const std::string& path = fields[i].first;
      const std::string& value = fields[i].second;
      // Scalar targets keep their first value; later matches are consumed but ignored.
      const bool first = assigned.insert(entry.target).second || entry.target == TargetField::identifiers ||
                         entry.target == TargetField::collections || entry.target == TargetField::authors;
      if (!first) continue;
      switch (entry.target) {
        case TargetField::id: local_id = value; break;
        case TargetField::title: r.title = clean_title(value); break;
        case TargetField::authors: {
          auto authors = split_authors(value, csv);
          r.authors.insert(r.authors.end(), authors.begin(), authors.end());
          break;
        }
        case TargetField::year:
          if (entry.transform.kind == TransformKind::year_extract) {
            r.year = extract_year(value);
            if (!r.year) throw Error(ErrorCode::invalid_year, "no year in '" + value + "'");
          } else {
            r.year = parse_integer_year(value);
          }
          break;
        case TargetField::language: r.language = normalize_language(value, mapping.language_map); break;
        case TargetField::typology:
          if (auto t = parse_typology(trim(value))) r.typology = *t;
          else throw Error(ErrorCode::malformed_record, "unknown typology '" + value + "'");
          break;
        case TargetField::frbr_level:
          if (auto l = parse_frbr_level(trim(value))) r.frbr_level = *l;
          else throw Error(ErrorCode::malformed_record, "unknown frbr_level '" + value + "'");
          break;
        case TargetField::parent_id:
          if (!trim(value).empty()) r.parent_id = scope_id(provider_id, value);
          break;
        case TargetField::collections:
          for (const auto& tag : csv ? split(value, '|') : std::vector<std::string>{value})
            if (!trim(tag).empty()) r.collections.emplace(trim(tag));
          break;
        case TargetField::is_primary_source: r.is_primary_source = parse_bool(value); break;
        case TargetField::identifiers: {
          try {
            if (entry.transform.scheme) {
              for (const auto& v : csv ? split(value, '|') : std::vector<std::string>{value})
                if (!trim(v).empty()) r.identifiers.emplace(*entry.transform.scheme, v);
            } else if (path.ends_with(".value")) {
              const std::string scheme_path = path.substr(0, path.size() - 6) + ".scheme";
              bool found = false;
              for (std::size_t k = 0; k < fields.size(); ++k) {
                if (fields[k].first != scheme_path) continue;
                auto scheme = parse_id_scheme(lower(trim(fields[k].second)));
                if (!scheme) throw Error(ErrorCode::invalid_identifier, "unknown scheme '" + fields[k].second + "'");
                r.identifiers.emplace(*scheme, value);
                used[k] = true;
                found = true;
                break;
              }
              if (!found) r.identifiers.insert(PersistentIdentifier::parse(value));
            } else {
              for (const auto& v : csv ? split(value, '|') : std::vector<std::string>{value})
                if (!trim(v).empty()) r.identifiers.insert(PersistentIdentifier::parse(trim(v)));
            }
          } catch (const Error& e) {
            if (e.code() == ErrorCode::invalid_identifier) throw Error(ErrorCode::malformed_record, e.what());
            throw;
          }
          break;
        }
      }
    }
  }

  if (!local_id) {
    // Conventional id carriers when the mapping names none.
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (used[i] || (fields[i].first != "001" && fields[i].first != "id")) continue;
      used[i] = true;
      local_id = fields[i].second;
      break;
    }
  }
  if (!local_id || trim(*local_id).empty()) throw Error(ErrorCode::missing_id, "record carries no id");
  r.id = scope_id(provider_id, *local_id);

  for (std::size_t i = 0; i < fields.size(); ++i)
    (used[i] ? out.consumed_paths : out.unmapped_paths).push_back(fields[i].first);
  out.notes.push_back("mapping=" + mapping.name);
  if (!out.unmapped_paths.empty()) {
    std::string joined;
    for (const auto& p : out.unmapped_paths) joined += (joined.empty() ? "" : ",") + p;
    out.notes.push_back("unmapped=" + joined);
  }
  return out;
}

DatasetHeader header_from_json(const Json& j) {
  try {
    DatasetHeader h;
    if (j.contains("provider_id")) {
      h.provider_id = j.at("provider_id").get<std::string>();
    } else {
      h.provider_id = j.at("node_id").get<std::string>();
    }
    if (h.provider_id.empty()) throw Error(ErrorCode::malformed_record, "empty provider_id");
    const auto lic = parse_license(j.value("license", std::string("unspecified")));
    if (!lic) throw Error(ErrorCode::malformed_record, "unknown license " + j["license"].dump());
    h.license = *lic;
    if (j.contains("created") && !j["created"].is_null()) h.created = Timestamp::parse(j["created"].get<std::string>());
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_record, std::string("dataset header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::malformed_record) throw;
    throw Error(ErrorCode::malformed_record, e.what());
  }
}

Json to_json(const DatasetHeader& h) {
  Json j;
  j["provider_id"] = h.provider_id;
  j["license"] = to_string(h.license);
  j["created"] = h.created ? Json(h.created->to_string()) : Json(nullptr);
  return j;
}

LicenseStatus validate_license(const DatasetHeader& header) noexcept {
  return header.license == License::unspecified ? LicenseStatus::warn : LicenseStatus::pass;
}

DatasetBundle bundle_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("header")) throw Error(ErrorCode::malformed_record, "bundle needs a 'header' object");
  DatasetBundle b;
  b.header = header_from_json(j["header"]);
  if (auto it = j.find("resources"); it != j.end()) {
    if (!it->is_array()) throw Error(ErrorCode::malformed_record, "'resources' must be an array");
    for (const auto& r : *it) b.resources.push_back(resource_from_json(r));
  }
  if (auto it = j.find("citations"); it != j.end()) {
    if (!it->is_array()) throw Error(ErrorCode::malformed_record, "'citations' must be an array");
    for (const auto& c : *it) b.citations.push_back(citation_from_json(c));
  }
  return b;
}

Json to_json(const DatasetBundle& b) {
  Json j;
  j["header"] = to_json(b.header);
  Json rs = Json::array();
  for (const auto& r : b.resources) rs.push_back(to_json(r));
  j["resources"] = std::move(rs);
  Json cs = Json::array();
  for (const auto& c : b.citations) cs.push_back(to_json(c));
  j["citations"] = std::move(cs);
  return j;
}

std::vector<Citation> citations_from_json(const Json& j, const DatasetHeader& header) {
  if (!j.is_array()) throw Error(ErrorCode::malformed_record, "citation list must be a JSON array");
  std::vector<Citation> out;
  for (const Json& e : j) {
    Citation c = citation_from_json(e);
    c.citing_id = scope_id(header.provider_id, c.citing_id);
    c.cited_id = scope_id(header.provider_id, c.cited_id);
    c.citation_id = mint_citation_id(c.citing_id, c.cited_id);
    if (!e.contains("license") || header.license == License::unspecified) c.license = header.license;
    c.provenance.clear();
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace huci
