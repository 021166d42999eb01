#include "huci/codec.hpp"

#include "huci/error.hpp"

namespace huci {

namespace {

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::malformed_record, what); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) bad(std::string("expected object while reading '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing key '") + key + "'");
  return *it;
}

std::string str(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) bad(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> opt_str(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) bad(std::string("'") + key + "' must be a string or null");
  return it->get<std::string>();
}

template <typename E>
E enum_field(const Json& j, const char* key, std::optional<E> (*parse)(std::string_view) noexcept) {
  const std::string s = str(j, key);
  auto v = parse(s);
  if (!v) bad(std::string("bad value '") + s + "' for '" + key + "'");
  return *v;
}

}  // namespace

Json to_json(const PersistentIdentifier& id) {
  Json j;
  j["scheme"] = to_string(id.scheme());
  j["value"] = id.value();
  return j;
}

Json to_json(const Author& a) {
  Json j;
  j["family"] = a.family;
  j["given"] = opt(a.given);
  return j;
}

Json to_json(const CitationContext& c) {
  Json j;
  if (c.access == Access::restricted && !c.excerpt) {
    j["access"] = "restricted";
    return j;
  }
  j["excerpt"] = opt(c.excerpt);
  j["window"] = c.window ? Json(to_string(*c.window)) : Json(nullptr);
  j["access"] = to_string(c.access);
  j["group"] = opt(c.group);
  return j;
}

Json to_json(const BibliographicResource& r) {
  Json j;
  j["id"] = r.id;
  j["title"] = r.title;
  Json authors = Json::array();
  for (const auto& a : r.authors) authors.push_back(to_json(a));
  j["authors"] = std::move(authors);
  j["year"] = opt(r.year);
  j["language"] = opt(r.language);
  j["typology"] = to_string(r.typology);
  j["frbr_level"] = to_string(r.frbr_level);
  j["parent_id"] = opt(r.parent_id);
  j["collections"] = Json(r.collections);
  Json ids = Json::array();
  for (const auto& id : r.identifiers) ids.push_back(to_json(id));
  j["identifiers"] = std::move(ids);
  j["is_primary_source"] = r.is_primary_source;
  return j;
}

Json to_json(const Citation& c) {
  Json j;
  j["citation_id"] = c.citation_id;
  j["citing_id"] = c.citing_id;
  j["cited_id"] = c.cited_id;
  j["context"] = c.context ? to_json(*c.context) : Json(nullptr);
  j["locus"] = opt(c.locus);
  j["license"] = to_string(c.license);
  j["provenance"] = Json(c.provenance);
  return j;
}

PersistentIdentifier identifier_from_json(const Json& j) {
  const auto scheme = enum_field<IdScheme>(j, "scheme", parse_id_scheme);
  try {
    return PersistentIdentifier(scheme, str(j, "value"));
  } catch (const Error& e) {
    bad(e.what());
  }
}

BibliographicResource resource_from_json(const Json& j) {
  BibliographicResource r;
  r.id = str(j, "id");
  r.title = j.contains("title") && !j["title"].is_null() ? str(j, "title") : std::string();
  if (auto it = j.find("authors"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) bad("'authors' must be an array");
    for (const auto& a : *it) {
      if (a.is_string()) {
        r.authors.push_back({a.get<std::string>(), std::nullopt});
      } else {
        r.authors.push_back({str(a, "family"), opt_str(a, "given")});
      }
    }
  }
  if (auto it = j.find("year"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) bad("'year' must be an integer");
    r.year = it->get<std::int64_t>();
  }
  r.language = opt_str(j, "language");
  if (j.contains("typology")) r.typology = enum_field<Typology>(j, "typology", parse_typology);
  if (j.contains("frbr_level")) r.frbr_level = enum_field<FrbrLevel>(j, "frbr_level", parse_frbr_level);
  r.parent_id = opt_str(j, "parent_id");
  if (auto it = j.find("collections"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) bad("'collections' must be an array");
    for (const auto& c : *it) {
      if (!c.is_string()) bad("collection tags must be strings");
      r.collections.insert(c.get<std::string>());
    }
  }
  if (auto it = j.find("identifiers"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) bad("'identifiers' must be an array");
    for (const auto& id : *it) r.identifiers.insert(identifier_from_json(id));
  }
  if (auto it = j.find("is_primary_source"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) bad("'is_primary_source' must be a boolean");
    r.is_primary_source = it->get<bool>();
  }
  return r;
}

Citation citation_from_json(const Json& j) {
  Citation c;
  c.citing_id = str(j, "citing_id");
  c.cited_id = str(j, "cited_id");
  c.citation_id = j.contains("citation_id") && !j["citation_id"].is_null() ? str(j, "citation_id") : std::string();
  if (auto it = j.find("context"); it != j.end() && !it->is_null()) {
    CitationContext ctx;
    ctx.excerpt = opt_str(*it, "excerpt");
    if (auto w = opt_str(*it, "window")) {
      auto parsed = parse_context_window(*w);
      if (!parsed) bad("bad context window '" + *w + "'");
      ctx.window = parsed;
    }
    if (auto a = opt_str(*it, "access")) {
      auto parsed = parse_access(*a);
      if (!parsed) bad("bad context access '" + *a + "'");
      ctx.access = *parsed;
    }
    ctx.group = opt_str(*it, "group");
    c.context = std::move(ctx);
  }
  c.locus = opt_str(j, "locus");
  if (j.contains("license")) c.license = enum_field<License>(j, "license", parse_license);
  if (auto it = j.find("provenance"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) bad("'provenance' must be an array");
    for (const auto& p : *it) {
      if (!p.is_string()) bad("provenance ids must be strings");
      c.provenance.push_back(p.get<std::string>());
    }
  }
  return c;
}

std::string pretty(const Json& j) { return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n"; }

}  // namespace huci
