#include "huci/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

#include "huci/error.hpp"

namespace huci {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s) {
  for (const auto& [e, name] : table)
    if (name == s) return e;
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
  for (const auto& [e, name] : table)
    if (e == v) return name;
  return "?";
}

constexpr std::array<std::pair<IdScheme, std::string_view>, 7> kSchemes{{
    {IdScheme::doi, "doi"},
    {IdScheme::handle, "handle"},
    {IdScheme::isbn, "isbn"},
    {IdScheme::viaf, "viaf"},
    {IdScheme::orcid, "orcid"},
    {IdScheme::uri, "uri"},
    {IdScheme::local, "local"},
}};

constexpr std::array<std::pair<Typology, std::string_view>, 11> kTypologies{{
    {Typology::journal_article, "journal-article"},
    {Typology::book, "book"},
    {Typology::book_chapter, "book-chapter"},
    {Typology::edited_volume, "edited-volume"},
    {Typology::journal, "journal"},
    {Typology::archival_document, "archival-document"},
    {Typology::manuscript, "manuscript"},
    {Typology::inscription, "inscription"},
    {Typology::papyrus, "papyrus"},
    {Typology::artwork, "artwork"},
    {Typology::other, "other"},
}};

constexpr std::array<std::pair<FrbrLevel, std::string_view>, 4> kLevels{{
    {FrbrLevel::item, "item"},
    {FrbrLevel::manifestation, "manifestation"},
    {FrbrLevel::expression, "expression"},
    {FrbrLevel::work, "work"},
}};

constexpr std::array<std::pair<License, std::string_view>, 3> kLicenses{{
    {License::cc0, "cc0"},
    {License::other_open, "other-open"},
    {License::unspecified, "unspecified"},
}};

constexpr std::array<std::pair<Access, std::string_view>, 2> kAccess{{
    {Access::open, "open"},
    {Access::restricted, "restricted"},
}};

constexpr std::array<std::pair<ContextWindow, std::string_view>, 3> kWindows{{
    {ContextWindow::sentence, "sentence"},
    {ContextWindow::paragraph, "paragraph"},
    {ContextWindow::custom, "custom"},
}};

constexpr std::array<std::pair<Activity, std::string_view>, 4> kActivities{{
    {Activity::create, "create"},
    {Activity::update, "update"},
    {Activity::merge, "merge"},
    {Activity::remove, "delete"},
}};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(IdScheme v) noexcept { return name_of(kSchemes, v); }
std::string_view to_string(Typology v) noexcept { return name_of(kTypologies, v); }
std::string_view to_string(FrbrLevel v) noexcept { return name_of(kLevels, v); }
std::string_view to_string(License v) noexcept { return name_of(kLicenses, v); }
std::string_view to_string(Access v) noexcept { return name_of(kAccess, v); }
std::string_view to_string(ContextWindow v) noexcept { return name_of(kWindows, v); }
std::string_view to_string(Activity v) noexcept { return name_of(kActivities, v); }

std::optional<IdScheme> parse_id_scheme(std::string_view s) noexcept { return lookup(kSchemes, s); }
std::optional<Typology> parse_typology(std::string_view s) noexcept { return lookup(kTypologies, s); }
std::optional<FrbrLevel> parse_frbr_level(std::string_view s) noexcept { return lookup(kLevels, s); }
std::optional<License> parse_license(std::string_view s) noexcept { return lookup(kLicenses, s); }
std::optional<Access> parse_access(std::string_view s) noexcept { return lookup(kAccess, s); }
std::optional<ContextWindow> parse_context_window(std::string_view s) noexcept { return lookup(kWindows, s); }
std::optional<Activity> parse_activity(std::string_view s) noexcept { return lookup(kActivities, s); }

PersistentIdentifier::PersistentIdentifier(IdScheme scheme, std::string_view raw_value)
    : scheme_(scheme), value_(trim(raw_value)) {
  if (value_.empty()) throw Error(ErrorCode::invalid_identifier, "empty value for scheme " + std::string(huci::to_string(scheme)));
  if (scheme_ == IdScheme::doi)
    std::transform(value_.begin(), value_.end(), value_.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
}

PersistentIdentifier PersistentIdentifier::parse(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) throw Error(ErrorCode::invalid_identifier, "expected scheme:value, got '" + std::string(s) + "'");
  const auto scheme = parse_id_scheme(trim(s.substr(0, colon)));
  if (!scheme) throw Error(ErrorCode::invalid_identifier, "unknown scheme in '" + std::string(s) + "'");
  return PersistentIdentifier(*scheme, s.substr(colon + 1));
}

std::string PersistentIdentifier::to_string() const { return std::string(huci::to_string(scheme_)) + ":" + value_; }

Citation redacted(const Citation& c) {
  if (!c.context || c.context->access != Access::restricted) return c;
  Citation out = c;
  out.context = CitationContext{std::nullopt, std::nullopt, Access::restricted, std::nullopt};
  return out;
}

bool is_valid_internal_id(std::string_view id) noexcept {
  return !id.empty() && id.find("->") == std::string_view::npos;
}

std::string mint_citation_id(std::string_view citing_id, std::string_view cited_id) {
  if (!is_valid_internal_id(citing_id) || !is_valid_internal_id(cited_id))
    throw Error(ErrorCode::malformed_id, "citation endpoints must be non-empty and free of '->'");
  std::string out;
  out.reserve(citing_id.size() + cited_id.size() + 2);
  out.append(citing_id).append("->").append(cited_id);
  return out;
}

ComplianceVector check_open_citation(const Citation& citation, const BibliographicResource& citing,
                                     const BibliographicResource& cited, bool reachable, bool separate) {
  ComplianceVector v;
  const bool resolves = citation.citing_id == citing.id && citation.cited_id == cited.id;
  v.structured = resolves && !citing.title.empty() && !cited.title.empty();
  v.separate = separate;
  v.open = citation.license == License::cc0 || citation.license == License::other_open;
  v.identifiable = !citation.citation_id.empty() && !citing.identifiers.empty() && !cited.identifiers.empty();
  v.available = reachable;
  return v;
}

const std::string& frbr_map(const std::string& resource_id, FrbrLevel level, const ResourceStore& store) {
  auto it = store.find(resource_id);
  if (it == store.end()) throw Error(ErrorCode::unknown_resource, resource_id);
  // Four levels bound any valid chain; the hop cap also stops malformed cycles.
  for (int hops = 0; hops < 4; ++hops) {
    const BibliographicResource& r = it->second;
    if (r.frbr_level >= level || !r.parent_id) break;
    auto parent = store.find(*r.parent_id);
    if (parent == store.end()) break;
    const FrbrLevel pl = parent->second.frbr_level;
    if (pl <= r.frbr_level || pl > level) break;
    it = parent;
  }
  return it->first;
}

std::map<RollupKey, std::size_t> frbr_rollup(const CitationStore& citations, FrbrLevel level,
                                             const ResourceStore& store) {
  std::map<RollupKey, std::size_t> out;
  for (const auto& [_, c] : citations) out[{frbr_map(c.citing_id, level, store), frbr_map(c.cited_id, level, store)}] = 1;
  return out;
}

bool frbr_chain_valid(const std::string& id, const ResourceStore& store) {
  auto it = store.find(id);
  if (it == store.end()) return false;
  int links = 0;
  while (it->second.parent_id) {
    if (*it->second.parent_id == it->first) return false;
    auto parent = store.find(*it->second.parent_id);
    if (parent == store.end()) return true;
    if (parent->second.frbr_level <= it->second.frbr_level) return false;
    if (++links > 3) return false;
    it = parent;
  }
  return true;
}

std::string_view provider_of(std::string_view internal_id) noexcept {
  const auto colon = internal_id.find(':');
  return colon == std::string_view::npos ? internal_id : internal_id.substr(0, colon);
}

}  // namespace huci
