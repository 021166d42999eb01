#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace huci {

enum class IdScheme { doi, handle, isbn, viaf, orcid, uri, local };

enum class Typology {
  journal_article,
  book,
  book_chapter,
  edited_volume,
  journal,
  archival_document,
  manuscript,
  inscription,
  papyrus,
  artwork,
  other,
};

/// Declared in aggregation order: item < manifestation < expression < work.
enum class FrbrLevel { item, manifestation, expression, work };

enum class License { cc0, other_open, unspecified };
enum class Access { open, restricted };
enum class ContextWindow { sentence, paragraph, custom };
enum class Activity { create, update, merge, remove };

std::string_view to_string(IdScheme v) noexcept;
std::string_view to_string(Typology v) noexcept;
std::string_view to_string(FrbrLevel v) noexcept;
std::string_view to_string(License v) noexcept;
std::string_view to_string(Access v) noexcept;
std::string_view to_string(ContextWindow v) noexcept;
std::string_view to_string(Activity v) noexcept;

std::optional<IdScheme> parse_id_scheme(std::string_view s) noexcept;
std::optional<Typology> parse_typology(std::string_view s) noexcept;
std::optional<FrbrLevel> parse_frbr_level(std::string_view s) noexcept;
std::optional<License> parse_license(std::string_view s) noexcept;
std::optional<Access> parse_access(std::string_view s) noexcept;
std::optional<ContextWindow> parse_context_window(std::string_view s) noexcept;
std::optional<Activity> parse_activity(std::string_view s) noexcept;

/// (scheme, value) pair. Values are trimmed; DOIs are lowercased.
class PersistentIdentifier {
 public:
  PersistentIdentifier(IdScheme scheme, std::string_view raw_value);  // throws invalid_identifier

  /// Parses "scheme:value" (split at the first colon).
  static PersistentIdentifier parse(std::string_view scheme_colon_value);

  IdScheme scheme() const { return scheme_; }
  const std::string& value() const { return value_; }
  std::string to_string() const;

  friend auto operator<=>(const PersistentIdentifier&, const PersistentIdentifier&) = default;
  friend bool operator==(const PersistentIdentifier&, const PersistentIdentifier&) = default;

 private:
  IdScheme scheme_;
  std::string value_;
};

struct Author {
  std::string family;
  std::optional<std::string> given;

  friend bool operator==(const Author&, const Author&) = default;
};

struct BibliographicResource {
  std::string id;
  std::set<PersistentIdentifier> identifiers;
  Typology typology = Typology::other;
  std::string title;
  std::vector<Author> authors;
  std::optional<std::int64_t> year;  // astronomical numbering: 0 = 1 BCE
  std::optional<std::string> language;
  FrbrLevel frbr_level = FrbrLevel::manifestation;
  std::optional<std::string> parent_id;
  std::set<std::string> collections;
  bool is_primary_source = false;

  friend bool operator==(const BibliographicResource&, const BibliographicResource&) = default;
};

struct CitationContext {
  /// Absent when the context has been redacted.
  std::optional<std::string> excerpt;
  std::optional<ContextWindow> window;
  Access access = Access::open;
  /// Same-paragraph evidence for proximal co-citation, assigned at ingest.
  std::optional<std::string> group;

  friend bool operator==(const CitationContext&, const CitationContext&) = default;
};

struct Citation {
  std::string citation_id;
  std::string citing_id;
  std::string cited_id;
  std::optional<CitationContext> context;
  std::optional<std::string> locus;
  License license = License::unspecified;
  std::vector<std::string> provenance;

  friend bool operator==(const Citation&, const Citation&) = default;
};

/// Returns a copy whose restricted context carries no excerpt, window or group.
Citation redacted(const Citation& c);

struct ComplianceVector {
  bool structured = false;
  bool separate = false;
  bool open = false;
  bool identifiable = false;
  bool available = false;

  bool is_open_citation() const { return structured && separate && open && identifiable && available; }
  friend bool operator==(const ComplianceVector&, const ComplianceVector&) = default;
};

using ResourceStore = std::map<std::string, BibliographicResource>;
using CitationStore = std::map<std::string, Citation>;

/// An in-memory citation graph: the shape shared by node stores, the merged
/// federation index and dump files.
struct CitationIndex {
  ResourceStore resources;
  CitationStore citations;

  friend bool operator==(const CitationIndex&, const CitationIndex&) = default;
};

/// Internal ids must be non-empty and free of "->".
bool is_valid_internal_id(std::string_view id) noexcept;

std::string mint_citation_id(std::string_view citing_id, std::string_view cited_id);

ComplianceVector check_open_citation(const Citation& citation, const BibliographicResource& citing,
                                     const BibliographicResource& cited, bool reachable,
                                     bool separate = true);

/// Walks parent links upward without overshooting `level`; a resource stands
/// in for missing ancestors.
const std::string& frbr_map(const std::string& resource_id, FrbrLevel level, const ResourceStore& store);

using RollupKey = std::pair<std::string, std::string>;
std::map<RollupKey, std::size_t> frbr_rollup(const CitationStore& citations, FrbrLevel level,
                                             const ResourceStore& store);

/// Checks the FRBR parent invariants for `id` against `store`: a present
/// parent is strictly higher, the chain is acyclic and at most 3 links long.
/// Parents missing from the store end the chain.
bool frbr_chain_valid(const std::string& id, const ResourceStore& store);

/// Provider prefix of a "provider:local" internal id (the whole id if no colon).
std::string_view provider_of(std::string_view internal_id) noexcept;

}  // namespace huci
