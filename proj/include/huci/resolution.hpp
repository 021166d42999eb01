#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "huci/clock.hpp"
#include "huci/model.hpp"
#include "huci/provenance.hpp"

namespace huci {

using Json = nlohmann::ordered_json;

struct SimilarityWeights {
  double title = 0.6;
  double year = 0.2;
  double author = 0.2;
};

struct ResolutionConfig {
  double similarity_threshold = 0.8;
  double candidate_threshold = 0.7;
  SimilarityWeights weights;
  int blocking_key_tokens = 4;

  /// Throws invalid_config unless weights sum to 1 (within 1e-9), thresholds
  /// lie in [0,1] and blocking_key_tokens is positive.
  void validate() const;

  static ResolutionConfig from_json(const Json& j);
  Json to_json() const;
};

struct Cluster {
  std::set<std::string> members;
  PersistentIdentifier canonical;

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

/// Partition of resource ids into clusters keyed by canonical internal id.
struct ClusterMap {
  std::map<std::string, std::string> mapping;  // resource id -> cluster id
  std::map<std::string, Cluster> clusters;

  /// Cluster id for `resource_id`, or nullptr.
  const std::string* cluster_of(const std::string& resource_id) const;
  /// The partition alone, independent of how clusters are named.
  std::set<std::set<std::string>> partition() const;

  friend bool operator==(const ClusterMap&, const ClusterMap&) = default;
};

/// NFKD, drop combining marks, lowercase, collapse non-alphanumeric runs to a
/// single space, trim.
std::string normalize_title(std::string_view text);

/// First `tokens` space-separated tokens of an already normalized title.
std::string blocking_key(std::string_view normalized_title, int tokens);

/// Resource-identifying schemes (doi, handle, isbn, uri). Agent schemes
/// (orcid, viaf) and local ids never link resources.
bool links_resources(IdScheme scheme) noexcept;

double metadata_similarity(const BibliographicResource& a, const BibliographicResource& b, const ResolutionConfig& config);

/// Priority doi > handle > isbn > uri, smallest value first; without any of
/// those, the smallest member internal id as a local identifier.
PersistentIdentifier choose_canonical_id(const std::set<PersistentIdentifier>& identifiers,
                                         std::span<const std::string> member_ids);

/// Internal id of a merged resource: "scheme:value", or the bare value for
/// local canonical ids.
std::string canonical_internal_id(const PersistentIdentifier& canonical);

/// Connected components of the shared-identifier graph.
ClusterMap identifier_clusters(std::span<const BibliographicResource> resources);

/// Field-wise merge of cluster members. Members are taken in ascending
/// internal-id order (so ascending provider id); the first member carrying a
/// scalar wins, identifiers and collections are unioned. The result keeps the
/// first member's id; callers assign the canonical id.
BibliographicResource merge_members(std::vector<const BibliographicResource*> members);

struct DedupResult {
  std::vector<BibliographicResource> resources;  // sorted by id
  std::vector<Citation> citations;               // sorted by citation_id
  ClusterMap clusters;
  std::map<std::string, std::string> citation_rewrites;  // input citation id -> surviving id
  std::vector<ProvenanceRecord> merge_records;
};

/// Phase 1 clusters by shared identifiers; phase 2 repeatedly merges clusters
/// whose merged representatives share a blocking key and score at or above
/// the similarity threshold, until no pair qualifies. Citations are rewritten
/// to canonical endpoints and duplicates collapse.
DedupResult deduplicate(std::vector<BibliographicResource> resources, std::vector<Citation> citations,
                        const ResolutionConfig& config, Clock& clock);

struct ReferenceQuery {
  std::string title;
  std::optional<std::int64_t> year;
  std::string author_family;
  std::set<PersistentIdentifier> identifiers;
};

struct Candidate {
  std::string id;
  double score = 0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Ranked (score desc, id asc) catalogue matches scoring >= candidate_threshold.
/// Throws empty_reference for an empty title.
std::vector<Candidate> match_reference(const ReferenceQuery& reference, std::span<const BibliographicResource> catalogue,
                                       const ResolutionConfig& config);

}  // namespace huci
