#include "huci/resolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "huci/codec.hpp"
#include "huci/error.hpp"

namespace huci {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

std::string first_author_key(const BibliographicResource& r) {
  return r.authors.empty() ? std::string() : normalize_title(r.authors.front().family);
}

/// Precomputed comparison features of one resource.
struct Features {
  std::string title;
  std::optional<std::int64_t> year;
  std::string author;

  explicit Features(const BibliographicResource& r)
      : title(normalize_title(r.title)), year(r.year), author(first_author_key(r)) {}
};

double score(const Features& a, const Features& b, const SimilarityWeights& w) {
  double s = 0;
  if (!a.title.empty() && a.title == b.title) s += w.title;
  if (a.year && b.year && *a.year == *b.year) s += w.year;
  if (!a.author.empty() && a.author == b.author) s += w.author;
  return s;
}

// Groups indices by union-find root, each group sorted ascending; groups are
// ordered by their smallest index.
std::vector<std::vector<std::size_t>> components(UnionFind& uf, std::size_t n) {
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(by_root.size());
  for (auto& [_, members] : by_root) out.push_back(std::move(members));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

void link_by_identifiers(std::span<const BibliographicResource> resources, UnionFind& uf) {
  std::map<PersistentIdentifier, std::size_t> first_holder;
  for (std::size_t i = 0; i < resources.size(); ++i) {
    for (const auto& id : resources[i].identifiers) {
      if (!links_resources(id.scheme())) continue;
      auto [it, inserted] = first_holder.emplace(id, i);
      if (!inserted) uf.unite(it->second, i);
    }
  }
}

Cluster make_cluster(std::span<const BibliographicResource> resources, const std::vector<std::size_t>& group) {
  std::set<PersistentIdentifier> ids;
  std::vector<std::string> member_ids;
  for (auto i : group) {
    ids.insert(resources[i].identifiers.begin(), resources[i].identifiers.end());
    member_ids.push_back(resources[i].id);
  }
  Cluster c{{member_ids.begin(), member_ids.end()}, choose_canonical_id(ids, member_ids)};
  return c;
}

ClusterMap build_cluster_map(std::span<const BibliographicResource> resources,
                             const std::vector<std::vector<std::size_t>>& groups) {
  ClusterMap out;
  for (const auto& g : groups) {
    Cluster c = make_cluster(resources, g);
    const std::string cid = canonical_internal_id(c.canonical);
    for (const auto& m : c.members) out.mapping[m] = cid;
    out.clusters.emplace(cid, std::move(c));
  }
  return out;
}

void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  UBool err = false;
  U8_APPEND(buf, len, U8_MAX_LENGTH, c, err);
  if (!err) out.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

void ResolutionConfig::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(similarity_threshold) || !in_unit(candidate_threshold))
    throw Error(ErrorCode::invalid_config, "thresholds must lie in [0,1]");
  if (!in_unit(weights.title) || !in_unit(weights.year) || !in_unit(weights.author))
    throw Error(ErrorCode::invalid_config, "weights must lie in [0,1]");
  if (std::abs(weights.title + weights.year + weights.author - 1.0) > 1e-9)
    throw Error(ErrorCode::invalid_config, "weights must sum to 1");
  if (blocking_key_tokens <= 0) throw Error(ErrorCode::invalid_config, "blocking_key_tokens must be positive");
}

ResolutionConfig ResolutionConfig::from_json(const Json& j) {
  ResolutionConfig c;
  try {
    c.similarity_threshold = j.value("similarity_threshold", c.similarity_threshold);
    c.candidate_threshold = j.value("candidate_threshold", c.candidate_threshold);
    if (auto it = j.find("weights"); it != j.end()) {
      c.weights.title = it->value("title", c.weights.title);
      c.weights.year = it->value("year", c.weights.year);
      c.weights.author = it->value("author", c.weights.author);
    }
    c.blocking_key_tokens = j.value("blocking_key_tokens", c.blocking_key_tokens);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_config, e.what());
  }
  c.validate();
  return c;
}

Json ResolutionConfig::to_json() const {
  Json j;
  j["similarity_threshold"] = similarity_threshold;
  j["candidate_threshold"] = candidate_threshold;
  j["weights"] = {{"title", weights.title}, {"year", weights.year}, {"author", weights.author}};
  j["blocking_key_tokens"] = blocking_key_tokens;
  return j;
}

const std::string* ClusterMap::cluster_of(const std::string& resource_id) const {
  auto it = mapping.find(resource_id);
  return it == mapping.end() ? nullptr : &it->second;
}

std::set<std::set<std::string>> ClusterMap::partition() const {
  std::set<std::set<std::string>> out;
  for (const auto& [_, c] : clusters) out.insert(c.members);
  return out;
}

std::string normalize_title(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkd = icu::Normalizer2::getNFKDInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorCode::io_error, "ICU NFKD normalizer unavailable");
  const icu::UnicodeString input = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const icu::UnicodeString decomposed = nfkd->normalize(input, status);
  if (U_FAILURE(status)) throw Error(ErrorCode::io_error, "NFKD normalization failed");

  std::string out;
  bool gap = false;
  for (int32_t i = 0; i < decomposed.length();) {
    UChar32 c = decomposed.char32At(i);
    i += U16_LENGTH(c);
    const auto type = static_cast<UCharCategory>(u_charType(c));
    if (type == U_NON_SPACING_MARK || type == U_ENCLOSING_MARK || type == U_COMBINING_SPACING_MARK) continue;
    c = u_tolower(c);
    if (u_isalnum(c)) {
      if (gap && !out.empty()) out.push_back(' ');
      gap = false;
      append_utf8(out, c);
    } else {
      gap = true;
    }
  }
  return out;
}

std::string blocking_key(std::string_view normalized_title, int tokens) {
  std::size_t pos = 0;
  for (int t = 0; t < tokens; ++t) {
    const auto space = normalized_title.find(' ', pos);
    if (space == std::string_view::npos) return std::string(normalized_title);
    pos = space + 1;
  }
  return std::string(normalized_title.substr(0, pos - 1));
}

bool links_resources(IdScheme scheme) noexcept {
  return scheme == IdScheme::doi || scheme == IdScheme::handle || scheme == IdScheme::isbn || scheme == IdScheme::uri;
}

double metadata_similarity(const BibliographicResource& a, const BibliographicResource& b, const ResolutionConfig& config) {
  return score(Features(a), Features(b), config.weights);
}

PersistentIdentifier choose_canonical_id(const std::set<PersistentIdentifier>& identifiers,
                                         std::span<const std::string> member_ids) {
  for (IdScheme scheme : {IdScheme::doi, IdScheme::handle, IdScheme::isbn, IdScheme::uri}) {
    // The set is ordered by (scheme, value), so the first hit is the smallest value.
    for (const auto& id : identifiers)
      if (id.scheme() == scheme) return id;
  }
  if (member_ids.empty()) throw Error(ErrorCode::malformed_record, "cluster without members");
  return PersistentIdentifier(IdScheme::local, *std::min_element(member_ids.begin(), member_ids.end()));
}

std::string canonical_internal_id(const PersistentIdentifier& canonical) {
  return canonical.scheme() == IdScheme::local ? canonical.value() : canonical.to_string();
}

ClusterMap identifier_clusters(std::span<const BibliographicResource> resources) {
  UnionFind uf(resources.size());
  link_by_identifiers(resources, uf);
  return build_cluster_map(resources, components(uf, resources.size()));
}

BibliographicResource merge_members(std::vector<const BibliographicResource*> members) {
  if (members.empty()) throw Error(ErrorCode::malformed_record, "merge of an empty cluster");
  std::stable_sort(members.begin(), members.end(), [](auto* a, auto* b) { return a->id < b->id; });
  BibliographicResource out = *members.front();
  bool typology_known = out.typology != Typology::other;
  for (std::size_t i = 1; i < members.size(); ++i) {
    const BibliographicResource& m = *members[i];
    out.identifiers.insert(m.identifiers.begin(), m.identifiers.end());
    out.collections.insert(m.collections.begin(), m.collections.end());
    if (out.title.empty()) out.title = m.title;
    if (out.authors.empty()) out.authors = m.authors;
    if (!out.year) out.year = m.year;
    if (!out.language) out.language = m.language;
    if (!out.parent_id) out.parent_id = m.parent_id;
    if (!typology_known && m.typology != Typology::other) {
      out.typology = m.typology;
      typology_known = true;
    }
    out.is_primary_source = out.is_primary_source || m.is_primary_source;
  }
  return out;
}

DedupResult deduplicate(std::vector<BibliographicResource> resources, std::vector<Citation> citations,
                        const ResolutionConfig& config, Clock& clock) {
  config.validate();
  std::sort(resources.begin(), resources.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < resources.size(); ++i)
    if (resources[i].id == resources[i - 1].id) throw Error(ErrorCode::malformed_id, "duplicate resource id " + resources[i].id);

  const std::size_t n = resources.size();
  UnionFind uf(n);
  link_by_identifiers(resources, uf);

  // Phase 2: compare merged representatives within blocking groups until stable.
  std::vector<std::vector<std::size_t>> groups = components(uf, n);
  while (true) {
    std::vector<Features> reps;
    std::map<std::string, std::vector<std::size_t>> blocks;  // key -> group indices
    reps.reserve(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      std::vector<const BibliographicResource*> members;
      for (auto i : groups[g]) members.push_back(&resources[i]);
      reps.emplace_back(merge_members(std::move(members)));
      if (!reps.back().title.empty()) blocks[blocking_key(reps.back().title, config.blocking_key_tokens)].push_back(g);
    }
    bool merged = false;
    for (const auto& [_, block] : blocks) {
      for (std::size_t a = 0; a < block.size(); ++a)
        for (std::size_t b = a + 1; b < block.size(); ++b)
          if (score(reps[block[a]], reps[block[b]], config.weights) >= config.similarity_threshold)
            merged |= uf.unite(groups[block[a]].front(), groups[block[b]].front());
    }
    if (!merged) break;
    groups = components(uf, n);
  }

  DedupResult out;
  out.clusters = build_cluster_map(resources, groups);
  ProvenanceLog merges;
  for (const auto& g : groups) {
    std::vector<const BibliographicResource*> members;
    for (auto i : g) members.push_back(&resources[i]);
    BibliographicResource merged = merge_members(members);
    merged.id = out.clusters.mapping.at(resources[g.front()].id);
    if (g.size() > 1) {
      Json prior = Json::array();
      std::string sources;
      for (auto* m : members) {
        prior.push_back(to_json(*m));
        sources += (sources.empty() ? "" : ",") + m->id;
      }
      out.merge_records.push_back(merges.record(
          merged.id, {Activity::merge, "entity-resolution", std::move(sources), std::move(prior), {}}, clock));
    }
    out.resources.push_back(std::move(merged));
  }

  // Parents point at canonical ids; a parent that merged into the child's own
  // cluster, or that no longer sits strictly higher, is dropped.
  std::map<std::string, FrbrLevel> levels;
  for (const auto& r : out.resources) levels[r.id] = r.frbr_level;
  for (auto& r : out.resources) {
    if (!r.parent_id) continue;
    if (const std::string* cid = out.clusters.cluster_of(*r.parent_id)) r.parent_id = *cid;
    if (*r.parent_id == r.id) {
      r.parent_id.reset();
      continue;
    }
    if (auto it = levels.find(*r.parent_id); it != levels.end() && it->second <= r.frbr_level) r.parent_id.reset();
  }
  std::sort(out.resources.begin(), out.resources.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  // Rewrite citation endpoints and collapse duplicates.
  std::sort(citations.begin(), citations.end(), [](const auto& a, const auto& b) { return a.citation_id < b.citation_id; });
  std::map<std::string, Citation> surviving;
  for (const Citation& c : citations) {
    Citation r = c;
    if (const std::string* cid = out.clusters.cluster_of(c.citing_id)) r.citing_id = *cid;
    if (const std::string* cid = out.clusters.cluster_of(c.cited_id)) r.cited_id = *cid;
    r.citation_id = mint_citation_id(r.citing_id, r.cited_id);
    out.citation_rewrites[c.citation_id] = r.citation_id;
    auto [it, inserted] = surviving.emplace(r.citation_id, r);
    if (inserted) continue;
    Citation& kept = it->second;
    if (!kept.context) {
      kept.context = r.context;
    } else if (r.context && r.context->access == Access::restricted) {
      kept.context->access = Access::restricted;
    }
    if (!kept.locus) kept.locus = r.locus;
    for (const auto& p : r.provenance)
      if (std::find(kept.provenance.begin(), kept.provenance.end(), p) == kept.provenance.end()) kept.provenance.push_back(p);
  }
  for (auto& [_, c] : surviving) out.citations.push_back(std::move(c));
  return out;
}

std::vector<Candidate> match_reference(const ReferenceQuery& reference, std::span<const BibliographicResource> catalogue,
                                       const ResolutionConfig& config) {
  config.validate();
  BibliographicResource probe;
  probe.title = reference.title;
  probe.year = reference.year;
  if (!reference.author_family.empty()) probe.authors.push_back({reference.author_family, std::nullopt});
  const Features pf(probe);
  if (pf.title.empty()) throw Error(ErrorCode::empty_reference, "reference title is empty");
  const std::string key = blocking_key(pf.title, config.blocking_key_tokens);

  std::vector<Candidate> out;
  for (const auto& r : catalogue) {
    const Features rf(r);
    bool candidate = !rf.title.empty() && blocking_key(rf.title, config.blocking_key_tokens) == key;
    if (!candidate) {
      for (const auto& id : reference.identifiers) {
        if (r.identifiers.contains(id)) {
          candidate = true;
          break;
        }
      }
    }
    if (!candidate) continue;
    const double s = score(pf, rf, config.weights);
    if (s >= config.candidate_threshold) out.push_back({r.id, s});
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  return out;
}

}  // namespace huci
