#pragma once

// Shared builders, generators and brute-force oracles for the test binaries.
// The oracles deliberately avoid calling the library code they check.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "huci/federation.hpp"
#include "huci/ingest.hpp"
#include "huci/model.hpp"
#include "huci/node.hpp"
#include "huci/resolution.hpp"

namespace huci::testkit {

using Rng = std::mt19937_64;

inline constexpr std::string_view kSentinel = "SENTINEL-q7Zx";

BibliographicResource make_resource(std::string id, std::string title = "Untitled", std::optional<std::int64_t> year = {});
Citation make_citation(const std::string& citing, const std::string& cited);
Citation make_citation(const std::string& citing, const std::string& cited, std::string excerpt, Access access);

std::filesystem::path fixture(std::string_view name);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view bytes);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// --- compliance -------------------------------------------------------------

struct ComplianceCase {
  std::string name;
  Citation citation;
  BibliographicResource citing;
  BibliographicResource cited;
  bool reachable = true;
  bool separate = true;
  ComplianceVector expected;
};

/// The ten hand-enumerated gate combinations.
std::vector<ComplianceCase> compliance_truth_table();

// --- resolution -------------------------------------------------------------

/// Lowercase ASCII, non-alphanumeric runs to one space, trimmed.
std::string ascii_normalize(std::string_view s);

/// Partition by repeated pairwise merging until nothing changes.
std::set<std::set<std::string>> oracle_identifier_partition(const std::vector<BibliographicResource>& resources);

/// Identifier closure, then rounds of all-pairs comparison of merged cluster
/// representatives (no blocking) until no pair qualifies.
std::set<std::set<std::string>> oracle_dedup_partition(const std::vector<BibliographicResource>& resources,
                                                       const ResolutionConfig& config);

double oracle_similarity(const BibliographicResource& a, const BibliographicResource& b, const ResolutionConfig& config);

/// Up to `max_n` ASCII-titled resources across a few providers with planted
/// identifier overlaps and near-duplicate metadata.
std::vector<BibliographicResource> random_dedup_instance(Rng& rng, std::size_t max_n);

// --- chaining ---------------------------------------------------------------

/// Random FRBR forest plus random citations between its members.
CitationIndex random_citation_graph(Rng& rng, std::size_t max_resources, std::size_t max_citations);

std::vector<std::string> oracle_backward(const CitationIndex& index, const std::string& id);
std::vector<std::string> oracle_forward(const CitationIndex& index, const std::string& id);
std::map<std::string, std::size_t> oracle_cocited(const CitationIndex& index, const std::string& id);
std::string oracle_frbr_map(const CitationIndex& index, const std::string& id, FrbrLevel level);
std::size_t oracle_citation_count(const CitationIndex& index, const std::string& id, FrbrLevel level);

// --- N-Triples --------------------------------------------------------------

/// Checks one line (without its newline) against the N-Triples grammar and
/// requires absolute IRIs. On failure `why` names the problem.
bool nt_line_ok(std::string_view line, std::string* why = nullptr);
/// Every line valid, newline-terminated, bytewise sorted.
bool nt_document_ok(std::string_view doc, std::string* why = nullptr);

// --- nodes and federations --------------------------------------------------

/// Deterministic bundle: `n` resources "<provider>:r<i>" with a DOI each and
/// citations r0 -> r1 .. r(n-1).
DatasetBundle chain_bundle(const std::string& provider, std::size_t n, License license = License::cc0);

/// Citation ids an operator has set to open. Sentinel excerpts are never
/// written under these ids.
struct NodeOpModel {
  std::set<std::string> opened;
};

/// A random operation against a node: ingest, update, policy flip or delete.
/// Restricted excerpts are "<kSentinel>-<n>#"; open ones are "public-<n>#".
/// Only citations without a sentinel excerpt are ever set to open, so a
/// sentinel is restricted in every state the node passes through.
void random_node_operation(Node& node, Rng& rng, const std::string& provider, std::size_t universe, NodeOpModel& model);

/// Excerpts of restricted citations in the node's current (unredacted) state.
std::set<std::string> restricted_excerpts(const Node& node);

/// Replays a node's change stream from seq 0 in pages of `page_size`.
CitationIndex replay_changes(const Node& node, std::int64_t page_size);

/// Client factory backed by in-process nodes keyed by node id. Nodes missing
/// from the map are unreachable.
ClientFactory in_process_factory(const std::map<std::string, const Node*>& nodes);

/// Throws node_unreachable on every call.
class DeadClient final : public NodeClient {
 public:
  NodeMeta meta() override;
  std::string dump_json() override;
  ChangePage changes(std::uint64_t, std::int64_t) override;
};

/// Wraps a real client and lets a test intercept individual calls.
class ScriptedClient final : public NodeClient {
 public:
  explicit ScriptedClient(std::unique_ptr<NodeClient> inner) : inner_(std::move(inner)) {}
  std::function<NodeMeta(NodeClient&, int call)> on_meta;
  std::function<std::string(NodeClient&, int call)> on_dump;
  std::function<ChangePage(NodeClient&, std::uint64_t since, std::int64_t size, int call)> on_changes;

  NodeMeta meta() override;
  std::string dump_json() override;
  ChangePage changes(std::uint64_t since, std::int64_t page_size) override;

  int meta_calls = 0;
  int dump_calls = 0;
  int change_calls = 0;

 private:
  std::unique_ptr<NodeClient> inner_;
};

/// Three providers holding six planted cross-node duplicates (shared DOIs
/// between pairs of nodes and one near-duplicate by metadata).
std::vector<DatasetBundle> three_node_fixture();

/// Canonical N-Triples of a federation snapshot.
std::string federation_nt(const Federation& fed);

}  // namespace huci::testkit
