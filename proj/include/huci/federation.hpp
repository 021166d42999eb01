#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "huci/clock.hpp"
#include "huci/error.hpp"
#include "huci/export.hpp"
#include "huci/model.hpp"
#include "huci/node.hpp"
#include "huci/provenance.hpp"
#include "huci/resolution.hpp"

namespace huci {

using Json = nlohmann::ordered_json;

struct NodeEntry {
  std::string node_id;
  std::string base_url;
  bool enabled = true;
};

struct FederationConfig {
  std::vector<NodeEntry> nodes;
  ResolutionConfig resolution;
  bool require_open_license = true;

  /// Throws invalid_config (bad fields) or duplicate_node_id.
  static FederationConfig from_json(const Json& j);
  Json to_json() const;
};

/// The harvest protocol as seen from the federation. Implementations throw
/// node_unreachable when the node cannot be contacted or answers badly.
class NodeClient {
 public:
  virtual ~NodeClient() = default;
  virtual NodeMeta meta() = 0;
  /// Raw bytes of GET /dump?format=json.
  virtual std::string dump_json() = 0;
  virtual ChangePage changes(std::uint64_t since, std::int64_t page_size) = 0;
};

/// Talks to a Node object directly, with the redaction a remote client sees.
class InProcessNodeClient final : public NodeClient {
 public:
  explicit InProcessNodeClient(const Node& node) : node_(node) {}
  NodeMeta meta() override { return node_.serve_meta(); }
  std::string dump_json() override { return node_.serve_dump(ExportFormat::json); }
  ChangePage changes(std::uint64_t since, std::int64_t page_size) override {
    return node_.serve_changes(static_cast<std::int64_t>(since), page_size);
  }

 private:
  const Node& node_;
};

/// HTTP client for base URLs like "http://127.0.0.1:8080".
std::unique_ptr<NodeClient> make_http_node_client(const std::string& base_url);

using ClientFactory = std::function<std::unique_ptr<NodeClient>(const NodeEntry&)>;

enum class NodeState { enabled, disabled, pending };
std::string_view to_string(NodeState s) noexcept;

struct NodeStatus {
  NodeEntry entry;
  NodeState state = NodeState::pending;
  std::uint64_t cursor = 0;
  std::optional<License> license;
  std::optional<Timestamp> last_harvest;
  std::optional<std::string> last_error;
  std::vector<std::string> warnings;

  Json to_json() const;
};

/// Entities pulled from one node, not yet merged.
struct StagedDataset {
  std::string node_id;
  bool full = false;
  CitationIndex entities;              // full harvests
  std::vector<ChangeRecord> changes;   // incremental harvests
  std::uint64_t from_cursor = 0;
  std::uint64_t to_cursor = 0;
};

/// Immutable published state read by queries.
struct FederationSnapshot {
  CitationIndex index;
  ClusterMap clusters;
  std::vector<Citation> pending;  // citations whose endpoints have not arrived
  /// Merged resource/citation id -> contributing "node_id/source_id" entries.
  std::map<std::string, std::set<std::string>> contributors;
};

struct MergeReport {
  std::size_t resources = 0;
  std::size_t citations = 0;
  std::size_t pending = 0;
  std::size_t provenance_records = 0;

  Json to_json() const;
};

struct HarvestRunReport {
  std::map<std::string, Json> nodes;  // node_id -> {ok, mode, cursor, error?}
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  MergeReport merge;

  Json to_json() const;
};

class Federation {
 public:
  Federation(FederationConfig config, Clock& clock, ClientFactory factory = {});
  /// Loads (or creates) persisted state in `dir`, then registers every
  /// configured node not yet known. Throws io_error or malformed_record.
  static std::unique_ptr<Federation> open(const std::filesystem::path& dir, FederationConfig config, Clock& clock,
                                          ClientFactory factory = {});

  Federation(const Federation&) = delete;
  Federation& operator=(const Federation&) = delete;

  /// Throws duplicate_node_id. An unreachable node is registered pending; an
  /// unspecified-license node is registered disabled when open licenses are required.
  NodeStatus register_node(const NodeEntry& entry);

  /// Throws unknown_node, node_disabled, node_unreachable, dump_invalid or
  /// seq_race_exhausted. Cursors only move when the staged data is merged.
  StagedDataset harvest_full(const std::string& node_id);
  StagedDataset harvest_incremental(const std::string& node_id);
  /// Full when the node has never been harvested, incremental otherwise.
  StagedDataset harvest(const std::string& node_id);

  /// Applies staged data to the per-node source copies, re-resolves the
  /// whole pool and publishes a new snapshot.
  MergeReport merge(const std::vector<StagedDataset>& staged);

  /// Harvests every enabled node, then merges whatever succeeded.
  HarvestRunReport harvest_all();

  Json federation_status() const;
  std::vector<NodeStatus> nodes() const;
  std::shared_ptr<const FederationSnapshot> snapshot() const;
  Json dump_header() const;
  std::vector<ProvenanceRecord> provenance_chain(const std::string& entity_id) const;
  std::uint64_t cursor(const std::string& node_id) const;

 private:
  NodeClient& client_for(const std::string& node_id);
  NodeStatus& status_for(const std::string& node_id);
  void note_error(const std::string& node_id, const Error& e);
  std::shared_ptr<FederationSnapshot> resolve_pool() const;
  void persist() const;
  void persist_source(const std::string& node_id) const;

  FederationConfig config_;
  Clock& clock_;
  ClientFactory factory_;
  std::optional<std::filesystem::path> dir_;

  mutable std::mutex state_mu_;  // statuses, clients
  std::map<std::string, NodeStatus> status_;
  std::map<std::string, std::unique_ptr<NodeClient>> clients_;

  mutable std::mutex merge_mu_;  // exclusive merges; guards sources_ and provenance_
  std::map<std::string, CitationIndex> sources_;
  ProvenanceLog provenance_;
  std::uint64_t merge_count_ = 0;

  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const FederationSnapshot> snapshot_;
};

/// Validates a JSON dump and returns its entities. Throws dump_invalid.
CitationIndex parse_dump(std::string_view bytes, std::uint64_t* last_seq = nullptr);

}  // namespace huci
