#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "huci/clock.hpp"
#include "huci/export.hpp"
#include "huci/ingest.hpp"
#include "huci/model.hpp"
#include "huci/provenance.hpp"

namespace huci {

using Json = nlohmann::ordered_json;

enum class ChangeOp { create, update, remove };
enum class EntityKind { resource, citation };
enum class Requester { local, remote };

std::string_view to_string(ChangeOp op) noexcept;
std::string_view to_string(EntityKind kind) noexcept;
std::optional<ChangeOp> parse_change_op(std::string_view s) noexcept;
std::optional<EntityKind> parse_entity_kind(std::string_view s) noexcept;

struct ChangeRecord {
  std::uint64_t seq = 0;
  Timestamp timestamp;
  ChangeOp op = ChangeOp::create;
  EntityKind kind = EntityKind::resource;
  std::string entity_id;
  std::optional<Json> payload;  // absent for deletes

  friend bool operator==(const ChangeRecord&, const ChangeRecord&) = default;
};

Json to_json(const ChangeRecord& r);
ChangeRecord change_from_json(const Json& j);  // throws malformed_record

struct ChangePage {
  std::vector<ChangeRecord> records;
  std::optional<std::uint64_t> next_seq;
};

Json to_json(const ChangePage& p);
ChangePage change_page_from_json(const Json& j);  // throws malformed_record

inline constexpr std::int64_t kDefaultPageSize = 1000;
inline constexpr std::int64_t kMaxPageSize = 10000;

struct Rejection {
  EntityKind kind = EntityKind::resource;
  std::string entity_id;
  std::string reason;
};

struct IngestReport {
  std::size_t created = 0;
  std::size_t updated = 0;
  std::size_t rejected = 0;
  std::vector<Rejection> rejections;
  std::vector<std::string> warnings;

  Json to_json() const;
};

struct NodeMeta {
  std::string node_id;
  License license = License::unspecified;
  std::size_t resource_count = 0;
  std::size_t citation_count = 0;
  std::uint64_t last_seq = 0;
  std::optional<Timestamp> last_modified;

  Json to_json() const;
  static NodeMeta from_json(const Json& j);  // throws malformed_record
};

struct IdFailure {
  std::string id;
  ErrorCode code = ErrorCode::not_found;
};

struct BatchReport {
  std::size_t updated = 0;
  std::vector<IdFailure> failures;

  Json to_json() const;
};

/// Applies one change record to an index (the replay side of the stream).
void apply_change(CitationIndex& index, const ChangeRecord& change);

/// A provider node: single writer, many readers. With a data directory every
/// mutation is appended to entities.jsonl, changes.jsonl and provenance.jsonl
/// before it becomes visible; reopening the directory restores the state.
class Node {
 public:
  Node(std::string node_id, Clock& clock);
  /// Opens (or creates) a persistent node. A node_id stored in the directory
  /// wins over `node_id`. Throws io_error or malformed_record.
  static std::unique_ptr<Node> open(const std::filesystem::path& dir, std::string node_id, Clock& clock);

  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  IngestReport ingest_dataset(const DatasetBundle& bundle);
  /// Sets context access for each citation; emits one update per citation,
  /// even when the access is unchanged.
  BatchReport set_access_policy(const std::vector<std::string>& citation_ids, Access access);
  /// Deletes resources (with every citation touching them) and citations.
  BatchReport delete_entities(const std::vector<std::string>& resource_ids,
                              const std::vector<std::string>& citation_ids);

  NodeMeta serve_meta() const;
  /// Header block of JSON dumps: {node_id, license, last_seq, resource_count, citation_count}.
  Json dump_header() const;
  std::string serve_dump(ExportFormat format, CsvTable table = CsvTable::citations) const;
  /// Throws invalid_since for since < 0, invalid_page_size outside [1, kMaxPageSize].
  ChangePage serve_changes(std::int64_t since, std::int64_t page_size = kDefaultPageSize) const;
  /// Throws unknown_citation, or restricted_context for a remote requester.
  CitationContext serve_context(const std::string& citation_id, Requester requester) const;

  std::optional<BibliographicResource> resource(const std::string& id) const;
  /// Redacted unless `requester` is local.
  std::optional<Citation> citation(const std::string& id, Requester requester = Requester::remote) const;
  /// Unredacted copy of the current state.
  CitationIndex snapshot() const;
  std::vector<ProvenanceRecord> provenance_chain(const std::string& entity_id) const;
  const std::string& node_id() const { return node_id_; }

 private:
  void append_change(ChangeOp op, EntityKind kind, const std::string& id, std::optional<Json> payload, Timestamp ts);
  void record_provenance(const std::string& id, ProvenanceInput input);
  void write_resource(const BibliographicResource& r, ProvenanceInput input);
  void write_citation(Citation c, ProvenanceInput input);
  void persist_node_file() const;
  void append_line(const char* file, const Json& j) const;
  bool is_restricted(const std::string& citation_id) const;
  bool frbr_ok_with(const BibliographicResource& candidate) const;

  std::string node_id_;
  Clock& clock_;
  std::optional<std::filesystem::path> dir_;
  mutable std::shared_mutex mu_;
  License license_ = License::unspecified;
  CitationIndex state_;
  std::map<std::string, Access> access_policies_;
  std::map<std::string, std::set<std::string>> children_;  // parent id -> child ids
  std::vector<ChangeRecord> change_log_;
  ProvenanceLog provenance_;
};

}  // namespace huci
