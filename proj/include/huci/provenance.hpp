#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "huci/clock.hpp"
#include "huci/model.hpp"

namespace huci {

using Json = nlohmann::ordered_json;

struct ProvenanceRecord {
  std::string prov_id;
  std::string entity_id;
  std::string agent;
  std::string source;  // comma-separated for merges
  Activity activity = Activity::create;
  Timestamp timestamp;
  std::optional<Json> prior;  // entity snapshot before this activity
  std::vector<std::string> notes;

  friend bool operator==(const ProvenanceRecord&, const ProvenanceRecord&) = default;
};

struct ProvenanceInput {
  Activity activity = Activity::create;
  std::string agent;
  std::string source;
  std::optional<Json> prior;
  std::vector<std::string> notes;
};

/// Append-only per-entity provenance chains. Record ids are
/// "<entity>#prov/<n>" with n counting from 1 within each chain.
class ProvenanceLog {
 public:
  /// Appends a record stamped by `clock`. Throws not_found for a non-create
  /// activity on an entity without a chain, clock_regression if the clock
  /// moved backwards relative to the chain, malformed_record for a merge
  /// naming fewer than two sources.
  const ProvenanceRecord& record(const std::string& entity_id, ProvenanceInput input, Clock& clock);

  /// Appends an already-formed record (used when loading persisted logs).
  void append_loaded(ProvenanceRecord rec);

  const std::vector<ProvenanceRecord>& chain(const std::string& entity_id) const;
  bool has_chain(const std::string& entity_id) const { return chains_.contains(entity_id); }
  std::size_t total_records() const;
  const std::map<std::string, std::vector<ProvenanceRecord>>& chains() const { return chains_; }

  /// State of the entity as of `as_of`: the snapshot after the latest record
  /// stamped <= as_of. `current` is the live state (nullopt if deleted).
  /// Throws not_found if `as_of` precedes creation or lands after a delete.
  Json restore_snapshot(const std::string& entity_id, Timestamp as_of, const std::optional<Json>& current) const;

 private:
  std::map<std::string, std::vector<ProvenanceRecord>> chains_;
};

Json to_json(const ProvenanceRecord& r);
ProvenanceRecord provenance_from_json(const Json& j);

}  // namespace huci
