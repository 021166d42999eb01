#include "huci/provenance.hpp"

#include <algorithm>

#include "huci/error.hpp"

namespace huci {

namespace {

std::size_t count_sources(const std::string& source) {
  std::size_t n = 0;
  std::size_t start = 0;
  while (start <= source.size()) {
    const auto comma = source.find(',', start);
    const auto end = comma == std::string::npos ? source.size() : comma;
    if (end > start) ++n;
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return n;
}

}  // namespace

const ProvenanceRecord& ProvenanceLog::record(const std::string& entity_id, ProvenanceInput input, Clock& clock) {
  auto& chain = chains_[entity_id];
  if (chain.empty() && input.activity != Activity::create && input.activity != Activity::merge) {
    chains_.erase(entity_id);
    throw Error(ErrorCode::not_found, "no provenance chain for " + entity_id);
  }
  if (input.activity == Activity::merge && count_sources(input.source) < 2) {
    if (chain.empty()) chains_.erase(entity_id);
    throw Error(ErrorCode::malformed_record, "merge provenance needs at least two sources");
  }
  const Timestamp ts = clock.now();
  if (!chain.empty() && ts < chain.back().timestamp) {
    throw Error(ErrorCode::clock_regression,
                ts.to_string() + " precedes " + chain.back().timestamp.to_string() + " on " + entity_id);
  }
  ProvenanceRecord rec;
  rec.prov_id = entity_id + "#prov/" + std::to_string(chain.size() + 1);
  rec.entity_id = entity_id;
  rec.agent = std::move(input.agent);
  rec.source = std::move(input.source);
  rec.activity = input.activity;
  rec.timestamp = ts;
  rec.prior = std::move(input.prior);
  rec.notes = std::move(input.notes);
  chain.push_back(std::move(rec));
  return chain.back();
}

void ProvenanceLog::append_loaded(ProvenanceRecord rec) {
  auto& chain = chains_[rec.entity_id];
  if (!chain.empty() && rec.timestamp < chain.back().timestamp)
    throw Error(ErrorCode::clock_regression, "persisted chain out of order for " + rec.entity_id);
  chain.push_back(std::move(rec));
}

const std::vector<ProvenanceRecord>& ProvenanceLog::chain(const std::string& entity_id) const {
  static const std::vector<ProvenanceRecord> empty;
  auto it = chains_.find(entity_id);
  return it == chains_.end() ? empty : it->second;
}

std::size_t ProvenanceLog::total_records() const {
  std::size_t n = 0;
  for (const auto& [_, c] : chains_) n += c.size();
  return n;
}

Json ProvenanceLog::restore_snapshot(const std::string& entity_id, Timestamp as_of,
                                     const std::optional<Json>& current) const {
  const auto& ch = chain(entity_id);
  if (ch.empty()) throw Error(ErrorCode::not_found, "no provenance chain for " + entity_id);
  // Latest record stamped <= as_of.
  auto after = std::upper_bound(ch.begin(), ch.end(), as_of,
                                [](Timestamp t, const ProvenanceRecord& r) { return t < r.timestamp; });
  if (after == ch.begin()) throw Error(ErrorCode::not_found, entity_id + " did not exist at " + as_of.to_string());
  const ProvenanceRecord& last = *(after - 1);
  if (last.activity == Activity::remove) throw Error(ErrorCode::not_found, entity_id + " was deleted at " + as_of.to_string());
  if (after == ch.end()) {
    if (!current) throw Error(ErrorCode::not_found, entity_id + " has no current state");
    return *current;
  }
  // The next record's prior snapshot is the state this record produced.
  if (!after->prior) throw Error(ErrorCode::not_found, "missing prior snapshot in " + after->prov_id);
  return *after->prior;
}

Json to_json(const ProvenanceRecord& r) {
  Json j;
  j["prov_id"] = r.prov_id;
  j["entity_id"] = r.entity_id;
  j["agent"] = r.agent;
  j["source"] = r.source;
  j["activity"] = to_string(r.activity);
  j["timestamp"] = r.timestamp.to_string();
  j["prior"] = r.prior ? *r.prior : Json(nullptr);
  j["notes"] = r.notes;
  return j;
}

ProvenanceRecord provenance_from_json(const Json& j) {
  try {
    ProvenanceRecord r;
    r.prov_id = j.at("prov_id").get<std::string>();
    r.entity_id = j.at("entity_id").get<std::string>();
    r.agent = j.at("agent").get<std::string>();
    r.source = j.at("source").get<std::string>();
    const auto act = parse_activity(j.at("activity").get<std::string>());
    if (!act) throw Error(ErrorCode::malformed_record, "bad activity");
    r.activity = *act;
    r.timestamp = Timestamp::parse(j.at("timestamp").get<std::string>());
    if (j.contains("prior") && !j["prior"].is_null()) r.prior = j["prior"];
    if (j.contains("notes")) r.notes = j["notes"].get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_record, std::string("provenance record: ") + e.what());
  }
}

}  // namespace huci
