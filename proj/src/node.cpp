#include "huci/node.hpp"

#include <deque>
#include <fstream>

#include "huci/codec.hpp"
#include "huci/error.hpp"

namespace huci {

namespace fs = std::filesystem;

namespace {

constexpr const char* kNodeFile = "node.json";
constexpr const char* kEntitiesFile = "entities.jsonl";
constexpr const char* kChangesFile = "changes.jsonl";
constexpr const char* kProvenanceFile = "provenance.jsonl";

template <typename F>
void for_each_line(const fs::path& path, F&& f) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::malformed_record, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    f(j);
  }
}

Json citation_payload_redacted(const Json& payload) {
  Citation c = citation_from_json(payload);
  if (c.context) c.context->access = Access::restricted;
  return to_json(redacted(c));
}

}  // namespace

std::string_view to_string(ChangeOp op) noexcept {
  switch (op) {
    case ChangeOp::create: return "create";
    case ChangeOp::update: return "update";
    case ChangeOp::remove: return "delete";
  }
  return "?";
}

std::string_view to_string(EntityKind kind) noexcept {
  return kind == EntityKind::resource ? "resource" : "citation";
}

std::optional<ChangeOp> parse_change_op(std::string_view s) noexcept {
  if (s == "create") return ChangeOp::create;
  if (s == "update") return ChangeOp::update;
  if (s == "delete") return ChangeOp::remove;
  return std::nullopt;
}

std::optional<EntityKind> parse_entity_kind(std::string_view s) noexcept {
  if (s == "resource") return EntityKind::resource;
  if (s == "citation") return EntityKind::citation;
  return std::nullopt;
}

Json to_json(const ChangeRecord& r) {
  Json j;
  j["seq"] = r.seq;
  j["timestamp"] = r.timestamp.to_string();
  j["op"] = to_string(r.op);
  j["kind"] = to_string(r.kind);
  j["entity_id"] = r.entity_id;
  j["payload"] = r.payload ? *r.payload : Json(nullptr);
  return j;
}

ChangeRecord change_from_json(const Json& j) {
  try {
    ChangeRecord r;
    if (!j.is_object()) throw Error(ErrorCode::malformed_record, "change record is not an object");
    r.seq = j.at("seq").get<std::uint64_t>();
    r.timestamp = Timestamp::parse(j.at("timestamp").get<std::string>());
    const auto op = parse_change_op(j.at("op").get<std::string>());
    const auto kind = parse_entity_kind(j.at("kind").get<std::string>());
    if (!op || !kind) throw Error(ErrorCode::malformed_record, "bad op or kind");
    r.op = *op;
    r.kind = *kind;
    r.entity_id = j.at("entity_id").get<std::string>();
    if (j.contains("payload") && !j["payload"].is_null()) r.payload = j["payload"];
    if ((r.op == ChangeOp::remove) == r.payload.has_value())
      throw Error(ErrorCode::malformed_record, "payload must be present exactly for create and update");
    if (r.seq == 0) throw Error(ErrorCode::malformed_record, "seq must be positive");
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::malformed_record, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::malformed_record) throw;
    throw Error(ErrorCode::malformed_record, e.what());
  }
}

Json to_json(const ChangePage& p) {
  Json j;
  j["records"] = Json::array();
  for (const auto& r : p.records) j["records"].push_back(to_json(r));
  j["next_seq"] = p.next_seq ? Json(*p.next_seq) : Json(nullptr);
  return j;
}

ChangePage change_page_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("records") || !j["records"].is_array())
    throw Error(ErrorCode::malformed_record, "expected {records:[...], next_seq}");
  ChangePage p;
  for (const auto& r : j["records"]) p.records.push_back(change_from_json(r));
  if (j.contains("next_seq") && !j["next_seq"].is_null()) {
    if (!j["next_seq"].is_number_unsigned()) throw Error(ErrorCode::malformed_record, "next_seq is not a sequence number");
    p.next_seq = j["next_seq"].get<std::uint64_t>();
  }
  return p;
}

Json IngestReport::to_json() const {
  Json j;
  j["created"] = created;
  j["updated"] = updated;
  j["rejected"] = rejected;
  j["rejections"] = Json::array();
  for (const auto& r : rejections)
    j["rejections"].push_back(Json{{"kind", to_string(r.kind)}, {"id", r.entity_id}, {"reason", r.reason}});
  j["warnings"] = warnings;
  return j;
}

Json NodeMeta::to_json() const {
  Json j;
  j["node_id"] = node_id;
  j["license"] = to_string(license);
  j["resource_count"] = resource_count;
  j["citation_count"] = citation_count;
  j["last_seq"] = last_seq;
  j["last_modified"] = last_modified ? Json(last_modified->to_string()) : Json(nullptr);
  return j;
}

NodeMeta NodeMeta::from_json(const Json& j) {
  try {
    NodeMeta m;
    m.node_id = j.at("node_id").get<std::string>();
    const auto lic = parse_license(j.at("license").get<std::string>());
    if (!lic) throw Error(ErrorCode::malformed_record, "unknown license");
    m.license = *lic;
    m.resource_count = j.at("resource_count").get<std::size_t>();
    m.citation_count = j.at("citation_count").get<std::size_t>();
    m.last_seq = j.at("last_seq").get<std::uint64_t>();
    if (j.contains("last_modified") && !j["last_modified"].is_null())
      m.last_modified = Timestamp::parse(j["last_modified"].get<std::string>());
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::malformed_record, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::malformed_record) throw;
    throw Error(ErrorCode::malformed_record, e.what());
  }
}

Json BatchReport::to_json() const {
  Json j;
  j["updated"] = updated;
  j["failures"] = Json::array();
  for (const auto& f : failures) j["failures"].push_back(Json{{"id", f.id}, {"error", to_string(f.code)}});
  return j;
}

void apply_change(CitationIndex& index, const ChangeRecord& change) {
  if (change.kind == EntityKind::resource) {
    if (change.op == ChangeOp::remove) {
      index.resources.erase(change.entity_id);
    } else {
      auto r = resource_from_json(*change.payload);
      index.resources.insert_or_assign(r.id, std::move(r));
    }
  } else {
    if (change.op == ChangeOp::remove) {
      index.citations.erase(change.entity_id);
    } else {
      auto c = citation_from_json(*change.payload);
      index.citations.insert_or_assign(c.citation_id, std::move(c));
    }
  }
}

// ---------------------------------------------------------------------------

Node::Node(std::string node_id, Clock& clock) : node_id_(std::move(node_id)), clock_(clock) {}

std::unique_ptr<Node> Node::open(const fs::path& dir, std::string node_id, Clock& clock) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
  auto node = std::make_unique<Node>(std::move(node_id), clock);

  if (std::ifstream in(dir / kNodeFile); in) {
    Json j;
    try {
      j = Json::parse(in);
      node->node_id_ = j.at("node_id").get<std::string>();
      node->license_ = parse_license(j.value("license", "unspecified")).value_or(License::unspecified);
      const Json policies = j.value("access_policies", Json::object());
      for (const auto& [id, v] : policies.items())
        node->access_policies_[id] = parse_access(v.get<std::string>()).value_or(Access::restricted);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::malformed_record, (dir / kNodeFile).string() + ": " + e.what());
    }
  }
  for_each_line(dir / kEntitiesFile, [&](const Json& j) {
    const auto kind = parse_entity_kind(j.value("kind", ""));
    const auto id = j.value("id", "");
    if (!kind) throw Error(ErrorCode::malformed_record, "entities.jsonl: bad kind");
    const Json& entity = j.contains("entity") ? j["entity"] : Json(nullptr);
    if (*kind == EntityKind::resource) {
      if (entity.is_null()) node->state_.resources.erase(id);
      else node->state_.resources.insert_or_assign(id, resource_from_json(entity));
    } else {
      if (entity.is_null()) node->state_.citations.erase(id);
      else node->state_.citations.insert_or_assign(id, citation_from_json(entity));
    }
  });
  for_each_line(dir / kChangesFile, [&](const Json& j) {
    auto rec = change_from_json(j);
    if (rec.seq != node->change_log_.size() + 1) throw Error(ErrorCode::malformed_record, "changes.jsonl: sequence gap");
    node->change_log_.push_back(std::move(rec));
  });
  for_each_line(dir / kProvenanceFile, [&](const Json& j) { node->provenance_.append_loaded(provenance_from_json(j)); });
  for (const auto& [id, r] : node->state_.resources)
    if (r.parent_id) node->children_[*r.parent_id].insert(id);
  node->dir_ = dir;
  node->persist_node_file();
  return node;
}

void Node::append_line(const char* file, const Json& j) const {
  if (!dir_) return;
  std::ofstream out(*dir_ / file, std::ios::app);
  out << j.dump(-1, ' ', false, Json::error_handler_t::replace) << '\n';
  if (!out) throw Error(ErrorCode::io_error, "cannot append to " + (*dir_ / file).string());
}

void Node::persist_node_file() const {
  if (!dir_) return;
  Json j;
  j["node_id"] = node_id_;
  j["license"] = to_string(license_);
  j["access_policies"] = Json::object();
  for (const auto& [id, a] : access_policies_) j["access_policies"][id] = to_string(a);
  const fs::path tmp = *dir_ / "node.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << pretty(j);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, *dir_ / kNodeFile, ec);
  if (ec) throw Error(ErrorCode::io_error, ec.message());
}

void Node::append_change(ChangeOp op, EntityKind kind, const std::string& id, std::optional<Json> payload, Timestamp ts) {
  ChangeRecord rec{change_log_.size() + 1, ts, op, kind, id, std::move(payload)};
  Json entity_line;
  entity_line["kind"] = to_string(kind);
  entity_line["id"] = id;
  entity_line["entity"] = rec.payload ? *rec.payload : Json(nullptr);
  append_line(kEntitiesFile, entity_line);
  append_line(kChangesFile, to_json(rec));
  change_log_.push_back(std::move(rec));
}

void Node::record_provenance(const std::string& id, ProvenanceInput input) {
  const auto& rec = provenance_.record(id, std::move(input), clock_);
  append_line(kProvenanceFile, to_json(rec));
}

void Node::write_resource(const BibliographicResource& r, ProvenanceInput input) {
  const auto existing = state_.resources.find(r.id);
  const bool update = existing != state_.resources.end();
  if (update) {
    input.prior = to_json(existing->second);
    if (existing->second.parent_id) children_[*existing->second.parent_id].erase(r.id);
  }
  input.activity = update ? Activity::update : Activity::create;
  record_provenance(r.id, std::move(input));
  const Timestamp ts = provenance_.chain(r.id).back().timestamp;
  state_.resources.insert_or_assign(r.id, r);
  if (r.parent_id) children_[*r.parent_id].insert(r.id);
  append_change(update ? ChangeOp::update : ChangeOp::create, EntityKind::resource, r.id, to_json(r), ts);
}

void Node::write_citation(Citation c, ProvenanceInput input) {
  if (auto policy = access_policies_.find(c.citation_id); policy != access_policies_.end()) {
    if (!c.context) c.context = CitationContext{};
    c.context->access = policy->second;
  }
  const auto existing = state_.citations.find(c.citation_id);
  const bool update = existing != state_.citations.end();
  if (update) input.prior = to_json(existing->second);
  input.activity = update ? Activity::update : Activity::create;
  record_provenance(c.citation_id, std::move(input));
  const Timestamp ts = provenance_.chain(c.citation_id).back().timestamp;
  Json payload = to_json(c);
  const std::string id = c.citation_id;
  state_.citations.insert_or_assign(id, std::move(c));
  append_change(update ? ChangeOp::update : ChangeOp::create, EntityKind::citation, id, std::move(payload), ts);
}

bool Node::frbr_ok_with(const BibliographicResource& candidate) const {
  auto lookup = [&](const std::string& id) -> const BibliographicResource* {
    if (id == candidate.id) return &candidate;
    auto it = state_.resources.find(id);
    return it == state_.resources.end() ? nullptr : &it->second;
  };
  auto chain_ok = [&](const BibliographicResource* r) {
    int links = 0;
    while (r->parent_id) {
      if (*r->parent_id == r->id) return false;
      const auto* parent = lookup(*r->parent_id);
      if (!parent) return true;
      if (parent->frbr_level <= r->frbr_level) return false;
      if (++links > 3) return false;
      r = parent;
    }
    return true;
  };
  if (!chain_ok(&candidate)) return false;
  std::deque<std::string> pending{candidate.id};
  std::set<std::string> seen{candidate.id};
  while (!pending.empty()) {
    const auto it = children_.find(pending.front());
    pending.pop_front();
    if (it == children_.end()) continue;
    for (const auto& child : it->second) {
      if (!seen.insert(child).second) continue;
      const auto* r = lookup(child);
      if (!r) continue;
      if (!chain_ok(r)) return false;
      pending.push_back(child);
    }
  }
  return true;
}

IngestReport Node::ingest_dataset(const DatasetBundle& bundle) {
  std::unique_lock lock(mu_);
  IngestReport report;
  if (validate_license(bundle.header) == LicenseStatus::warn)
    report.warnings.push_back("dataset license is unspecified; its citations are not open");
  license_ = bundle.header.license;
  persist_node_file();

  auto reject = [&report](EntityKind kind, std::string id, ErrorCode code) {
    ++report.rejected;
    report.rejections.push_back({kind, std::move(id), std::string(to_string(code))});
  };
  auto input_for = [&](const std::string& id) {
    ProvenanceInput in;
    in.agent = "ingest";
    in.source = bundle.header.provider_id;
    if (auto it = bundle.notes.find(id); it != bundle.notes.end()) in.notes = it->second;
    return in;
  };

  for (const auto& r : bundle.resources) {
    if (!is_valid_internal_id(r.id) || (r.parent_id && !is_valid_internal_id(*r.parent_id))) {
      reject(EntityKind::resource, r.id, ErrorCode::malformed_id);
      continue;
    }
    if (!frbr_ok_with(r)) {
      reject(EntityKind::resource, r.id, ErrorCode::malformed_record);
      report.rejections.back().reason = "invalid-frbr-chain";
      continue;
    }
    const bool update = state_.resources.contains(r.id);
    write_resource(r, input_for(r.id));
    ++(update ? report.updated : report.created);
  }

  for (const auto& raw : bundle.citations) {
    Citation c = raw;
    try {
      c.citation_id = mint_citation_id(c.citing_id, c.cited_id);
    } catch (const Error&) {
      reject(EntityKind::citation, raw.citation_id.empty() ? c.citing_id + "->" + c.cited_id : raw.citation_id,
             ErrorCode::malformed_id);
      continue;
    }
    if (!state_.resources.contains(c.citing_id) || !state_.resources.contains(c.cited_id)) {
      reject(EntityKind::citation, c.citation_id, ErrorCode::unknown_resource);
      continue;
    }
    const bool update = state_.citations.contains(c.citation_id);
    write_citation(std::move(c), input_for(raw.citation_id));
    ++(update ? report.updated : report.created);
  }
  return report;
}

BatchReport Node::set_access_policy(const std::vector<std::string>& citation_ids, Access access) {
  std::unique_lock lock(mu_);
  BatchReport report;
  for (const auto& id : citation_ids) {
    auto it = state_.citations.find(id);
    if (it == state_.citations.end()) {
      report.failures.push_back({id, ErrorCode::unknown_citation});
      continue;
    }
    access_policies_[id] = access;
    ProvenanceInput in;
    in.agent = "operator";
    in.source = node_id_;
    in.notes = {"access=" + std::string(to_string(access))};
    write_citation(it->second, std::move(in));
    ++report.updated;
  }
  persist_node_file();
  return report;
}

BatchReport Node::delete_entities(const std::vector<std::string>& resource_ids,
                                  const std::vector<std::string>& citation_ids) {
  std::unique_lock lock(mu_);
  BatchReport report;
  auto drop_citation = [&](const std::string& id) {
    auto it = state_.citations.find(id);
    ProvenanceInput in{Activity::remove, "operator", node_id_, to_json(it->second), {}};
    record_provenance(id, std::move(in));
    const Timestamp ts = provenance_.chain(id).back().timestamp;
    state_.citations.erase(it);
    append_change(ChangeOp::remove, EntityKind::citation, id, std::nullopt, ts);
  };
  for (const auto& id : citation_ids) {
    if (!state_.citations.contains(id)) {
      report.failures.push_back({id, ErrorCode::unknown_citation});
      continue;
    }
    drop_citation(id);
    ++report.updated;
  }
  for (const auto& id : resource_ids) {
    auto it = state_.resources.find(id);
    if (it == state_.resources.end()) {
      report.failures.push_back({id, ErrorCode::unknown_resource});
      continue;
    }
    std::vector<std::string> touching;
    for (const auto& [cid, c] : state_.citations)
      if (c.citing_id == id || c.cited_id == id) touching.push_back(cid);
    for (const auto& cid : touching) {
      drop_citation(cid);
      ++report.updated;
    }
    ProvenanceInput in{Activity::remove, "operator", node_id_, to_json(it->second), {}};
    record_provenance(id, std::move(in));
    const Timestamp ts = provenance_.chain(id).back().timestamp;
    if (it->second.parent_id) children_[*it->second.parent_id].erase(id);
    state_.resources.erase(it);
    append_change(ChangeOp::remove, EntityKind::resource, id, std::nullopt, ts);
    ++report.updated;
  }
  return report;
}

bool Node::is_restricted(const std::string& citation_id) const {
  if (auto p = access_policies_.find(citation_id); p != access_policies_.end() && p->second == Access::restricted)
    return true;
  auto it = state_.citations.find(citation_id);
  return it != state_.citations.end() && it->second.context && it->second.context->access == Access::restricted;
}

NodeMeta Node::serve_meta() const {
  std::shared_lock lock(mu_);
  NodeMeta m;
  m.node_id = node_id_;
  m.license = license_;
  m.resource_count = state_.resources.size();
  m.citation_count = state_.citations.size();
  m.last_seq = change_log_.size();
  if (!change_log_.empty()) m.last_modified = change_log_.back().timestamp;
  return m;
}

Json Node::dump_header() const {
  std::shared_lock lock(mu_);
  Json h;
  h["node_id"] = node_id_;
  h["license"] = to_string(license_);
  h["last_seq"] = change_log_.size();
  h["resource_count"] = state_.resources.size();
  h["citation_count"] = state_.citations.size();
  return h;
}

std::string Node::serve_dump(ExportFormat format, CsvTable table) const {
  Json header;
  CitationIndex snap;
  {
    std::shared_lock lock(mu_);
    header["node_id"] = node_id_;
    header["license"] = to_string(license_);
    header["last_seq"] = change_log_.size();
    header["resource_count"] = state_.resources.size();
    header["citation_count"] = state_.citations.size();
    snap = state_;
  }
  return export_index(snap, format, header, table);
}

ChangePage Node::serve_changes(std::int64_t since, std::int64_t page_size) const {
  if (since < 0) throw Error(ErrorCode::invalid_since, std::to_string(since));
  if (page_size < 1 || page_size > kMaxPageSize)
    throw Error(ErrorCode::invalid_page_size, std::to_string(page_size));
  std::shared_lock lock(mu_);
  ChangePage page;
  const auto total = static_cast<std::uint64_t>(change_log_.size());
  const auto begin = std::min<std::uint64_t>(static_cast<std::uint64_t>(since), total);
  const auto end = std::min<std::uint64_t>(begin + static_cast<std::uint64_t>(page_size), total);
  for (auto i = begin; i < end; ++i) {
    ChangeRecord rec = change_log_[i];
    if (rec.kind == EntityKind::citation && rec.payload) {
      const auto& ctx = (*rec.payload)["context"];
      const bool payload_restricted = ctx.is_object() && ctx.value("access", "open") == "restricted";
      if (payload_restricted || is_restricted(rec.entity_id)) rec.payload = citation_payload_redacted(*rec.payload);
    }
    page.records.push_back(std::move(rec));
  }
  if (end < total) page.next_seq = end;
  return page;
}

CitationContext Node::serve_context(const std::string& citation_id, Requester requester) const {
  std::shared_lock lock(mu_);
  auto it = state_.citations.find(citation_id);
  if (it == state_.citations.end()) throw Error(ErrorCode::unknown_citation, citation_id);
  const CitationContext ctx = it->second.context.value_or(CitationContext{});
  if (ctx.access == Access::restricted && requester == Requester::remote)
    throw Error(ErrorCode::restricted_context, citation_id);
  return ctx;
}

std::optional<BibliographicResource> Node::resource(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = state_.resources.find(id);
  if (it == state_.resources.end()) return std::nullopt;
  return it->second;
}

std::optional<Citation> Node::citation(const std::string& id, Requester requester) const {
  std::shared_lock lock(mu_);
  auto it = state_.citations.find(id);
  if (it == state_.citations.end()) return std::nullopt;
  return requester == Requester::local ? it->second : redacted(it->second);
}

CitationIndex Node::snapshot() const {
  std::shared_lock lock(mu_);
  return state_;
}

std::vector<ProvenanceRecord> Node::provenance_chain(const std::string& entity_id) const {
  std::shared_lock lock(mu_);
  if (!provenance_.has_chain(entity_id)) return {};
  return provenance_.chain(entity_id);
}

}  // namespace huci
