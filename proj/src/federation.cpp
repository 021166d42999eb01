#include "huci/federation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "huci/codec.hpp"

namespace huci {

namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kHarvestPageSize = 1000;
constexpr int kMaxDumpAttempts = 3;

bool valid_node_id(std::string_view id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
}

std::string join(const std::set<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
  return out;
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << bytes;
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot replace " + path.string() + ": " + ec.message());
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return Json();
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::malformed_record, path.string() + ": " + e.what());
  }
}

// Same-id citations from several nodes: the first node's copy wins, gaps are
// filled from later copies and any restricted copy restricts the result.
void absorb(Citation& kept, const Citation& other) {
  if (!kept.context) {
    kept.context = other.context;
  } else if (other.context && other.context->access == Access::restricted) {
    kept.context->access = Access::restricted;
  }
  if (!kept.locus) kept.locus = other.locus;
  if (kept.license == License::unspecified) kept.license = other.license;
  kept.provenance.insert(kept.provenance.end(), other.provenance.begin(), other.provenance.end());
}

void sort_unique(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

// ---------------------------------------------------------------------------

FederationConfig FederationConfig::from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_config, "federation config must be an object");
  FederationConfig c;
  try {
    std::set<std::string> seen;
    for (const auto& n : j.value("nodes", Json::array())) {
      NodeEntry e;
      e.node_id = n.at("node_id").get<std::string>();
      e.base_url = n.at("base_url").get<std::string>();
      e.enabled = n.value("enabled", true);
      if (!valid_node_id(e.node_id)) throw Error(ErrorCode::invalid_config, "bad node_id '" + e.node_id + "'");
      if (!seen.insert(e.node_id).second) throw Error(ErrorCode::duplicate_node_id, e.node_id);
      c.nodes.push_back(std::move(e));
    }
    if (j.contains("resolution")) c.resolution = ResolutionConfig::from_json(j["resolution"]);
    c.require_open_license = j.value("require_open_license", true);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::invalid_config, e.what());
  }
  c.resolution.validate();
  return c;
}

Json FederationConfig::to_json() const {
  Json j;
  j["nodes"] = Json::array();
  for (const auto& n : nodes)
    j["nodes"].push_back(Json{{"node_id", n.node_id}, {"base_url", n.base_url}, {"enabled", n.enabled}});
  j["resolution"] = resolution.to_json();
  j["require_open_license"] = require_open_license;
  return j;
}

std::string_view to_string(NodeState s) noexcept {
  switch (s) {
    case NodeState::enabled: return "enabled";
    case NodeState::disabled: return "disabled";
    case NodeState::pending: return "pending";
  }
  return "?";
}

Json NodeStatus::to_json() const {
  Json j;
  j["node_id"] = entry.node_id;
  j["base_url"] = entry.base_url;
  j["enabled"] = state == NodeState::enabled;
  j["state"] = to_string(state);
  j["cursor"] = cursor;
  j["license"] = license ? Json(to_string(*license)) : Json(nullptr);
  j["last_harvest"] = last_harvest ? Json(last_harvest->to_string()) : Json(nullptr);
  j["last_error"] = last_error ? Json(*last_error) : Json(nullptr);
  j["warnings"] = warnings;
  return j;
}

Json MergeReport::to_json() const {
  return Json{{"resources", resources}, {"citations", citations}, {"pending", pending},
              {"provenance_records", provenance_records}};
}

Json HarvestRunReport::to_json() const {
  Json j;
  j["nodes"] = Json::object();
  for (const auto& [id, n] : nodes) j["nodes"][id] = n;
  j["succeeded"] = succeeded;
  j["failed"] = failed;
  j["merge"] = merge.to_json();
  return j;
}

CitationIndex parse_dump(std::string_view bytes, std::uint64_t* last_seq) {
  Json j;
  try {
    j = Json::parse(bytes);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::dump_invalid, e.what());
  }
  CitationIndex index = index_from_export(j);
  const Json& h = j["header"];
  if (!h.contains("last_seq") || !h["last_seq"].is_number_unsigned())
    throw Error(ErrorCode::dump_invalid, "header lacks last_seq");
  if (h.value("resource_count", index.resources.size()) != index.resources.size() ||
      h.value("citation_count", index.citations.size()) != index.citations.size())
    throw Error(ErrorCode::dump_invalid, "header counts disagree with the entity arrays");
  for (const auto& [id, c] : index.citations)
    if (!index.resources.contains(c.citing_id) || !index.resources.contains(c.cited_id))
      throw Error(ErrorCode::dump_invalid, "citation " + id + " has an endpoint missing from the dump");
  if (last_seq) *last_seq = h["last_seq"].get<std::uint64_t>();
  return index;
}

// ---------------------------------------------------------------------------

Federation::Federation(FederationConfig config, Clock& clock, ClientFactory factory)
    : config_(std::move(config)), clock_(clock), factory_(std::move(factory)),
      snapshot_(std::make_shared<FederationSnapshot>()) {
  if (!factory_) factory_ = [](const NodeEntry& e) { return make_http_node_client(e.base_url); };
}

std::unique_ptr<Federation> Federation::open(const fs::path& dir, FederationConfig config, Clock& clock,
                                             ClientFactory factory) {
  std::error_code ec;
  fs::create_directories(dir / "sources", ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
  auto fed = std::make_unique<Federation>(std::move(config), clock, std::move(factory));

  const Json registry = read_json_file(dir / "registry.json");
  const Json cursors = read_json_file(dir / "cursors.json");
  if (registry.is_array()) {
    for (const auto& r : registry) {
      NodeStatus s;
      try {
        s.entry = {r.at("node_id").get<std::string>(), r.at("base_url").get<std::string>(), r.value("enabled", true)};
        const std::string state = r.value("state", "pending");
        s.state = state == "enabled" ? NodeState::enabled : state == "disabled" ? NodeState::disabled : NodeState::pending;
        if (r.contains("license") && r["license"].is_string()) s.license = parse_license(r["license"].get<std::string>());
        if (r.contains("last_harvest") && r["last_harvest"].is_string())
          s.last_harvest = Timestamp::parse(r["last_harvest"].get<std::string>());
        if (r.contains("last_error") && r["last_error"].is_string()) s.last_error = r["last_error"].get<std::string>();
        s.warnings = r.value("warnings", std::vector<std::string>{});
      } catch (const Json::exception& e) {
        throw Error(ErrorCode::malformed_record, "registry.json: " + std::string(e.what()));
      }
      if (cursors.is_object() && cursors.contains(s.entry.node_id)) s.cursor = cursors[s.entry.node_id].get<std::uint64_t>();
      fed->clients_[s.entry.node_id] = fed->factory_(s.entry);
      fed->status_[s.entry.node_id] = std::move(s);
    }
  }
  for (const auto& [id, _] : fed->status_) {
    const fs::path path = dir / "sources" / (id + ".jsonl");
    std::ifstream in(path);
    if (!in) continue;
    CitationIndex& copy = fed->sources_[id];
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        const Json j = Json::parse(line);
        if (j.at("kind") == "resource") {
          auto r = resource_from_json(j.at("entity"));
          copy.resources.emplace(r.id, std::move(r));
        } else {
          auto c = citation_from_json(j.at("entity"));
          copy.citations.emplace(c.citation_id, std::move(c));
        }
      } catch (const Json::exception& e) {
        throw Error(ErrorCode::malformed_record, path.string() + ": " + e.what());
      }
    }
  }
  if (std::ifstream in(dir / "provenance.jsonl"); in) {
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) fed->provenance_.append_loaded(provenance_from_json(Json::parse(line)));
  }
  fed->snapshot_ = fed->resolve_pool();
  fed->dir_ = dir;

  for (const auto& entry : fed->config_.nodes) {
    bool known;
    {
      std::lock_guard lock(fed->state_mu_);
      known = fed->status_.contains(entry.node_id);
      if (known) {
        // The config file stays authoritative for addresses and operator switches.
        auto& s = fed->status_[entry.node_id];
        if (s.entry.base_url != entry.base_url) fed->clients_[entry.node_id] = fed->factory_(entry);
        s.entry = entry;
        if (!entry.enabled) s.state = NodeState::disabled;
        else if (s.state == NodeState::disabled && !s.license) s.state = NodeState::pending;
      }
    }
    if (!known) fed->register_node(entry);
  }
  fed->persist();
  return fed;
}

NodeStatus Federation::register_node(const NodeEntry& entry) {
  if (!valid_node_id(entry.node_id)) throw Error(ErrorCode::invalid_config, "bad node_id '" + entry.node_id + "'");
  if (entry.base_url.empty()) throw Error(ErrorCode::invalid_config, "node " + entry.node_id + " has no base_url");
  std::unique_ptr<NodeClient> client;
  {
    std::lock_guard lock(state_mu_);
    if (status_.contains(entry.node_id)) throw Error(ErrorCode::duplicate_node_id, entry.node_id);
  }
  client = factory_(entry);
  NodeStatus s;
  s.entry = entry;
  if (!entry.enabled) {
    s.state = NodeState::disabled;
  } else {
    try {
      const NodeMeta meta = client->meta();
      s.license = meta.license;
      if (meta.license == License::unspecified && config_.require_open_license) {
        s.state = NodeState::disabled;
        s.warnings.push_back("license unspecified; node registered disabled");
      } else {
        s.state = NodeState::enabled;
      }
    } catch (const Error& e) {
      s.state = NodeState::pending;
      s.warnings.push_back(std::string("registration pending: ") + e.what());
    }
  }
  {
    std::lock_guard lock(state_mu_);
    if (!status_.emplace(entry.node_id, s).second) throw Error(ErrorCode::duplicate_node_id, entry.node_id);
    clients_[entry.node_id] = std::move(client);
  }
  if (dir_) persist();
  return s;
}

NodeClient& Federation::client_for(const std::string& node_id) {
  std::lock_guard lock(state_mu_);
  auto it = clients_.find(node_id);
  if (it == clients_.end()) throw Error(ErrorCode::unknown_node, node_id);
  return *it->second;
}

NodeStatus& Federation::status_for(const std::string& node_id) {
  auto it = status_.find(node_id);
  if (it == status_.end()) throw Error(ErrorCode::unknown_node, node_id);
  return it->second;
}

void Federation::note_error(const std::string& node_id, const Error& e) {
  std::lock_guard lock(state_mu_);
  if (auto it = status_.find(node_id); it != status_.end()) it->second.last_error = e.what();
}

StagedDataset Federation::harvest_full(const std::string& node_id) {
  NodeClient& client = client_for(node_id);
  {
    std::lock_guard lock(state_mu_);
    if (status_for(node_id).state == NodeState::disabled) throw Error(ErrorCode::node_disabled, node_id);
  }
  try {
    for (int attempt = 1; attempt <= kMaxDumpAttempts; ++attempt) {
      const NodeMeta before = client.meta();
      if (before.license == License::unspecified && config_.require_open_license) {
        std::lock_guard lock(state_mu_);
        auto& s = status_for(node_id);
        s.state = NodeState::disabled;
        s.license = before.license;
        s.warnings.push_back("license unspecified; node disabled");
        throw Error(ErrorCode::node_disabled, node_id + " publishes an unspecified license");
      }
      const std::string bytes = client.dump_json();
      const NodeMeta after = client.meta();
      std::uint64_t dump_seq = 0;
      CitationIndex entities = parse_dump(bytes, &dump_seq);
      if (before.last_seq != after.last_seq || dump_seq != before.last_seq) continue;
      {
        std::lock_guard lock(state_mu_);
        auto& s = status_for(node_id);
        s.license = before.license;
        if (s.state == NodeState::pending) s.state = NodeState::enabled;
      }
      StagedDataset staged;
      staged.node_id = node_id;
      staged.full = true;
      staged.entities = std::move(entities);
      staged.from_cursor = cursor(node_id);
      staged.to_cursor = before.last_seq;
      return staged;
    }
    throw Error(ErrorCode::seq_race_exhausted, node_id + " kept advancing during " +
                                                   std::to_string(kMaxDumpAttempts) + " dump attempts");
  } catch (const Error& e) {
    note_error(node_id, e);
    throw;
  }
}

StagedDataset Federation::harvest_incremental(const std::string& node_id) {
  NodeClient& client = client_for(node_id);
  {
    std::lock_guard lock(state_mu_);
    if (status_for(node_id).state == NodeState::disabled) throw Error(ErrorCode::node_disabled, node_id);
  }
  StagedDataset staged;
  staged.node_id = node_id;
  staged.from_cursor = cursor(node_id);
  staged.to_cursor = staged.from_cursor;
  try {
    std::uint64_t since = staged.from_cursor;
    while (true) {
      ChangePage page = client.changes(since, kHarvestPageSize);
      for (auto& rec : page.records) {
        if (rec.seq <= staged.to_cursor) throw Error(ErrorCode::dump_invalid, "change stream out of order");
        staged.to_cursor = rec.seq;
        staged.changes.push_back(std::move(rec));
      }
      if (!page.next_seq) break;
      if (*page.next_seq <= since) throw Error(ErrorCode::dump_invalid, "next_seq does not advance");
      since = *page.next_seq;
    }
  } catch (const Error& e) {
    note_error(node_id, e);
    throw;
  }
  return staged;
}

StagedDataset Federation::harvest(const std::string& node_id) {
  bool never;
  {
    std::lock_guard lock(merge_mu_);
    never = !sources_.contains(node_id);
  }
  return never ? harvest_full(node_id) : harvest_incremental(node_id);
}

std::uint64_t Federation::cursor(const std::string& node_id) const {
  std::lock_guard lock(state_mu_);
  auto it = status_.find(node_id);
  return it == status_.end() ? 0 : it->second.cursor;
}

std::shared_ptr<FederationSnapshot> Federation::resolve_pool() const {
  auto snap = std::make_shared<FederationSnapshot>();

  // Pool source copies; equal ids across nodes merge in node-id order.
  std::map<std::string, std::vector<const BibliographicResource*>> resource_copies;
  std::map<std::string, std::set<std::string>> resource_contributors;
  std::map<std::string, Citation> citations;
  std::map<std::string, std::set<std::string>> citation_contributors;
  for (const auto& [node_id, copy] : sources_) {
    for (const auto& [id, r] : copy.resources) {
      resource_copies[id].push_back(&r);
      resource_contributors[id].insert(node_id + "/" + id);
    }
    for (const auto& [id, c] : copy.citations) {
      Citation tagged = c;
      tagged.provenance.clear();
      tagged.provenance.push_back(node_id);
      for (const auto& p : c.provenance) tagged.provenance.push_back(node_id + "/" + p);
      auto [it, inserted] = citations.emplace(id, tagged);
      if (!inserted) absorb(it->second, tagged);
      citation_contributors[id].insert(node_id + "/" + id);
    }
  }
  std::vector<BibliographicResource> resources;
  resources.reserve(resource_copies.size());
  for (auto& [id, copies] : resource_copies) resources.push_back(merge_members(copies));

  std::vector<Citation> ready;
  for (auto& [id, c] : citations) {
    if (resource_copies.contains(c.citing_id) && resource_copies.contains(c.cited_id)) ready.push_back(std::move(c));
    else snap->pending.push_back(std::move(c));
  }

  ManualClock scratch;  // dedup's own merge records are not kept; the federation log diffs states instead
  DedupResult result = deduplicate(std::move(resources), std::move(ready), config_.resolution, scratch);

  for (const auto& [source_id, cluster_id] : result.clusters.mapping)
    snap->contributors[cluster_id].insert(resource_contributors[source_id].begin(), resource_contributors[source_id].end());
  for (auto& r : result.resources) snap->index.resources.emplace(r.id, std::move(r));
  for (const auto& [source_id, merged_id] : result.citation_rewrites)
    snap->contributors[merged_id].insert(citation_contributors[source_id].begin(), citation_contributors[source_id].end());
  for (auto& c : result.citations) {
    sort_unique(c.provenance);
    snap->index.citations.emplace(c.citation_id, std::move(c));
  }
  snap->clusters = std::move(result.clusters);
  return snap;
}

MergeReport Federation::merge(const std::vector<StagedDataset>& staged) {
  std::lock_guard merge_lock(merge_mu_);
  std::map<std::string, CitationIndex> next = sources_;
  std::map<std::string, std::uint64_t> advanced;
  for (const auto& s : staged) {
    const std::uint64_t current = std::max(cursor(s.node_id), advanced[s.node_id]);
    {
      std::lock_guard lock(state_mu_);
      status_for(s.node_id);
    }
    if (s.full) {
      if (s.to_cursor < current) continue;  // stale dump
      next[s.node_id] = s.entities;
    } else {
      CitationIndex& copy = next[s.node_id];
      for (const auto& change : s.changes)
        if (change.seq > current) apply_change(copy, change);
    }
    advanced[s.node_id] = std::max(current, s.to_cursor);
  }

  std::swap(sources_, next);
  std::shared_ptr<FederationSnapshot> fresh;
  try {
    fresh = resolve_pool();
  } catch (...) {
    std::swap(sources_, next);
    throw;
  }
  const auto previous = snapshot();

  MergeReport report;
  std::vector<ProvenanceRecord> added;
  auto record = [&](const std::string& id, ProvenanceInput in) {
    in.agent = "federation";
    added.push_back(provenance_.record(id, std::move(in), clock_));
    ++report.provenance_records;
  };
  auto contributors_of = [](const FederationSnapshot& s, const std::string& id) {
    auto it = s.contributors.find(id);
    return it == s.contributors.end() ? std::set<std::string>{} : it->second;
  };
  for (const auto& [id, r] : fresh->index.resources) {
    const auto contributors = contributors_of(*fresh, id);
    const auto old = previous->index.resources.find(id);
    const bool existed = old != previous->index.resources.end();
    const auto old_contributors = contributors_of(*previous, id);
    if (existed && old->second == r && old_contributors == contributors) continue;
    ProvenanceInput in;
    in.source = join(contributors);
    if (existed) in.prior = to_json(old->second);
    if (contributors.size() >= 2 && old_contributors != contributors) in.activity = Activity::merge;
    else in.activity = existed ? Activity::update : Activity::create;
    if (in.activity == Activity::create && provenance_.has_chain(id)) in.activity = Activity::update;
    record(id, std::move(in));
  }
  for (const auto& [id, c] : fresh->index.citations) {
    const auto contributors = contributors_of(*fresh, id);
    const auto old = previous->index.citations.find(id);
    const bool existed = old != previous->index.citations.end();
    if (existed && old->second == c && contributors_of(*previous, id) == contributors) continue;
    ProvenanceInput in;
    in.source = join(contributors);
    if (existed) in.prior = to_json(old->second);
    in.activity = existed || provenance_.has_chain(id) ? Activity::update : Activity::create;
    record(id, std::move(in));
  }
  for (const auto& [id, r] : previous->index.resources) {
    if (fresh->index.resources.contains(id) || !provenance_.has_chain(id)) continue;
    record(id, {Activity::remove, "", join(contributors_of(*previous, id)), to_json(r), {}});
  }
  for (const auto& [id, c] : previous->index.citations) {
    if (fresh->index.citations.contains(id) || !provenance_.has_chain(id)) continue;
    record(id, {Activity::remove, "", join(contributors_of(*previous, id)), to_json(c), {}});
  }

  {
    std::lock_guard lock(state_mu_);
    const Timestamp now = clock_.now();
    for (const auto& [node_id, to] : advanced) {
      auto& s = status_for(node_id);
      s.cursor = std::max(s.cursor, to);
      s.last_harvest = now;
      s.last_error.reset();
    }
  }
  report.resources = fresh->index.resources.size();
  report.citations = fresh->index.citations.size();
  report.pending = fresh->pending.size();
  {
    std::lock_guard lock(snapshot_mu_);
    snapshot_ = std::move(fresh);
  }
  ++merge_count_;

  if (dir_) {
    for (const auto& [node_id, _] : advanced) persist_source(node_id);
    std::ofstream out(*dir_ / "provenance.jsonl", std::ios::app);
    for (const auto& rec : added) out << to_json(rec).dump(-1, ' ', false, Json::error_handler_t::replace) << '\n';
    if (!out) throw Error(ErrorCode::io_error, "cannot append federation provenance");
    persist();
  }
  return report;
}

HarvestRunReport Federation::harvest_all() {
  std::vector<std::string> ids;
  {
    std::lock_guard lock(state_mu_);
    for (const auto& [id, s] : status_)
      if (s.state != NodeState::disabled) ids.push_back(id);
  }
  HarvestRunReport report;
  std::vector<StagedDataset> staged;
  for (const auto& id : ids) {
    try {
      StagedDataset s = harvest(id);
      report.nodes[id] = Json{{"ok", true}, {"mode", s.full ? "full" : "incremental"},
                              {"records", s.full ? s.entities.resources.size() + s.entities.citations.size()
                                                 : s.changes.size()}};
      staged.push_back(std::move(s));
      ++report.succeeded;
    } catch (const Error& e) {
      report.nodes[id] = Json{{"ok", false}, {"error", std::string(to_string(e.code()))}, {"detail", e.what()}};
      ++report.failed;
    }
  }
  report.merge = merge(staged);
  for (auto& [id, j] : report.nodes) j["cursor"] = cursor(id);
  return report;
}

Json Federation::federation_status() const {
  const auto snap = snapshot();
  Json j;
  j["nodes"] = Json::array();
  for (const auto& s : nodes()) j["nodes"].push_back(s.to_json());
  j["totals"] = Json{{"resources", snap->index.resources.size()},
                     {"citations", snap->index.citations.size()},
                     {"clusters", snap->clusters.clusters.size()}};
  j["pending_pool"] = snap->pending.size();
  return j;
}

std::vector<NodeStatus> Federation::nodes() const {
  std::lock_guard lock(state_mu_);
  std::vector<NodeStatus> out;
  for (const auto& [_, s] : status_) out.push_back(s);
  return out;
}

std::shared_ptr<const FederationSnapshot> Federation::snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  return snapshot_;
}

Json Federation::dump_header() const {
  const auto snap = snapshot();
  License license = License::cc0;
  bool any = false;
  for (const auto& s : nodes()) {
    if (s.state != NodeState::enabled || !s.license) continue;
    any = true;
    if (*s.license == License::unspecified) license = License::unspecified;
    else if (*s.license == License::other_open && license == License::cc0) license = License::other_open;
  }
  Json h;
  h["node_id"] = "federation";
  h["license"] = to_string(any ? license : License::unspecified);
  h["last_seq"] = 0;
  h["resource_count"] = snap->index.resources.size();
  h["citation_count"] = snap->index.citations.size();
  return h;
}

std::vector<ProvenanceRecord> Federation::provenance_chain(const std::string& entity_id) const {
  std::lock_guard lock(merge_mu_);
  if (!provenance_.has_chain(entity_id)) return {};
  return provenance_.chain(entity_id);
}

void Federation::persist_source(const std::string& node_id) const {
  std::string bytes;
  auto it = sources_.find(node_id);
  if (it != sources_.end()) {
    for (const auto& [_, r] : it->second.resources)
      bytes += Json{{"kind", "resource"}, {"entity", to_json(r)}}.dump(-1, ' ', false, Json::error_handler_t::replace) + "\n";
    for (const auto& [_, c] : it->second.citations)
      bytes += Json{{"kind", "citation"}, {"entity", to_json(c)}}.dump(-1, ' ', false, Json::error_handler_t::replace) + "\n";
  }
  write_file_atomic(*dir_ / "sources" / (node_id + ".jsonl"), bytes);
}

void Federation::persist() const {
  if (!dir_) return;
  Json registry = Json::array();
  Json cursors = Json::object();
  for (const auto& s : nodes()) {
    registry.push_back(s.to_json());
    cursors[s.entry.node_id] = s.cursor;
  }
  write_file_atomic(*dir_ / "registry.json", pretty(registry));
  write_file_atomic(*dir_ / "cursors.json", pretty(cursors));
}

}  // namespace huci
