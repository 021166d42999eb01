#include "huci/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "huci/codec.hpp"
#include "huci/error.hpp"
#include "huci/export.hpp"
#include "huci/federation.hpp"
#include "huci/http.hpp"
#include "huci/ingest.hpp"
#include "huci/node.hpp"
#include "huci/query.hpp"

namespace huci {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& path, ErrorCode on_error) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(on_error, path.string() + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
}

std::string default_node_id(const fs::path& dir) {
  const auto name = fs::weakly_canonical(dir).filename().string();
  return name.empty() ? "node" : name;
}

void serve_until_interrupted(HttpServer& server, std::ostream& out) {
  g_interrupted = false;
  auto previous_int = std::signal(SIGINT, on_signal);
  auto previous_term = std::signal(SIGTERM, on_signal);
  const int port = server.start();
  out << "listening=" << port << std::endl;
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);
}

/// The index a query-side command reads: a node directory, a federation
/// directory, or nothing (an empty index).
struct LoadedIndex {
  std::shared_ptr<const CitationIndex> index;
  std::shared_ptr<const ClusterMap> clusters;
  Json header;
};

LoadedIndex load_index(const fs::path& dir, const std::string& config_path, Clock& clock) {
  LoadedIndex out;
  if (fs::exists(dir / "node.json")) {
    auto node = Node::open(dir, default_node_id(dir), clock);
    out.index = std::make_shared<const CitationIndex>(node->snapshot());
    out.header = node->dump_header();
    return out;
  }
  if (fs::exists(dir / "registry.json")) {
    FederationConfig config;
    if (!config_path.empty()) config = FederationConfig::from_json(read_json(config_path, ErrorCode::invalid_config));
    config.nodes.clear();  // reading only; never contact nodes
    auto fed = Federation::open(dir, config, clock);
    auto snap = fed->snapshot();
    out.index = std::shared_ptr<const CitationIndex>(snap, &snap->index);
    out.clusters = std::shared_ptr<const ClusterMap>(snap, &snap->clusters);
    out.header = fed->dump_header();
    return out;
  }
  if (!fs::exists(dir)) throw Error(ErrorCode::io_error, "no node or federation data in " + dir.string());
  out.index = std::make_shared<const CitationIndex>();
  out.header = Json{{"node_id", ""}, {"license", "unspecified"}, {"last_seq", 0}, {"resource_count", 0}, {"citation_count", 0}};
  return out;
}

Json resource_rows(const QueryEngine& q, const std::vector<std::string>& ids) {
  Json rows = Json::array();
  for (const auto& id : ids) rows.push_back(to_json(q.index().resources.at(id)));
  return rows;
}

struct IngestOptions {
  std::string data;
  std::string node_id;
  std::string format = "auto";
  std::string mapping;
  std::string provider;
  std::string license = "unspecified";
  std::string citations;
  std::vector<std::string> paths;
};

int cmd_ingest(const IngestOptions& o, Clock& clock, std::ostream& out, std::ostream& err) {
  auto node = Node::open(o.data, o.node_id.empty() ? default_node_id(o.data) : o.node_id, clock);
  DatasetBundle bundle;
  bundle.header.provider_id = o.provider.empty() ? node->node_id() : o.provider;
  bundle.header.license = *parse_license(o.license);
  std::vector<Rejection> parse_rejections;

  std::optional<AlignmentMapping> custom;
  if (!o.mapping.empty()) {
    custom = AlignmentMapping::from_json(read_json(o.mapping, ErrorCode::invalid_mapping));
    if (custom->name.empty()) custom->name = fs::path(o.mapping).filename().string();
  }

  for (const auto& path : o.paths) {
    const std::string bytes = read_file(path);
    if (o.format == "bundle") {
      DatasetBundle b = bundle_from_json(read_json(path, ErrorCode::malformed_record));
      bundle.header = b.header;
      bundle.resources.insert(bundle.resources.end(), b.resources.begin(), b.resources.end());
      bundle.citations.insert(bundle.citations.end(), b.citations.begin(), b.citations.end());
      for (auto& [id, notes] : b.notes) bundle.notes[id] = notes;
      continue;
    }
    const SourceFormat format = o.format == "auto" ? detect_format(bytes) : *parse_source_format(o.format);
    const ParseBatch batch = parse_records(bytes, format);
    for (const auto& f : batch.failures)
      parse_rejections.push_back({EntityKind::resource, path + "#" + std::to_string(f.index), std::string(to_string(f.code))});
    const AlignmentMapping mapping = custom ? *custom : builtin_mapping(format);
    for (std::size_t i = 0; i < batch.records.size(); ++i) {
      try {
        AlignedResource a = apply_alignment(batch.records[i], mapping, bundle.header.provider_id);
        auto notes = a.notes;
        if (!o.mapping.empty()) notes.push_back("mapping-file=" + o.mapping);
        notes.push_back("source=" + fs::path(path).filename().string() + "#" + std::to_string(batch.indices[i]));
        bundle.notes[a.resource.id] = std::move(notes);
        bundle.resources.push_back(std::move(a.resource));
      } catch (const Error& e) {
        parse_rejections.push_back(
            {EntityKind::resource, path + "#" + std::to_string(batch.indices[i]), std::string(to_string(e.code()))});
      }
    }
  }
  if (!o.citations.empty()) {
    auto cites = citations_from_json(read_json(o.citations, ErrorCode::malformed_record), bundle.header);
    bundle.citations.insert(bundle.citations.end(), cites.begin(), cites.end());
  }

  IngestReport report = node->ingest_dataset(bundle);
  report.rejected += parse_rejections.size();
  report.rejections.insert(report.rejections.begin(), parse_rejections.begin(), parse_rejections.end());
  out << pretty(report.to_json());
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  return report.created + report.updated == 0 && report.rejected > 0 ? 1 : 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated citation index: nodes, harvesting, queries and exports.", "huci"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "huci 0.1.0");

  SystemClock clock;
  std::function<int()> action;
  const auto path_check = CLI::ExistingFile;

  // node serve / node policy
  auto* node_cmd = app.add_subcommand("node", "Run or administer a provider node");
  node_cmd->require_subcommand(1);
  std::string node_data, node_id, token, host = "127.0.0.1", access;
  int port = 0;
  std::vector<std::string> policy_ids;
  auto* serve = node_cmd->add_subcommand("serve", "Serve the node HTTP binding");
  serve->add_option("--data", node_data, "Node data directory")->required();
  serve->add_option("--port", port, "Listen port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--node-id", node_id, "Node id for a fresh directory");
  serve->add_option("--token", token, "Operator bearer token (default: HUCI_TOKEN)");
  serve->callback([&] {
    action = [&] {
      if (token.empty())
        if (const char* env = std::getenv("HUCI_TOKEN")) token = env;
      auto node = Node::open(node_data, node_id.empty() ? default_node_id(node_data) : node_id, clock);
      ServerOptions opts;
      opts.host = host;
      opts.port = port;
      if (!token.empty()) opts.token = token;
      NodeServer server(*node, opts);
      serve_until_interrupted(server, out);
      return 0;
    };
  });
  auto* policy = node_cmd->add_subcommand("policy", "Set context access for citations");
  policy->add_option("--data", node_data, "Node data directory")->required();
  policy->add_option("--access", access, "open or restricted")->required()->check(CLI::IsMember({"open", "restricted"}));
  policy->add_option("ids", policy_ids, "Citation ids")->required();
  policy->callback([&] {
    action = [&] {
      auto node = Node::open(node_data, default_node_id(node_data), clock);
      const BatchReport report = node->set_access_policy(policy_ids, *parse_access(access));
      out << pretty(report.to_json());
      return report.updated == 0 ? 1 : 0;
    };
  });

  // ingest
  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Ingest provider records into a node");
  ingest_cmd->add_option("--data", ingest.data, "Node data directory")->required();
  ingest_cmd->add_option("--node-id", ingest.node_id, "Node id for a fresh directory");
  ingest_cmd->add_option("--format", ingest.format, "auto, marc-json, flat-json, csv or bundle")
      ->check(CLI::IsMember({"auto", "marc-json", "flat-json", "csv", "bundle"}));
  ingest_cmd->add_option("--mapping", ingest.mapping, "Alignment mapping file")->check(path_check);
  ingest_cmd->add_option("--provider", ingest.provider, "Provider id used to scope record ids");
  ingest_cmd->add_option("--license", ingest.license, "Dataset license")
      ->check(CLI::IsMember({"cc0", "other-open", "unspecified"}));
  ingest_cmd->add_option("--citations", ingest.citations, "Citation list (JSON)")->check(path_check);
  ingest_cmd->add_option("paths", ingest.paths, "Record files")->required()->check(path_check);
  ingest_cmd->callback([&] { action = [&] { return cmd_ingest(ingest, clock, out, err); }; });

  // federate harvest / status / serve
  std::string fed_config, fed_data;
  int fed_port = 0;
  auto* fed_cmd = app.add_subcommand("federate", "Harvest nodes into the federated index");
  fed_cmd->require_subcommand(1);
  auto open_federation = [&] {
    auto config = FederationConfig::from_json(read_json(fed_config, ErrorCode::invalid_config));
    return Federation::open(fed_data, std::move(config), clock);
  };
  auto* harvest = fed_cmd->add_subcommand("harvest", "Harvest every enabled node and merge");
  auto* status = fed_cmd->add_subcommand("status", "Print federation status");
  auto* fed_serve = fed_cmd->add_subcommand("serve", "Serve the query HTTP binding");
  for (auto* sub : {harvest, status, fed_serve}) {
    sub->add_option("--config", fed_config, "Federation config file")->required()->check(path_check);
    sub->add_option("--data", fed_data, "Federation data directory")->required();
  }
  fed_serve->add_option("--port", fed_port, "Listen port")->check(CLI::Range(0, 65535));
  fed_serve->add_option("--host", host, "Listen address");
  harvest->callback([&] {
    action = [&] {
      auto fed = open_federation();
      const HarvestRunReport report = fed->harvest_all();
      out << pretty(report.to_json());
      for (const auto& [id, n] : report.nodes)
        if (!n.value("ok", false)) err << "node " << id << ": " << n.value("detail", "failed") << "\n";
      return report.succeeded > 0 ? 0 : 1;
    };
  });
  status->callback([&] {
    action = [&] {
      out << pretty(open_federation()->federation_status());
      return 0;
    };
  });
  fed_serve->callback([&] {
    action = [&] {
      auto fed = open_federation();
      ServerOptions opts;
      opts.host = host;
      opts.port = fed_port;
      FederationServer server(*fed, opts);
      serve_until_interrupted(server, out);
      return 0;
    };
  });

  // query
  std::string q_data, q_config, q_id, scope = "publication", level = "work";
  auto* query_cmd = app.add_subcommand("query", "Citation chaining and counts");
  query_cmd->require_subcommand(1);
  auto add_query = [&](const char* name, const char* help) {
    auto* sub = query_cmd->add_subcommand(name, help);
    sub->add_option("--data", q_data, "Node or federation data directory")->required();
    sub->add_option("--config", q_config, "Federation config file (optional)");
    sub->add_option("id", q_id, std::string(name) == "search" ? "Title substring" : "Resource id or scheme:value")
        ->required();
    return sub;
  };
  auto* q_backward = add_query("backward", "Resources cited by ID");
  auto* q_forward = add_query("forward", "Resources citing ID");
  auto* q_cocited = add_query("cocited", "Co-cited resources with counts");
  q_cocited->add_option("--scope", scope, "publication or proximal")->check(CLI::IsMember({"publication", "proximal"}));
  auto* q_count = add_query("count", "Citation count at an FRBR level");
  q_count->add_option("--level", level, "item, manifestation, expression or work")
      ->check(CLI::IsMember({"item", "manifestation", "expression", "work"}));
  auto* q_search = add_query("search", "Normalized-title substring search");
  auto run_query = [&](const std::function<Json(const QueryEngine&)>& f) {
    action = [&, f] {
      LoadedIndex loaded = load_index(q_data, q_config, clock);
      QueryEngine q(loaded.index, loaded.clusters);
      out << pretty(f(q));
      return 0;
    };
  };
  q_backward->callback([&] {
    run_query([&](const QueryEngine& q) {
      const auto id = q.resolve(q_id);
      return Json{{"id", id}, {"resources", resource_rows(q, q.backward_chain(id))}};
    });
  });
  q_forward->callback([&] {
    run_query([&](const QueryEngine& q) {
      const auto id = q.resolve(q_id);
      return Json{{"id", id}, {"resources", resource_rows(q, q.forward_chain(id))}};
    });
  });
  q_cocited->callback([&] {
    run_query([&](const QueryEngine& q) {
      const auto id = q.resolve(q_id);
      Json counts = Json::object();
      for (const auto& [x, n] : q.co_citations(id, *parse_cocitation_scope(scope))) counts[x] = n;
      return Json{{"id", id}, {"scope", scope}, {"counts", counts}};
    });
  });
  q_count->callback([&] {
    run_query([&](const QueryEngine& q) {
      const auto id = q.resolve(q_id);
      return Json{{"id", id}, {"level", level}, {"count", q.citation_count(id, *parse_frbr_level(level))}};
    });
  });
  q_search->callback([&] {
    run_query([&](const QueryEngine& q) { return Json{{"query", q_id}, {"resources", resource_rows(q, q.search(q_id))}}; });
  });

  // report coverage
  std::string reference_path;
  auto* report_cmd = app.add_subcommand("report", "Corpus reports");
  report_cmd->require_subcommand(1);
  auto* coverage = report_cmd->add_subcommand("coverage", "Language, typology, decade and collection coverage");
  coverage->add_option("--data", q_data, "Node or federation data directory")->required();
  coverage->add_option("--config", q_config, "Federation config file (optional)");
  coverage->add_option("--reference", reference_path, "Reference language distribution (JSON)")->check(path_check);
  coverage->callback([&] {
    action = [&] {
      const auto reference = reference_path.empty()
                                 ? default_reference_distribution()
                                 : reference_from_json(read_json(reference_path, ErrorCode::invalid_reference_distribution));
      LoadedIndex loaded = load_index(q_data, q_config, clock);
      out << pretty(coverage_report(*loaded.index, reference).to_json());
      return 0;
    };
  });

  // estimate
  std::string params_path;
  auto* estimate = app.add_subcommand("estimate", "Storage and triple-count capacity estimate");
  estimate->add_option("--params", params_path, "Capacity parameters (JSON)")->required()->check(path_check);
  estimate->callback([&] {
    action = [&] {
      const auto params = CapacityParams::from_json(read_json(params_path, ErrorCode::invalid_params));
      out << pretty(estimate_capacity(params).to_json());
      return 0;
    };
  });

  // export
  std::string export_format, export_out, table = "citations";
  auto* export_cmd = app.add_subcommand("export", "Write a canonical export");
  export_cmd->add_option("--data", q_data, "Node or federation data directory")->required();
  export_cmd->add_option("--config", q_config, "Federation config file (optional)");
  export_cmd->add_option("--format", export_format, "csv, json or nt")->required()->check(CLI::IsMember({"csv", "json", "nt"}));
  export_cmd->add_option("--out", export_out, "Output file")->required();
  export_cmd->add_option("--table", table, "CSV table: citations or resources")
      ->check(CLI::IsMember({"citations", "resources"}));
  export_cmd->callback([&] {
    action = [&] {
      LoadedIndex loaded = load_index(q_data, q_config, clock);
      const auto format = *parse_export_format(export_format);
      write_file(export_out, export_index(*loaded.index, format, loaded.header, *parse_csv_table(table)));
      return 0;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (!action) return 2;
  try {
    return action();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace huci
