// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>

#include "huci/codec.hpp"
#include "huci/error.hpp"
#include "huci/export.hpp"
#include "huci/federation.hpp"
#include "huci/ingest.hpp"
#include "huci/model.hpp"
#include "huci/node.hpp"
#include "huci/query.hpp"
#include "huci/resolution.hpp"
#include "testkit.hpp"

using namespace huci;
using testkit::kSentinel;

namespace {

struct Failure {
  std::string what;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

NodeEntry entry(const std::string& id) { return {id, "http://" + id + ".invalid", true}; }

bool has_sentinel(std::string_view s) { return s.find(kSentinel) != std::string_view::npos; }

// --- criteria ---------------------------------------------------------------

void capacity() {
  const Json j = Json::parse(testkit::read_text(testkit::fixture("../../data/capacity-ah-25y.json")));
  const CapacityEstimate e = estimate_capacity(CapacityParams::from_json(j));
  const CapacityEstimate one = [&] {
    Json k = j;
    k["years"] = 1;
    return estimate_capacity(CapacityParams::from_json(k));
  }();
  // Test-side arithmetic from the raw inputs.
  const double annual = j["total_articles_per_year"].get<double>() * j["ah_fraction"].get<double>();
  const double bytes_per_article = j["corpus_bytes"].get<double>() / j["corpus_articles"].get<double>();
  const double triples_per_resource = j["corpus_triples"].get<double>() / j["corpus_resources"].get<double>();
  const double years = j["years"].get<double>();
  require(near(annual, 4.5e6, 1e-6) && near(e.annual_articles, annual, 1e-6), "annual articles");
  require(near(one.total_bytes, 230e9, 1e3) && near(annual * bytes_per_article, 230e9, 1e3), "one-year bytes");
  require(near(e.total_bytes / 1e12, 5.75, 0.1) && near(e.total_bytes, years * annual * bytes_per_article, 1e3),
          "25-year bytes " + std::to_string(e.total_bytes));
  require(near(e.triples_per_resource, 266.7, 0.1) && near(e.triples_per_resource, triples_per_resource, 1e-9),
          "triples per resource");
  require(std::fabs(e.total_triples - 3.0e10) <= 0.01 * 3.0e10, "total triples " + std::to_string(e.total_triples));
  require(four_significant(e.total_triples) == "3.000e10", "total triples formatting");
}

void dedup() {
  testkit::Rng rng(1);
  const ResolutionConfig config;
  for (int seed = 0; seed < 1000; ++seed) {
    const auto rs = testkit::random_dedup_instance(rng, 60);
    ManualClock clock;
    const DedupResult out = deduplicate(rs, {}, config, clock);
    require(out.clusters.partition() == testkit::oracle_dedup_partition(rs, config), "seed " + std::to_string(seed));
  }
}

void chaining() {
  testkit::Rng rng(2);
  for (int g = 0; g < 100; ++g) {
    const CitationIndex index = testkit::random_citation_graph(rng, 1000, 5000);
    require(index.resources.size() <= 1000 && index.citations.size() <= 5000, "generator bounds");
    const QueryEngine q(std::make_shared<const CitationIndex>(index));
    std::vector<std::string> ids;
    for (const auto& [id, _] : index.resources) ids.push_back(id);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(std::min<std::size_t>(ids.size(), 60));
    for (const auto& id : ids) {
      const std::string at = "graph " + std::to_string(g) + " id " + id;
      require(q.backward_chain(id) == testkit::oracle_backward(index, id), "backward " + at);
      require(q.forward_chain(id) == testkit::oracle_forward(index, id), "forward " + at);
      require(q.co_citations(id, CoCitationScope::publication) == testkit::oracle_cocited(index, id), "cocited " + at);
      for (auto level : {FrbrLevel::item, FrbrLevel::manifestation, FrbrLevel::expression, FrbrLevel::work})
        require(q.citation_count(id, level) == testkit::oracle_citation_count(index, id, level), "count " + at);
    }
  }
}

struct ThreeNodes {
  ManualClock clock;
  std::map<std::string, std::unique_ptr<Node>> nodes;
  std::map<std::string, const Node*> live;
  ThreeNodes() {
    for (auto& b : testkit::three_node_fixture()) {
      auto node = std::make_unique<Node>(b.header.provider_id, clock);
      node->ingest_dataset(b);
      live[b.header.provider_id] = node.get();
      nodes.emplace(b.header.provider_id, std::move(node));
    }
  }
};

void federation() {
  ThreeNodes t;
  std::vector<std::string> order = {"alpha", "beta", "gamma"};
  std::set<std::string> outputs;
  do {
    Federation fed({}, t.clock, testkit::in_process_factory(t.live));
    for (const auto& id : order) fed.register_node(entry(id));
    std::vector<StagedDataset> staged;
    for (const auto& id : order) staged.push_back(fed.harvest_full(id));
    fed.merge(staged);
    std::size_t cross = 0;
    for (const auto& members : fed.snapshot()->clusters.partition()) {
      std::set<std::string> providers;
      for (const auto& m : members) providers.insert(std::string(provider_of(m)));
      if (members.size() > 1 && providers.size() == members.size()) ++cross;
    }
    require(cross == 6, "cross-node duplicate clusters " + std::to_string(cross));
    outputs.insert(testkit::federation_nt(fed));
  } while (std::next_permutation(order.begin(), order.end()));
  require(outputs.size() == 1, "permutations disagree");

  Federation fed({}, t.clock, testkit::in_process_factory(t.live));
  for (const auto& [id, _] : t.nodes) fed.register_node(entry(id));
  fed.harvest_all();
  const std::string first = testkit::federation_nt(fed);
  require(first == *outputs.begin(), "harvest_all differs from staged merge");
  const HarvestRunReport again = fed.harvest_all();
  require(testkit::federation_nt(fed) == first, "second harvest changed the export");
  require(again.merge.provenance_records == 0, "second harvest wrote provenance");
}

void stream_dump() {
  testkit::Rng rng(3);
  for (int seed = 0; seed < 50; ++seed) {
    ManualClock clock;
    Node node("p", clock);
    testkit::NodeOpModel model;
    const int ops = 10 + static_cast<int>(rng() % 50);
    for (int i = 0; i < ops; ++i) testkit::random_node_operation(node, rng, "p", 12, model);
    const CitationIndex dumped = index_from_export(Json::parse(node.serve_dump(ExportFormat::json)));
    for (std::int64_t page : {1, 5, 1000})
      require(testkit::replay_changes(node, page) == dumped, "seed " + std::to_string(seed) + " page " + std::to_string(page));
  }
}

void gating() {
  testkit::Rng rng(4);
  std::size_t restricted_seen = 0, federated_restricted = 0;
  for (int seed = 0; seed < 100; ++seed) {
    const std::string at = "seed " + std::to_string(seed);
    ManualClock clock;
    std::map<std::string, std::unique_ptr<Node>> nodes;
    std::map<std::string, testkit::NodeOpModel> models;
    std::map<std::string, const Node*> live;
    for (const std::string id : {"p", "q"}) {
      nodes[id] = std::make_unique<Node>(id, clock);
      nodes[id]->ingest_dataset(DatasetBundle{{id, License::cc0, std::nullopt}, {}, {}, {}});
      live[id] = nodes[id].get();
    }
    Federation fed({}, clock, testkit::in_process_factory(live));
    for (const auto& [id, _] : nodes) fed.register_node(entry(id));
    for (int round = 0; round < 3; ++round) {
      for (auto& [id, node] : nodes)
        for (int k = 0; k < 10; ++k) testkit::random_node_operation(*node, rng, id, 10, models[id]);
      for (auto& [id, node] : nodes) node->ingest_dataset(DatasetBundle{{id, License::cc0, std::nullopt}, {}, {}, {}});
      fed.harvest_all();
    }
    for (const auto& [id, node] : nodes) {
      for (auto f : {ExportFormat::json, ExportFormat::csv, ExportFormat::nt})
        require(!has_sentinel(node->serve_dump(f)), at + " node dump");
      require(!has_sentinel(node->serve_dump(ExportFormat::csv, CsvTable::resources)), at + " resource table");
      for (std::int64_t page : {1, 7, 1000}) {
        std::uint64_t since = 0;
        while (true) {
          const ChangePage p = node->serve_changes(static_cast<std::int64_t>(since), page);
          require(!has_sentinel(to_json(p).dump()), at + " change page");
          if (!p.next_seq) break;
          since = *p.next_seq;
        }
      }
      for (const auto& [cid, c] : node->snapshot().citations) {
        if (!c.context || c.context->access != Access::restricted || !c.context->excerpt) continue;
        ++restricted_seen;
        require(node->serve_context(cid, Requester::local).excerpt == c.context->excerpt, at + " local context");
        bool refused = false;
        try {
          node->serve_context(cid, Requester::remote);
        } catch (const Error& e) {
          refused = e.code() == ErrorCode::restricted_context;
        }
        require(refused, at + " remote context for " + cid);
      }
    }
    const auto snap = fed.snapshot();
    for (auto f : {ExportFormat::json, ExportFormat::csv, ExportFormat::nt})
      require(!has_sentinel(export_index(snap->index, f, fed.dump_header())), at + " federation export");
    for (const auto& [_, c] : snap->index.citations)
      if (c.context && c.context->access == Access::restricted) ++federated_restricted;
  }
  require(restricted_seen > 0 && federated_restricted > 0, "no restricted contexts were exercised");
}

void format_round_trips() {
  const std::string bytes = testkit::read_text(testkit::fixture("flat-3.json"));
  const ParseBatch batch = parse_flat_json(bytes);
  require(batch.failures.empty(), "fixture parses");
  DatasetBundle bundle;
  bundle.header = {"aph", License::cc0, std::nullopt};
  for (const auto& r : batch.records)
    bundle.resources.push_back(apply_alignment(r, builtin_mapping(SourceFormat::flat_json), "aph").resource);
  bundle.citations =
      citations_from_json(Json::parse(testkit::read_text(testkit::fixture("flat-3-citations.json"))), bundle.header);

  ManualClock clock;
  Node a("aph", clock);
  a.ingest_dataset(bundle);
  const std::string json_a = a.serve_dump(ExportFormat::json);
  const CitationIndex exported = index_from_export(Json::parse(json_a));

  DatasetBundle again;
  again.header = bundle.header;
  for (const auto& [_, r] : exported.resources) again.resources.push_back(r);
  for (const auto& [_, c] : exported.citations) again.citations.push_back(c);
  Node b("aph", clock);
  const IngestReport report = b.ingest_dataset(again);
  require(report.rejected == 0, "re-ingest rejected records");
  const std::string json_b = b.serve_dump(ExportFormat::json);
  require(index_from_export(Json::parse(json_b)) == exported, "json round trip");
  require(export_json(exported, Json::object()) == export_json(index_from_export(Json::parse(json_b)), Json::object()),
          "json bytes");
  for (auto table : {CsvTable::citations, CsvTable::resources})
    require(a.serve_dump(ExportFormat::csv, table) == b.serve_dump(ExportFormat::csv, table), "csv bytes");
  const std::string nt = a.serve_dump(ExportFormat::nt);
  require(nt == b.serve_dump(ExportFormat::nt), "nt bytes");
  require(nt == a.serve_dump(ExportFormat::nt), "nt repeatable");
  std::string why;
  require(testkit::nt_document_ok(nt, &why), "nt grammar: " + why);
}

void coverage() {
  CitationIndex seventy_five;
  for (int i = 0; i < 100; ++i) {
    auto r = testkit::make_resource("r:" + std::to_string(i));
    r.language = i < 75 ? "en" : "it";
    seventy_five.resources.emplace(r.id, r);
  }
  const auto report = coverage_report(seventy_five, default_reference_distribution());
  require(near(report.language_deltas.at("en"), 0.45, 1e-9), "delta(en) " + std::to_string(report.language_deltas.at("en")));

  CitationIndex english;
  auto r = testkit::make_resource("r:1");
  r.language = "en";
  english.resources.emplace(r.id, r);
  const double tvd = coverage_report(english, default_reference_distribution()).tvd;
  require(near(tvd, 0.70, 1e-9), "tvd " + std::to_string(tvd));
}

void compliance() {
  const auto table = testkit::compliance_truth_table();
  require(table.size() == 10, "table size");
  for (const auto& c : table) {
    const ComplianceVector v = check_open_citation(c.citation, c.citing, c.cited, c.reachable, c.separate);
    require(v == c.expected, c.name);
    require(v.is_open_citation() ==
                (c.expected.structured && c.expected.separate && c.expected.open && c.expected.identifiable &&
                 c.expected.available),
            c.name + " overall");
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
      {"capacity-estimate", capacity},
      {"dedup-matches-oracle", dedup},
      {"chaining-matches-brute-force", chaining},
      {"federation-order-independent-and-idempotent", federation},
      {"change-stream-replays-to-dump", stream_dump},
      {"restricted-context-gating", gating},
      {"export-format-round-trips", format_round_trips},
      {"coverage-language-skew", coverage},
      {"compliance-truth-table", compliance},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    std::string detail;
    try {
      check();
    } catch (const Failure& f) {
      detail = f.what;
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (detail.empty()) {
      std::cout << "PASS " << name << std::endl;
    } else {
      ++failed;
      std::cout << "FAIL " << name << ": " << detail << std::endl;
    }
  }
  return failed == 0 ? 0 : 1;
}
