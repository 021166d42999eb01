#include "testkit.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "huci/codec.hpp"
#include "huci/error.hpp"
#include "huci/export.hpp"

#ifndef HUCI_FIXTURE_DIR
#error "HUCI_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace huci::testkit {

namespace fs = std::filesystem;

BibliographicResource make_resource(std::string id, std::string title, std::optional<std::int64_t> year) {
  BibliographicResource r;
  r.id = std::move(id);
  r.title = std::move(title);
  r.year = year;
  return r;
}

Citation make_citation(const std::string& citing, const std::string& cited) {
  Citation c;
  c.citing_id = citing;
  c.cited_id = cited;
  c.citation_id = citing + "->" + cited;
  c.license = License::cc0;
  return c;
}

Citation make_citation(const std::string& citing, const std::string& cited, std::string excerpt, Access access) {
  Citation c = make_citation(citing, cited);
  c.context = CitationContext{std::move(excerpt), ContextWindow::sentence, access, std::nullopt};
  return c;
}

fs::path fixture(std::string_view name) { return fs::path(HUCI_FIXTURE_DIR) / name; }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("huci-test-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

// --- compliance -------------------------------------------------------------

std::vector<ComplianceCase> compliance_truth_table() {
  BibliographicResource citing = make_resource("p:citing", "Citing article", 2001);
  BibliographicResource cited = make_resource("p:cited", "Cited monograph", 1950);
  citing.identifiers.emplace(IdScheme::doi, "10.1/citing");
  cited.identifiers.emplace(IdScheme::doi, "10.1/cited");
  const Citation base = make_citation("p:citing", "p:cited");
  const ComplianceVector all{true, true, true, true, true};

  std::vector<ComplianceCase> cases;
  auto add = [&](std::string name, auto&& tweak, ComplianceVector expected) {
    ComplianceCase c{std::move(name), base, citing, cited, true, true, expected};
    tweak(c);
    cases.push_back(std::move(c));
  };
  auto with = [all](auto member) {
    ComplianceVector v = all;
    v.*member = false;
    return v;
  };
  add("all gates hold", [](ComplianceCase&) {}, all);
  add("other-open license", [](ComplianceCase& c) { c.citation.license = License::other_open; }, all);
  add("unspecified license", [](ComplianceCase& c) { c.citation.license = License::unspecified; },
      with(&ComplianceVector::open));
  add("cited without identifiers", [](ComplianceCase& c) { c.cited.identifiers.clear(); },
      with(&ComplianceVector::identifiable));
  add("citing without identifiers", [](ComplianceCase& c) { c.citing.identifiers.clear(); },
      with(&ComplianceVector::identifiable));
  add("no citation id", [](ComplianceCase& c) { c.citation.citation_id.clear(); },
      with(&ComplianceVector::identifiable));
  add("citing title empty", [](ComplianceCase& c) { c.citing.title.clear(); }, with(&ComplianceVector::structured));
  add("cited title empty", [](ComplianceCase& c) { c.cited.title.clear(); }, with(&ComplianceVector::structured));
  add("node unreachable", [](ComplianceCase& c) { c.reachable = false; }, with(&ComplianceVector::available));
  add("embedded in reference text", [](ComplianceCase& c) { c.separate = false; }, with(&ComplianceVector::separate));
  return cases;
}

// --- resolution -------------------------------------------------------------

std::string ascii_normalize(std::string_view s) {
  std::string out;
  bool gap = false;
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      if (gap && !out.empty()) out.push_back(' ');
      gap = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      gap = true;
    }
  }
  return out;
}

namespace {

bool resource_scheme(IdScheme s) {
  switch (s) {
    case IdScheme::doi:
    case IdScheme::handle:
    case IdScheme::isbn:
    case IdScheme::uri:
      return true;
    default:
      return false;
  }
}

bool share_resource_identifier(const BibliographicResource& a, const BibliographicResource& b) {
  for (const auto& x : a.identifiers)
    for (const auto& y : b.identifiers)
      if (resource_scheme(x.scheme()) && x.scheme() == y.scheme() && x.value() == y.value()) return true;
  return false;
}

std::vector<std::size_t> identifier_labels(const std::vector<BibliographicResource>& rs) {
  std::vector<std::size_t> label(rs.size());
  std::iota(label.begin(), label.end(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      for (std::size_t j = i + 1; j < rs.size(); ++j) {
        if (label[i] == label[j] || !share_resource_identifier(rs[i], rs[j])) continue;
        const std::size_t keep = std::min(label[i], label[j]);
        const std::size_t drop = std::max(label[i], label[j]);
        for (auto& l : label)
          if (l == drop) l = keep;
        changed = true;
      }
    }
  }
  return label;
}

std::set<std::set<std::string>> partition_of(const std::vector<BibliographicResource>& rs,
                                             const std::vector<std::size_t>& label) {
  std::map<std::size_t, std::set<std::string>> groups;
  for (std::size_t i = 0; i < rs.size(); ++i) groups[label[i]].insert(rs[i].id);
  std::set<std::set<std::string>> out;
  for (auto& [_, g] : groups) out.insert(std::move(g));
  return out;
}

struct Rep {
  std::string title;
  std::optional<std::int64_t> year;
  std::string author;
};

double rep_score(const Rep& a, const Rep& b, const ResolutionConfig& config) {
  double s = 0;
  if (!a.title.empty() && a.title == b.title) s += config.weights.title;
  if (a.year && b.year && *a.year == *b.year) s += config.weights.year;
  if (!a.author.empty() && a.author == b.author) s += config.weights.author;
  return s;
}

Rep rep_of(std::vector<const BibliographicResource*> members) {
  std::sort(members.begin(), members.end(), [](auto* x, auto* y) { return x->id < y->id; });
  Rep r;
  bool have_title = false, have_author = false;
  for (const auto* m : members) {
    if (!have_title && !m->title.empty()) {
      r.title = ascii_normalize(m->title);
      have_title = true;
    }
    if (!r.year && m->year) r.year = m->year;
    if (!have_author && !m->authors.empty()) {
      r.author = ascii_normalize(m->authors.front().family);
      have_author = true;
    }
  }
  return r;
}

}  // namespace

std::set<std::set<std::string>> oracle_identifier_partition(const std::vector<BibliographicResource>& resources) {
  return partition_of(resources, identifier_labels(resources));
}

double oracle_similarity(const BibliographicResource& a, const BibliographicResource& b, const ResolutionConfig& config) {
  return rep_score(rep_of({&a}), rep_of({&b}), config);
}

std::set<std::set<std::string>> oracle_dedup_partition(const std::vector<BibliographicResource>& resources,
                                                       const ResolutionConfig& config) {
  std::vector<std::size_t> label = identifier_labels(resources);
  while (true) {
    std::map<std::size_t, std::vector<const BibliographicResource*>> groups;
    for (std::size_t i = 0; i < resources.size(); ++i) groups[label[i]].push_back(&resources[i]);
    std::vector<std::pair<std::size_t, Rep>> reps;
    for (auto& [l, members] : groups) reps.emplace_back(l, rep_of(members));

    // Collect every qualifying pair of this round before relabelling.
    std::vector<std::pair<std::size_t, std::size_t>> joins;
    for (std::size_t a = 0; a < reps.size(); ++a)
      for (std::size_t b = a + 1; b < reps.size(); ++b)
        if (rep_score(reps[a].second, reps[b].second, config) >= config.similarity_threshold)
          joins.emplace_back(reps[a].first, reps[b].first);
    if (joins.empty()) break;
    std::map<std::size_t, std::size_t> parent;
    for (auto& [l, _] : groups) parent[l] = l;
    std::function<std::size_t(std::size_t)> root = [&](std::size_t l) { return parent[l] == l ? l : root(parent[l]); };
    for (auto [x, y] : joins) {
      const std::size_t rx = root(x), ry = root(y);
      if (rx != ry) parent[std::max(rx, ry)] = std::min(rx, ry);
    }
    for (auto& l : label) l = root(l);
  }
  return partition_of(resources, label);
}

std::vector<BibliographicResource> random_dedup_instance(Rng& rng, std::size_t max_n) {
  static const std::vector<std::string> kWords{"storia", "di",      "venezia", "roma",   "history", "of",
                                               "the",    "ancient", "city",    "letters", "archive", "notes",
                                               "on",     "greek",   "latin",   "papyri",  "studies", "vol"};
  static const std::vector<std::string> kProviders{"aph", "bnf", "iccu", "jstor"};
  static const std::vector<std::string> kFamilies{"Rossi", "Bianchi", "Smith", "Dupont", "Muller"};
  auto pick = [&rng](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto chance = [&rng](double p) { return std::bernoulli_distribution(p)(rng); };

  const std::size_t n = std::uniform_int_distribution<std::size_t>(2, max_n)(rng);
  // Title pool: several titles share their first four tokens on purpose.
  std::vector<std::string> titles;
  const std::size_t pool = 1 + n / 3;
  for (std::size_t t = 0; t < pool; ++t) {
    std::string title;
    const std::size_t words = 1 + pick(6);
    for (std::size_t w = 0; w < words; ++w) title += (w ? " " : "") + kWords[pick(kWords.size())];
    if (!titles.empty() && chance(0.2)) title = titles[pick(titles.size())] + " " + kWords[pick(kWords.size())];
    titles.push_back(title);
  }
  const std::size_t id_pool = 1 + n / 4;

  std::vector<BibliographicResource> out;
  std::set<std::string> used_ids;
  for (std::size_t i = 0; i < n; ++i) {
    BibliographicResource r;
    do {
      r.id = kProviders[pick(kProviders.size())] + ":" + std::to_string(pick(n * 4));
    } while (!used_ids.insert(r.id).second);
    if (!chance(0.05)) {
      std::string t = titles[pick(titles.size())];
      // Cosmetic variants normalize to the same key.
      if (chance(0.3)) t[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
      if (chance(0.3)) t += ".";
      if (chance(0.2)) std::replace(t.begin(), t.end(), ' ', '-');
      r.title = t;
    }
    if (chance(0.7)) r.year = 1990 + static_cast<std::int64_t>(pick(4));
    if (chance(0.6)) r.authors.push_back({kFamilies[pick(kFamilies.size())], std::nullopt});
    if (chance(0.35)) r.identifiers.emplace(IdScheme::doi, "10.1000/" + std::to_string(pick(id_pool)));
    if (chance(0.15)) r.identifiers.emplace(IdScheme::isbn, "978" + std::to_string(pick(id_pool)));
    if (chance(0.1)) r.identifiers.emplace(IdScheme::handle, "20.500/" + std::to_string(pick(id_pool)));
    if (chance(0.05)) r.identifiers.emplace(IdScheme::uri, "https://ex.org/" + std::to_string(pick(id_pool)));
    // Agent identifiers are shared widely and must never link resources.
    if (chance(0.3)) r.identifiers.emplace(IdScheme::orcid, "0000-0000-0000-000" + std::to_string(pick(3)));
    if (chance(0.2)) r.identifiers.emplace(IdScheme::viaf, std::to_string(pick(3)));
    if (chance(0.1)) r.identifiers.emplace(IdScheme::local, "shelf-" + std::to_string(pick(3)));
    out.push_back(std::move(r));
  }
  return out;
}

// --- chaining ---------------------------------------------------------------

CitationIndex random_citation_graph(Rng& rng, std::size_t max_resources, std::size_t max_citations) {
  auto pick = [&rng](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  CitationIndex index;
  const std::size_t n = std::uniform_int_distribution<std::size_t>(1, max_resources)(rng);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    BibliographicResource r = make_resource("g:" + std::to_string(i), "Resource " + std::to_string(i));
    r.frbr_level = static_cast<FrbrLevel>(pick(4));
    if (i > 0 && std::bernoulli_distribution(0.5)(rng)) {
      const auto& candidate = index.resources.at(ids[pick(ids.size())]);
      if (candidate.frbr_level > r.frbr_level) r.parent_id = candidate.id;
    }
    if (std::bernoulli_distribution(0.3)(rng)) r.identifiers.emplace(IdScheme::doi, "10.9/" + std::to_string(i));
    ids.push_back(r.id);
    index.resources.emplace(r.id, std::move(r));
  }
  const std::size_t m = std::uniform_int_distribution<std::size_t>(0, max_citations)(rng);
  for (std::size_t k = 0; k < m; ++k) {
    Citation c = make_citation(ids[pick(n)], ids[pick(n)]);
    index.citations.emplace(c.citation_id, std::move(c));
  }
  return index;
}

std::vector<std::string> oracle_backward(const CitationIndex& index, const std::string& id) {
  std::vector<std::string> out;
  for (const auto& [_, c] : index.citations)
    if (c.citing_id == id) out.push_back(c.cited_id);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> oracle_forward(const CitationIndex& index, const std::string& id) {
  std::vector<std::string> out;
  for (const auto& [_, c] : index.citations)
    if (c.cited_id == id) out.push_back(c.citing_id);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::map<std::string, std::size_t> oracle_cocited(const CitationIndex& index, const std::string& id) {
  std::set<std::string> citing;
  for (const auto& [_, c] : index.citations)
    if (c.cited_id == id) citing.insert(c.citing_id);
  std::set<std::pair<std::string, std::string>> pairs;  // (citing publication, co-cited)
  for (const auto& [_, c] : index.citations)
    if (citing.contains(c.citing_id) && c.cited_id != id) pairs.emplace(c.citing_id, c.cited_id);
  std::map<std::string, std::size_t> out;
  for (const auto& [_, x] : pairs) ++out[x];
  return out;
}

std::string oracle_frbr_map(const CitationIndex& index, const std::string& id, FrbrLevel level) {
  std::vector<const BibliographicResource*> chain{&index.resources.at(id)};
  while (chain.size() < 5 && chain.back()->parent_id) {
    auto it = index.resources.find(*chain.back()->parent_id);
    if (it == index.resources.end()) break;
    chain.push_back(&it->second);
  }
  std::size_t reached = 0;
  for (std::size_t k = 1; k < chain.size(); ++k) {
    const int prev = static_cast<int>(chain[k - 1]->frbr_level);
    const int next = static_cast<int>(chain[k]->frbr_level);
    if (prev >= static_cast<int>(level)) break;
    if (next <= prev || next > static_cast<int>(level)) break;
    reached = k;
  }
  return chain[reached]->id;
}

std::size_t oracle_citation_count(const CitationIndex& index, const std::string& id, FrbrLevel level) {
  const std::string target = oracle_frbr_map(index, id, level);
  std::map<std::string, std::string> memo;
  auto mapped = [&](const std::string& x) -> const std::string& {
    auto it = memo.find(x);
    if (it == memo.end()) it = memo.emplace(x, oracle_frbr_map(index, x, level)).first;
    return it->second;
  };
  std::set<std::string> citing;
  for (const auto& [_, c] : index.citations)
    if (mapped(c.cited_id) == target) citing.insert(mapped(c.citing_id));
  return citing.size();
}

// --- N-Triples --------------------------------------------------------------

namespace {

struct NtCursor {
  std::string_view s;
  std::size_t i = 0;
  std::string* why;

  bool fail(const std::string& msg) {
    if (why) *why = msg + " at column " + std::to_string(i);
    return false;
  }
  bool at_end() const { return i >= s.size(); }
  void skip_ws() {
    while (!at_end() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }
  bool hex(std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i)
      if (at_end() || !std::isxdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
  }
  bool uchar() {
    if (at_end() || s[i] != '\\') return false;
    ++i;
    if (at_end()) return false;
    if (s[i] == 'u') return ++i, hex(4);
    if (s[i] == 'U') return ++i, hex(8);
    return false;
  }
  bool iri() {
    if (at_end() || s[i] != '<') return fail("expected '<'");
    ++i;
    const std::size_t start = i;
    while (!at_end() && s[i] != '>') {
      const unsigned char c = static_cast<unsigned char>(s[i]);
      if (c == '\\') {
        if (!uchar()) return fail("bad escape in IRI");
        continue;
      }
      if (c <= 0x20 || c == '<' || c == '"' || c == '{' || c == '}' || c == '|' || c == '^' || c == '`')
        return fail("illegal character in IRI");
      ++i;
    }
    if (at_end()) return fail("unterminated IRI");
    const std::string_view body = s.substr(start, i - start);
    ++i;
    // Absolute IRI: scheme ":" with scheme = ALPHA *(ALPHA / DIGIT / "+" / "-" / ".")
    const auto colon = body.find(':');
    if (colon == std::string_view::npos || colon == 0 || !std::isalpha(static_cast<unsigned char>(body[0])))
      return fail("relative IRI");
    for (std::size_t k = 1; k < colon; ++k) {
      const char c = body[k];
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return fail("bad IRI scheme");
    }
    return true;
  }
  bool blank() {
    if (s.substr(i, 2) != "_:") return fail("expected blank node");
    i += 2;
    const std::size_t start = i;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' || s[i] == '-' || s[i] == '.')) ++i;
    if (i == start || s[i - 1] == '.') return fail("bad blank node label");
    return true;
  }
  bool literal() {
    if (at_end() || s[i] != '"') return fail("expected literal");
    ++i;
    while (!at_end() && s[i] != '"') {
      const char c = s[i];
      if (c == '\n' || c == '\r') return fail("raw line break in literal");
      if (c == '\\') {
        if (i + 1 < s.size() && std::string_view("tbnrf\"'\\").find(s[i + 1]) != std::string_view::npos) {
          i += 2;
          continue;
        }
        if (!uchar()) return fail("bad escape in literal");
        continue;
      }
      ++i;
    }
    if (at_end()) return fail("unterminated literal");
    ++i;
    if (s.substr(i, 2) == "^^") {
      i += 2;
      return iri();
    }
    if (!at_end() && s[i] == '@') {
      ++i;
      const std::size_t start = i;
      while (!at_end() && (std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '-')) ++i;
      if (i == start) return fail("empty language tag");
    }
    return true;
  }
};

}  // namespace

bool nt_line_ok(std::string_view line, std::string* why) {
  NtCursor c{line, 0, why};
  c.skip_ws();
  if (c.at_end()) return c.fail("empty line");
  if (line[c.i] == '<' ? !c.iri() : !c.blank()) return false;
  c.skip_ws();
  if (!c.iri()) return false;
  c.skip_ws();
  if (c.at_end()) return c.fail("missing object");
  const char o = line[c.i];
  if (o == '<' ? !c.iri() : o == '_' ? !c.blank() : !c.literal()) return false;
  c.skip_ws();
  if (c.at_end() || line[c.i] != '.') return c.fail("missing final '.'");
  ++c.i;
  c.skip_ws();
  if (!c.at_end()) return c.fail("trailing characters");
  return true;
}

bool nt_document_ok(std::string_view doc, std::string* why) {
  if (!doc.empty() && doc.back() != '\n') {
    if (why) *why = "missing trailing newline";
    return false;
  }
  std::string_view previous;
  std::size_t start = 0, line_no = 0;
  while (start < doc.size()) {
    const auto end = doc.find('\n', start);
    const std::string_view line = doc.substr(start, end - start);
    ++line_no;
    std::string detail;
    if (!nt_line_ok(line, &detail)) {
      if (why) *why = "line " + std::to_string(line_no) + ": " + detail;
      return false;
    }
    if (line_no > 1 && !(previous < line)) {
      if (why) *why = "line " + std::to_string(line_no) + " out of order or duplicated";
      return false;
    }
    previous = line;
    start = end + 1;
  }
  return true;
}

// --- nodes and federations --------------------------------------------------

DatasetBundle chain_bundle(const std::string& provider, std::size_t n, License license) {
  DatasetBundle b;
  b.header.provider_id = provider;
  b.header.license = license;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = make_resource(provider + ":r" + std::to_string(i), "Work " + std::to_string(i) + " of " + provider,
                           1900 + static_cast<std::int64_t>(i));
    r.identifiers.emplace(IdScheme::doi, "10.1000/" + provider + "-r" + std::to_string(i));
    b.resources.push_back(std::move(r));
  }
  for (std::size_t i = 1; i < n; ++i) b.citations.push_back(make_citation(provider + ":r0", provider + ":r" + std::to_string(i)));
  return b;
}

void random_node_operation(Node& node, Rng& rng, const std::string& provider, std::size_t universe, NodeOpModel& model) {
  static std::atomic<std::uint64_t> excerpt_counter{0};
  auto pick = [&rng](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto rid = [&](std::size_t i) { return provider + ":r" + std::to_string(i); };
  const CitationIndex state = node.snapshot();
  std::vector<std::string> citation_ids;
  for (const auto& [id, _] : state.citations) citation_ids.push_back(id);

  const std::size_t op = pick(10);
  if (op < 6) {
    DatasetBundle b;
    b.header.provider_id = provider;
    b.header.license = pick(5) == 0 ? License::unspecified : License::cc0;
    std::set<std::string> present;
    for (const auto& [id, _] : state.resources) present.insert(id);
    const std::size_t k = 1 + pick(4);
    for (std::size_t i = 0; i < k; ++i) {
      auto r = make_resource(rid(pick(universe)), "Title " + std::to_string(pick(1000)),
                             1800 + static_cast<std::int64_t>(pick(200)));
      if (pick(3) == 0) r.language = pick(2) ? "en" : "it";
      present.insert(r.id);
      b.resources.push_back(std::move(r));
    }
    if (pick(8) == 0) b.resources.push_back(make_resource(provider + ":bad->id"));
    const std::vector<std::string> ids(present.begin(), present.end());
    const std::size_t c = pick(5);
    for (std::size_t i = 0; i < c; ++i) {
      const std::string citing = ids[pick(ids.size())], cited = ids[pick(ids.size())];
      const std::string cid = citing + "->" + cited;
      const std::size_t ctx = pick(3);
      const std::string n = std::to_string(excerpt_counter.fetch_add(1));
      if (ctx == 0) {
        b.citations.push_back(make_citation(citing, cited));
      } else if (ctx == 1 || model.opened.contains(cid)) {
        b.citations.push_back(make_citation(citing, cited, "public-" + n + "#", ctx == 1 ? Access::open : Access::restricted));
      } else {
        b.citations.push_back(make_citation(citing, cited, std::string(kSentinel) + "-" + n + "#", Access::restricted));
      }
      if (pick(4) == 0) b.citations.back().locus = "p. " + std::to_string(1 + pick(300));
    }
    if (pick(6) == 0) b.citations.push_back(make_citation(rid(0), provider + ":missing"));
    node.ingest_dataset(b);
  } else if (op < 9) {
    const Access access = pick(2) ? Access::restricted : Access::open;
    std::vector<std::string> chosen;
    const std::size_t k = 1 + pick(3);
    for (std::size_t i = 0; i < k && !citation_ids.empty(); ++i) {
      const std::string& id = citation_ids[pick(citation_ids.size())];
      if (access == Access::open) {
        const auto& ctx = state.citations.at(id).context;
        if (ctx && ctx->excerpt && ctx->excerpt->starts_with(kSentinel)) continue;
        model.opened.insert(id);
      }
      chosen.push_back(id);
    }
    if (pick(4) == 0) chosen.push_back("nope->nothing");
    node.set_access_policy(chosen, access);
  } else {
    if (!citation_ids.empty() && pick(2)) node.delete_entities({}, {citation_ids[pick(citation_ids.size())]});
    else if (!state.resources.empty()) node.delete_entities({std::next(state.resources.begin(), static_cast<long>(pick(state.resources.size())))->first}, {});
  }
}

std::set<std::string> restricted_excerpts(const Node& node) {
  std::set<std::string> out;
  for (const auto& [_, c] : node.snapshot().citations)
    if (c.context && c.context->access == Access::restricted && c.context->excerpt) out.insert(*c.context->excerpt);
  return out;
}

CitationIndex replay_changes(const Node& node, std::int64_t page_size) {
  CitationIndex out;
  std::int64_t since = 0;
  while (true) {
    const ChangePage page = node.serve_changes(since, page_size);
    for (const auto& rec : page.records) apply_change(out, rec);
    if (!page.next_seq) break;
    since = static_cast<std::int64_t>(*page.next_seq);
  }
  return out;
}

NodeMeta DeadClient::meta() { throw Error(ErrorCode::node_unreachable, "dead node"); }
std::string DeadClient::dump_json() { throw Error(ErrorCode::node_unreachable, "dead node"); }
ChangePage DeadClient::changes(std::uint64_t, std::int64_t) { throw Error(ErrorCode::node_unreachable, "dead node"); }

ClientFactory in_process_factory(const std::map<std::string, const Node*>& nodes) {
  return [nodes](const NodeEntry& e) -> std::unique_ptr<NodeClient> {
    auto it = nodes.find(e.node_id);
    if (it == nodes.end() || it->second == nullptr) return std::make_unique<DeadClient>();
    return std::make_unique<InProcessNodeClient>(*it->second);
  };
}

NodeMeta ScriptedClient::meta() {
  ++meta_calls;
  return on_meta ? on_meta(*inner_, meta_calls) : inner_->meta();
}

std::string ScriptedClient::dump_json() {
  ++dump_calls;
  return on_dump ? on_dump(*inner_, dump_calls) : inner_->dump_json();
}

ChangePage ScriptedClient::changes(std::uint64_t since, std::int64_t page_size) {
  ++change_calls;
  return on_changes ? on_changes(*inner_, since, page_size, change_calls) : inner_->changes(since, page_size);
}

std::vector<DatasetBundle> three_node_fixture() {
  auto res = [](std::string id, std::string title, std::int64_t year, std::string family) {
    BibliographicResource r = make_resource(std::move(id), std::move(title), year);
    r.authors.push_back({std::move(family), std::nullopt});
    r.typology = Typology::journal_article;
    return r;
  };
  auto doi = [](BibliographicResource& r, std::string v) { r.identifiers.emplace(IdScheme::doi, v); };

  DatasetBundle alpha, beta, gamma;
  alpha.header = {"alpha", License::cc0, std::nullopt};
  beta.header = {"beta", License::cc0, std::nullopt};
  gamma.header = {"gamma", License::other_open, std::nullopt};

  // 1: alpha/beta share a DOI.
  auto a1 = res("alpha:a1", "Storia di Venezia", 1992, "Rossi");
  auto b1 = res("beta:b1", "Storia di Venezia.", 1992, "Rossi");
  doi(a1, "10.1000/d1");
  doi(b1, "10.1000/D1");
  // 2: alpha/gamma share a DOI.
  auto a2 = res("alpha:a2", "Roman Letters", 1980, "Smith");
  auto g1 = res("gamma:g1", "Roman letters", 1980, "Smith");
  doi(a2, "10.1000/d2");
  doi(g1, "10.1000/d2");
  // 3: beta/gamma share an ISBN.
  auto b2 = res("beta:b2", "Papyri of the Fayum", 1975, "Grenfell");
  auto g2 = res("gamma:g2", "The Fayum papyri", 1975, "Grenfell");
  b2.identifiers.emplace(IdScheme::isbn, "9780000000002");
  g2.identifiers.emplace(IdScheme::isbn, "9780000000002");
  b2.typology = g2.typology = Typology::book;
  // 4: alpha/gamma share a URI.
  auto a3 = res("alpha:a3", "Inscriptiones Graecae", 1873, "Kirchhoff");
  auto g3 = res("gamma:g3", "Inscriptiones graecae I", 1873, "Kirchhoff");
  a3.identifiers.emplace(IdScheme::uri, "https://example.org/ig");
  g3.identifiers.emplace(IdScheme::uri, "https://example.org/ig");
  // 5: beta/gamma near-duplicates by metadata only.
  auto b4 = res("beta:b4", "Notes on Greek Archives", 2001, "Dupont");
  auto g4 = res("gamma:g4", "Notes on greek archives!", 2001, "Dupont");
  // 6: alpha/beta share a DOI but disagree on the year.
  auto a5 = res("alpha:a5", "Ancient City Studies", 1992, "Bianchi");
  auto b5 = res("beta:b5", "Ancient City Studies", 1993, "Bianchi");
  doi(a5, "10.1000/d5");
  doi(b5, "10.1000/d5");
  // Unique resources; the shared ORCID must not link them.
  auto a6 = res("alpha:a6", "A Survey of Venetian Archives", 2010, "Verdi");
  auto b6 = res("beta:b6", "Medieval Charters", 2011, "Weber");
  auto g6 = res("gamma:g6", "Hellenistic Papyrology", 2012, "Martin");
  a6.identifiers.emplace(IdScheme::orcid, "0000-0001-2345-6789");
  b6.identifiers.emplace(IdScheme::orcid, "0000-0001-2345-6789");
  a6.language = "it";
  b6.language = "de";
  g6.language = "fr";

  alpha.resources = {a1, a2, a3, a5, a6};
  beta.resources = {b1, b2, b4, b5, b6};
  gamma.resources = {g1, g2, g3, g4, g6};

  alpha.citations = {make_citation("alpha:a6", "alpha:a1", "as argued in the survey", Access::open),
                     make_citation("alpha:a6", "alpha:a2"), make_citation("alpha:a1", "alpha:a3")};
  beta.citations = {make_citation("beta:b6", "beta:b1", std::string(kSentinel) + " beta restricted", Access::restricted),
                    make_citation("beta:b6", "beta:b4"), make_citation("beta:b1", "beta:b5")};
  gamma.citations = {make_citation("gamma:g6", "gamma:g1"), make_citation("gamma:g6", "gamma:g4"),
                     make_citation("gamma:g3", "gamma:g2")};
  return {alpha, beta, gamma};
}

std::string federation_nt(const Federation& fed) { return export_nt(fed.snapshot()->index); }

}  // namespace huci::testkit
