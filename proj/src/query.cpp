#include "huci/query.hpp"

#include <cmath>
#include <cstdio>

#include "huci/error.hpp"
#include "huci_builtin_data.hpp"

namespace huci {

namespace {

const std::string& map_or_self(const std::string& id, FrbrLevel level, const ResourceStore& store) {
  return store.contains(id) ? frbr_map(id, level, store) : id;
}

}  // namespace

std::optional<CoCitationScope> parse_cocitation_scope(std::string_view s) noexcept {
  if (s == "publication") return CoCitationScope::publication;
  if (s == "proximal") return CoCitationScope::proximal;
  return std::nullopt;
}

QueryEngine::QueryEngine(std::shared_ptr<const CitationIndex> index, std::shared_ptr<const ClusterMap> clusters)
    : index_(index ? std::move(index) : std::make_shared<const CitationIndex>()), clusters_(std::move(clusters)) {
  for (const auto& [_, c] : index_->citations) {
    cites_[c.citing_id].insert(c.cited_id);
    cited_by_[c.cited_id].insert(c.citing_id);
    by_citing_[c.citing_id].push_back(&c);
  }
  for (const auto& [id, r] : index_->resources) {
    for (const auto& pid : r.identifiers) identifier_index_.emplace(pid.to_string(), id);
    titles_.emplace_back(id, normalize_title(r.title));
  }
}

std::string QueryEngine::resolve(std::string_view id) const {
  const std::string key(id);
  if (index_->resources.contains(key)) return key;
  if (clusters_) {
    if (const auto* cluster = clusters_->cluster_of(key); cluster && index_->resources.contains(*cluster))
      return *cluster;
  }
  try {
    const auto pid = PersistentIdentifier::parse(id);
    if (auto it = identifier_index_.find(pid.to_string()); it != identifier_index_.end()) return it->second;
  } catch (const Error&) {
  }
  throw Error(ErrorCode::unknown_resource, key);
}

std::vector<std::string> QueryEngine::backward_chain(std::string_view id) const {
  const auto it = cites_.find(resolve(id));
  if (it == cites_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

std::vector<std::string> QueryEngine::forward_chain(std::string_view id) const {
  const auto it = cited_by_.find(resolve(id));
  if (it == cited_by_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

std::map<std::string, std::size_t> QueryEngine::co_citations(std::string_view id, CoCitationScope scope) const {
  const std::string target = resolve(id);
  std::map<std::string, std::size_t> out;
  const auto citing = cited_by_.find(target);
  if (citing == cited_by_.end()) return out;

  if (scope == CoCitationScope::publication) {
    for (const auto& p : citing->second)
      for (const auto& x : cites_.at(p))
        if (x != target) ++out[x];
    return out;
  }

  auto proximal_group = [](const Citation& c) -> const std::string* {
    if (!c.context || !c.context->excerpt || c.context->excerpt->empty()) return nullptr;
    if (c.context->window != ContextWindow::paragraph || !c.context->group) return nullptr;
    return &*c.context->group;
  };
  for (const auto& p : citing->second) {
    const auto& list = by_citing_.at(p);
    std::set<std::string> groups;
    for (const auto* c : list)
      if (c->cited_id == target)
        if (const auto* g = proximal_group(*c)) groups.insert(*g);
    if (groups.empty()) continue;
    std::set<std::string> siblings;
    for (const auto* c : list) {
      if (c->cited_id == target) continue;
      if (const auto* g = proximal_group(*c); g && groups.contains(*g)) siblings.insert(c->cited_id);
    }
    for (const auto& x : siblings) ++out[x];
  }
  return out;
}

std::size_t QueryEngine::citation_count(std::string_view id, FrbrLevel level) const {
  const auto& store = index_->resources;
  const std::string target = frbr_map(resolve(id), level, store);
  std::set<std::string> citing;
  for (const auto& [_, c] : index_->citations)
    if (map_or_self(c.cited_id, level, store) == target) citing.insert(map_or_self(c.citing_id, level, store));
  return citing.size();
}

std::vector<std::string> QueryEngine::search(std::string_view title, std::size_t limit) const {
  const std::string needle = normalize_title(title);
  std::vector<std::string> out;
  for (const auto& [id, normalized] : titles_) {
    if (out.size() >= limit) break;
    if (normalized.find(needle) != std::string::npos) out.push_back(id);
  }
  return out;
}

// ---------------------------------------------------------------------------

const std::map<std::string, double>& default_reference_distribution() {
  static const std::map<std::string, double> kReference = reference_from_json(Json::parse(builtin_data::kReferenceLanguages));
  return kReference;
}

std::map<std::string, double> reference_from_json(const Json& j) {
  if (!j.is_object() || j.empty()) throw Error(ErrorCode::invalid_reference_distribution, "expected a non-empty object");
  std::map<std::string, double> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw Error(ErrorCode::invalid_reference_distribution, "share for " + k + " is not a number");
    out[k] = v.get<double>();
  }
  return out;
}

std::int64_t decade_of(std::int64_t year) noexcept {
  std::int64_t q = year / 10;
  if (year % 10 != 0 && year < 0) --q;
  return q * 10;
}

CoverageReport coverage_report(const CitationIndex& index, const std::map<std::string, double>& reference) {
  double sum = 0;
  for (const auto& [lang, share] : reference) {
    if (!(share >= 0) || share > 1)
      throw Error(ErrorCode::invalid_reference_distribution, "share for " + lang + " outside [0,1]");
    sum += share;
  }
  if (reference.empty() || std::abs(sum - 1.0) > 1e-6)
    throw Error(ErrorCode::invalid_reference_distribution, "shares must sum to 1");

  const bool fold = reference.contains("other");
  CoverageReport report;
  report.resource_count = index.resources.size();
  std::map<std::string, std::size_t> language_counts;
  for (const auto& [_, r] : index.resources) {
    std::string lang = r.language.value_or("und");
    if (fold && !reference.contains(lang)) lang = "other";
    ++language_counts[lang];
    ++report.typology_counts[std::string(to_string(r.typology))];
    if (r.year) ++report.year_histogram[decade_of(*r.year)];
    for (const auto& tag : r.collections) ++report.collection_counts[tag];
  }
  for (const auto& [lang, n] : language_counts)
    report.language_shares[lang] = static_cast<double>(n) / static_cast<double>(report.resource_count);

  std::set<std::string> keys;
  for (const auto& [k, _] : reference) keys.insert(k);
  for (const auto& [k, _] : report.language_shares) keys.insert(k);
  double l1 = 0;
  for (const auto& k : keys) {
    const auto s = report.language_shares.find(k);
    const auto r = reference.find(k);
    const double delta = (s == report.language_shares.end() ? 0.0 : s->second) - (r == reference.end() ? 0.0 : r->second);
    report.language_deltas[k] = delta;
    l1 += std::abs(delta);
  }
  report.tvd = 0.5 * l1;
  return report;
}

Json CoverageReport::to_json() const {
  Json j;
  j["resource_count"] = resource_count;
  j["language_shares"] = Json::object();
  for (const auto& [k, v] : language_shares) j["language_shares"][k] = v;
  j["language_deltas"] = Json::object();
  for (const auto& [k, v] : language_deltas) j["language_deltas"][k] = v;
  j["tvd"] = tvd;
  j["typology_counts"] = Json::object();
  for (const auto& [k, v] : typology_counts) j["typology_counts"][k] = v;
  j["year_histogram"] = Json::object();
  for (const auto& [k, v] : year_histogram) j["year_histogram"][std::to_string(k)] = v;
  j["collection_counts"] = Json::object();
  for (const auto& [k, v] : collection_counts) j["collection_counts"][k] = v;
  return j;
}

// ---------------------------------------------------------------------------

void CapacityParams::validate() const {
  if (!(total_articles_per_year >= 0)) throw Error(ErrorCode::invalid_params, "total_articles_per_year must be >= 0");
  if (!(ah_fraction >= 0 && ah_fraction <= 1)) throw Error(ErrorCode::invalid_params, "ah_fraction must lie in [0,1]");
  if (years <= 0) throw Error(ErrorCode::invalid_params, "years must be positive");
  if (!(corpus_bytes >= 0) || !(corpus_triples >= 0))
    throw Error(ErrorCode::invalid_params, "corpus sizes must be >= 0");
  if (!(corpus_articles > 0) || !(corpus_resources > 0))
    throw Error(ErrorCode::invalid_params, "corpus_articles and corpus_resources must be positive");
}

CapacityParams CapacityParams::from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_params, "expected an object");
  auto number = [&j](const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw Error(ErrorCode::invalid_params, std::string("missing number ") + key);
    return j[key].get<double>();
  };
  CapacityParams p;
  p.total_articles_per_year = number("total_articles_per_year");
  p.ah_fraction = number("ah_fraction");
  if (!j.contains("years") || !j["years"].is_number_integer())
    throw Error(ErrorCode::invalid_params, "years must be an integer");
  p.years = j["years"].get<std::int64_t>();
  p.corpus_bytes = number("corpus_bytes");
  p.corpus_articles = number("corpus_articles");
  p.corpus_triples = number("corpus_triples");
  p.corpus_resources = number("corpus_resources");
  p.validate();
  return p;
}

CapacityEstimate estimate_capacity(const CapacityParams& p) {
  p.validate();
  CapacityEstimate e;
  e.annual_articles = p.total_articles_per_year * p.ah_fraction;
  e.bytes_per_article = p.corpus_bytes / p.corpus_articles;
  e.total_bytes = e.annual_articles * static_cast<double>(p.years) * e.bytes_per_article;
  e.triples_per_resource = p.corpus_triples / p.corpus_resources;
  e.total_triples = e.annual_articles * static_cast<double>(p.years) * e.triples_per_resource;
  return e;
}

Json CapacityEstimate::to_json() const {
  Json j;
  j["annual_articles"] = four_significant(annual_articles);
  j["bytes_per_article"] = four_significant(bytes_per_article);
  j["total_bytes"] = four_significant(total_bytes);
  j["triples_per_resource"] = four_significant(triples_per_resource);
  j["total_triples"] = four_significant(total_triples);
  Json raw;
  raw["annual_articles"] = annual_articles;
  raw["bytes_per_article"] = bytes_per_article;
  raw["total_bytes"] = total_bytes;
  raw["triples_per_resource"] = triples_per_resource;
  raw["total_triples"] = total_triples;
  j["exact"] = std::move(raw);
  return j;
}

std::string four_significant(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", value);
  std::string s(buf);
  const auto e = s.find('e');
  if (e == std::string::npos) return s;
  std::string mantissa = s.substr(0, e);
  std::string exponent = s.substr(e + 1);
  bool negative = false;
  if (!exponent.empty() && (exponent[0] == '+' || exponent[0] == '-')) {
    negative = exponent[0] == '-';
    exponent.erase(0, 1);
  }
  exponent.erase(0, std::min(exponent.find_first_not_of('0'), exponent.size() - 1));
  return mantissa + "e" + (negative ? "-" : "") + exponent;
}

}  // namespace huci
