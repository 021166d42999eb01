#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "huci/model.hpp"
#include "huci/resolution.hpp"

namespace huci {

using Json = nlohmann::ordered_json;

enum class CoCitationScope { publication, proximal };

std::optional<CoCitationScope> parse_cocitation_scope(std::string_view s) noexcept;

/// Read-only queries over an immutable index snapshot.
class QueryEngine {
 public:
  explicit QueryEngine(std::shared_ptr<const CitationIndex> index,
                       std::shared_ptr<const ClusterMap> clusters = nullptr);

  /// Accepts an index id, any clustered source id, or "scheme:value" for an
  /// identifier held by an index resource. Throws unknown_resource.
  std::string resolve(std::string_view id) const;

  std::vector<std::string> backward_chain(std::string_view id) const;
  std::vector<std::string> forward_chain(std::string_view id) const;
  std::map<std::string, std::size_t> co_citations(std::string_view id, CoCitationScope scope) const;
  std::size_t citation_count(std::string_view id, FrbrLevel level) const;
  /// Ids whose normalized title contains the normalized query, sorted by id.
  std::vector<std::string> search(std::string_view title, std::size_t limit = 100) const;

  const CitationIndex& index() const { return *index_; }

 private:
  std::shared_ptr<const CitationIndex> index_;
  std::shared_ptr<const ClusterMap> clusters_;
  std::map<std::string, std::set<std::string>> cites_;     // citing -> cited
  std::map<std::string, std::set<std::string>> cited_by_;  // cited -> citing
  std::map<std::string, std::vector<const Citation*>> by_citing_;
  std::map<std::string, std::string> identifier_index_;  // "scheme:value" -> id
  std::vector<std::pair<std::string, std::string>> titles_;  // (id, normalized title)
};

struct CoverageReport {
  std::size_t resource_count = 0;
  std::map<std::string, double> language_shares;
  std::map<std::string, double> language_deltas;
  double tvd = 0;
  std::map<std::string, std::size_t> typology_counts;
  std::map<std::int64_t, std::size_t> year_histogram;
  std::map<std::string, std::size_t> collection_counts;

  Json to_json() const;
};

/// {en:0.30, it:0.25, fr:0.20, de:0.20, other:0.05}.
const std::map<std::string, double>& default_reference_distribution();
std::map<std::string, double> reference_from_json(const Json& j);  // throws invalid_reference_distribution

/// Decade bucket floor(year/10)*10, also for negative years.
std::int64_t decade_of(std::int64_t year) noexcept;

/// Resources without a language count as "und". When the reference has an
/// "other" key, languages it does not list are folded into "other".
CoverageReport coverage_report(const CitationIndex& index, const std::map<std::string, double>& reference);

struct CapacityParams {
  double total_articles_per_year = 0;
  double ah_fraction = 0;
  std::int64_t years = 0;
  double corpus_bytes = 0;
  double corpus_articles = 0;
  double corpus_triples = 0;
  double corpus_resources = 0;

  void validate() const;  // throws invalid_params
  static CapacityParams from_json(const Json& j);
};

struct CapacityEstimate {
  double annual_articles = 0;
  double bytes_per_article = 0;
  double total_bytes = 0;
  double triples_per_resource = 0;
  double total_triples = 0;

  Json to_json() const;
};

CapacityEstimate estimate_capacity(const CapacityParams& params);

/// Four significant figures in scientific form: 3e10 -> "3.000e10".
std::string four_significant(double value);

}  // namespace huci
