#pragma once

#include <array>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tracekg/graph.hpp"

namespace tracekg {

struct ValueAbsent : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BaseMetrics {
    std::size_t length_tokens = 0;
    std::size_t entity_count = 0;
    std::size_t relation_count = 0;
    double entity_density = 0.0;
    double relation_density = 0.0;
};

struct GraphMetrics {
    std::size_t alias_stat = 0;       // entities with at least one alias
    double connectivity_stat = 0.0;   // mean entity degree, 2|R|/|E|
    double span_stat = 0.0;           // mean anchored span length
    std::size_t crossing_stat = 0;    // interleaving edge pairs in text order
};

/// The nine per-article statistics, in ranking order.
struct MetricVector {
    BaseMetrics base;
    GraphMetrics graph;

    static constexpr std::size_t kCount = 9;
    static const std::array<const char*, kCount>& names();
    std::array<double, kCount> values() const;
};

struct ComplexityScore {
    std::string article_id;
    double c_base = 0.0;
    double c_graph = 0.0;
    double c_article = 0.0;
    std::map<std::string, double> breakdown;  // metric name -> percentile rank
    std::map<std::string, double> metrics;    // metric name -> raw value

    bool operator==(const ComplexityScore&) const = default;
};

/// Mid-rank percentile: (count_less + 0.5 * count_equal) / n.
/// Throws ValueAbsent when v does not occur in values.
double percentile_rank(std::span<const double> values, double v);

MetricVector compute_metrics(const AlignmentPair& pair);

/// Ranking core over precomputed metric vectors; exposed separately so the
/// rank-then-average step can be checked against an independent oracle.
std::vector<ComplexityScore> score_metric_vectors(const std::vector<MetricVector>& metrics,
                                                  const std::vector<std::string>& article_ids);

std::vector<ComplexityScore> score_corpus(std::span<const AlignmentPair> pairs);

/// Article ids ascending by c_article; ties broken lexicographically by id.
std::vector<std::string> order_corpus(const std::vector<ComplexityScore>& scores);

}  // namespace tracekg
