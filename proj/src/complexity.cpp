#include "tracekg/complexity.hpp"

#include <algorithm>

namespace tracekg {

const std::array<const char*, MetricVector::kCount>& MetricVector::names() {
    static const std::array<const char*, kCount> names = {
        "length_tokens", "entity_count", "relation_count", "entity_density", "relation_density",
        "alias",         "connectivity", "span",           "crossing",
    };
    return names;
}

std::array<double, MetricVector::kCount> MetricVector::values() const {
    return {
        static_cast<double>(base.length_tokens),
        static_cast<double>(base.entity_count),
        static_cast<double>(base.relation_count),
        base.entity_density,
        base.relation_density,
        static_cast<double>(graph.alias_stat),
        graph.connectivity_stat,
        graph.span_stat,
        static_cast<double>(graph.crossing_stat),
    };
}

double percentile_rank(std::span<const double> values, double v) {
    if (values.empty()) throw ValueAbsent("percentile_rank over an empty list");
    std::size_t less = 0;
    std::size_t equal = 0;
    for (double x : values) {
        if (x < v) ++less;
        else if (x == v) ++equal;
    }
    if (equal == 0) throw ValueAbsent("value is not an element of the list");
    return (static_cast<double>(less) + 0.5 * static_cast<double>(equal)) /
           static_cast<double>(values.size());
}

namespace {

// Entities ordered by first mention of their name in the article; entities
// never mentioned sort to the end. Returns name -> position.
std::map<std::string, std::size_t> text_order_positions(const AlignmentPair& pair) {
    struct Mention {
        std::size_t offset;
        std::size_t tie;
        const std::string* name;
    };
    std::vector<Mention> mentions;
    mentions.reserve(pair.graph.entities().size());
    for (std::size_t i = 0; i < pair.graph.entities().size(); ++i) {
        const std::string& name = pair.graph.entities()[i].name;
        std::size_t at = pair.article.text.find(name);
        if (at == std::string::npos) at = pair.article.text.size();
        mentions.push_back({at, i, &name});
    }
    std::sort(mentions.begin(), mentions.end(), [](const Mention& a, const Mention& b) {
        if (a.offset != b.offset) return a.offset < b.offset;
        return a.tie < b.tie;
    });
    std::map<std::string, std::size_t> positions;
    for (std::size_t rank = 0; rank < mentions.size(); ++rank) {
        positions[*mentions[rank].name] = rank;
    }
    return positions;
}

std::size_t crossing_count(const AlignmentPair& pair) {
    auto positions = text_order_positions(pair);
    struct Interval {
        std::size_t lo;
        std::size_t hi;
    };
    std::vector<Interval> intervals;
    intervals.reserve(pair.graph.relations().size());
    for (const Relation& r : pair.graph.relations()) {
        std::size_t a = positions.at(r.sub);
        std::size_t b = positions.at(r.obj);
        intervals.push_back({std::min(a, b), std::max(a, b)});
    }
    std::size_t crossings = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        for (std::size_t j = i + 1; j < intervals.size(); ++j) {
            const auto& x = intervals[i];
            const auto& y = intervals[j];
            // Proper interleaving: a < c < b < d in either orientation.
            if ((x.lo < y.lo && y.lo < x.hi && x.hi < y.hi) ||
                (y.lo < x.lo && x.lo < y.hi && y.hi < x.hi)) {
                ++crossings;
            }
        }
    }
    return crossings;
}

}  // namespace

MetricVector compute_metrics(const AlignmentPair& pair) {
    MetricVector m;
    m.base.length_tokens = pair.article.token_count;
    m.base.entity_count = pair.graph.entities().size();
    m.base.relation_count = pair.graph.relations().size();
    const double tokens = static_cast<double>(m.base.length_tokens);
    m.base.entity_density = tokens > 0 ? static_cast<double>(m.base.entity_count) / tokens : 0.0;
    m.base.relation_density = tokens > 0 ? static_cast<double>(m.base.relation_count) / tokens : 0.0;

    for (const Entity& e : pair.graph.entities()) {
        if (!e.alias.empty()) ++m.graph.alias_stat;
    }
    if (!pair.graph.entities().empty()) {
        m.graph.connectivity_stat = 2.0 * static_cast<double>(m.base.relation_count) /
                                    static_cast<double>(m.base.entity_count);
    }
    std::size_t anchored = 0;
    double span_total = 0.0;
    for (const Relation& r : pair.graph.relations()) {
        if (r.raw_text_start && r.raw_text_end && *r.raw_text_start < *r.raw_text_end) {
            ++anchored;
            span_total += static_cast<double>(*r.raw_text_end - *r.raw_text_start);
        }
    }
    if (anchored > 0) m.graph.span_stat = span_total / static_cast<double>(anchored);
    m.graph.crossing_stat = crossing_count(pair);
    return m;
}

std::vector<ComplexityScore> score_metric_vectors(const std::vector<MetricVector>& metrics,
                                                  const std::vector<std::string>& article_ids) {
    if (metrics.size() != article_ids.size()) {
        throw std::invalid_argument("metrics and article_ids must be the same length");
    }
    if (metrics.empty()) throw std::invalid_argument("cannot score an empty corpus");

    const auto& names = MetricVector::names();
    std::array<std::vector<double>, MetricVector::kCount> columns;
    for (auto& col : columns) col.reserve(metrics.size());
    for (const MetricVector& m : metrics) {
        auto row = m.values();
        for (std::size_t k = 0; k < MetricVector::kCount; ++k) columns[k].push_back(row[k]);
    }

    std::vector<ComplexityScore> out;
    out.reserve(metrics.size());
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        ComplexityScore score;
        score.article_id = article_ids[i];
        auto row = metrics[i].values();
        double base_sum = 0.0;
        double graph_sum = 0.0;
        for (std::size_t k = 0; k < MetricVector::kCount; ++k) {
            double rank = percentile_rank(columns[k], row[k]);
            score.breakdown[names[k]] = rank;
            score.metrics[names[k]] = row[k];
            if (k < 5) base_sum += rank;
            else graph_sum += rank;
        }
        score.c_base = base_sum / 5.0;
        score.c_graph = graph_sum / 4.0;
        score.c_article = (score.c_base + score.c_graph) / 2.0;
        out.push_back(std::move(score));
    }
    return out;
}

std::vector<ComplexityScore> score_corpus(std::span<const AlignmentPair> pairs) {
    std::vector<MetricVector> metrics;
    std::vector<std::string> ids;
    metrics.reserve(pairs.size());
    ids.reserve(pairs.size());
    for (const AlignmentPair& pair : pairs) {
        metrics.push_back(compute_metrics(pair));
        ids.push_back(pair.article.id);
    }
    return score_metric_vectors(metrics, ids);
}

std::vector<std::string> order_corpus(const std::vector<ComplexityScore>& scores) {
    std::vector<const ComplexityScore*> sorted;
    sorted.reserve(scores.size());
    for (const auto& s : scores) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](const ComplexityScore* a, const ComplexityScore* b) {
        if (a->c_article != b->c_article) return a->c_article < b->c_article;
        return a->article_id < b->article_id;
    });
    std::vector<std::string> ids;
    ids.reserve(sorted.size());
    for (const auto* s : sorted) ids.push_back(s->article_id);
    return ids;
}

}  // namespace tracekg
