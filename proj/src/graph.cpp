#include "uniwalk/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uniwalk/error.hpp"
#include "uniwalk/rng.hpp"

namespace uniwalk {

UnifiedGraph build_unified_graph(const std::vector<RatingRecord>& ratings,
                                 const std::vector<SocialEdge>& social, double c,
                                 const EntityIndex& index, const DatasetStats& stats) {
  if (!(c > 0.0)) throw ArgumentError("social edge weight c must be positive, got " + std::to_string(c));

  UnifiedGraph graph(index.size(), stats.min_rating, stats.max_rating, c);
  for (const auto& r : ratings) {
    auto u = index.find(EntityKind::User, r.user);
    auto i = index.find(EntityKind::Item, r.item);
    if (!u) throw ArgumentError("rating references unknown user '" + r.user + "'");
    if (!i) throw ArgumentError("rating references unknown item '" + r.item + "'");
    graph.add_edge(*u, *i, r.value, LinkKind::Score);
  }
  for (const auto& e : social) {
    auto a = index.find(EntityKind::User, e.a);
    auto b = index.find(EntityKind::User, e.b);
    if (!a) throw ArgumentError("trust edge references unknown user '" + e.a + "'");
    if (!b) throw ArgumentError("trust edge references unknown user '" + e.b + "'");
    graph.add_edge(*a, *b, c, LinkKind::Social);
  }
  return graph;
}

namespace {

double sampling_weight(const UnifiedGraph::Edge& edge, WalkKind kind, double min_rating,
                       double max_rating) {
  switch (kind) {
    case WalkKind::Positive:
      return edge.weight;
    case WalkKind::Negative:
      if (edge.kind == LinkKind::Score)
        return std::max(0.0, min_rating + max_rating - edge.weight);
      return edge.weight;
    case WalkKind::Unweighted:
      return 1.0;
  }
  return 1.0;
}

}  // namespace

TransitionTable::TransitionTable(const UnifiedGraph& graph, WalkKind kind) : kind_(kind) {
  cumulative_.resize(graph.entity_count());
  for (std::size_t v = 0; v < graph.entity_count(); ++v) {
    auto edges = graph.edges(static_cast<EntityId>(v));
    if (edges.empty()) continue;
    auto& cum = cumulative_[v];
    cum.resize(edges.size());
    double total = 0.0;
    double comp = 0.0;  // Kahan, keeps cumulative sums reproducible
    for (std::size_t e = 0; e < edges.size(); ++e) {
      double w = sampling_weight(edges[e], kind, graph.min_rating(), graph.max_rating());
      double y = w - comp;
      double t = total + y;
      comp = (t - total) - y;
      total = t;
      cum[e] = total;
    }
    if (!(total > 0.0)) {
      // Degenerate distribution (possible for Negative when every rating
      // equals maxR + minR - minR); fall back to uniform.
      for (std::size_t e = 0; e < edges.size(); ++e)
        cum[e] = static_cast<double>(e + 1);
    }
  }
}

double TransitionTable::probability(EntityId v, std::size_t edge_index) const {
  const auto& cum = cumulative_[static_cast<std::size_t>(v)];
  double total = cum.back();
  double lo = edge_index == 0 ? 0.0 : cum[edge_index - 1];
  return (cum[edge_index] - lo) / total;
}

std::vector<double> TransitionTable::probabilities(EntityId v) const {
  const auto& cum = cumulative_[static_cast<std::size_t>(v)];
  std::vector<double> probs(cum.size());
  double total = cum.back();
  double lo = 0.0;
  for (std::size_t e = 0; e < cum.size(); ++e) {
    probs[e] = (cum[e] - lo) / total;
    lo = cum[e];
  }
  return probs;
}

EntityId TransitionTable::sample(const UnifiedGraph& graph, EntityId v,
                                 std::mt19937_64& rng) const {
  const auto& cum = cumulative_[static_cast<std::size_t>(v)];
  double target = uniform_unit(rng) * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), target);
  if (it == cum.end()) --it;  // guards target == total under rounding
  std::size_t e = static_cast<std::size_t>(it - cum.begin());
  return graph.edges(v)[e].neighbor;
}

TransitionTable transition_table(const UnifiedGraph& graph, WalkKind kind) {
  return TransitionTable(graph, kind);
}

}  // namespace uniwalk
