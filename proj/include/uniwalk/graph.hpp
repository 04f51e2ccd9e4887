#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "uniwalk/types.hpp"

namespace uniwalk {

/// Weighted undirected graph over entities. Rating edges carry the observed
/// rating as weight and connect one user with one item; social edges carry
/// the social weight c and connect two users. Adjacency covers the full
/// entity-id space of the index used at construction; entities that end up
/// with no edge are not part of the graph (degree 0, excluded from walks).
class UnifiedGraph {
 public:
  struct Edge {
    EntityId neighbor;
    double weight;
    LinkKind kind;
  };

  UnifiedGraph() = default;
  UnifiedGraph(std::size_t entity_count, double min_rating, double max_rating,
               double social_weight)
      : adjacency_(entity_count),
        min_rating_(min_rating),
        max_rating_(max_rating),
        social_weight_(social_weight) {}

  void add_edge(EntityId a, EntityId b, double weight, LinkKind kind) {
    adjacency_[static_cast<std::size_t>(a)].push_back({b, weight, kind});
    adjacency_[static_cast<std::size_t>(b)].push_back({a, weight, kind});
    ++edge_count_;
  }

  std::size_t entity_count() const { return adjacency_.size(); }
  std::size_t degree(EntityId v) const { return adjacency_[static_cast<std::size_t>(v)].size(); }
  std::span<const Edge> edges(EntityId v) const { return adjacency_[static_cast<std::size_t>(v)]; }

  /// Number of entities with degree >= 1.
  std::size_t node_count() const {
    std::size_t n = 0;
    for (const auto& a : adjacency_)
      if (!a.empty()) ++n;
    return n;
  }

  /// Undirected edge count.
  std::size_t edge_count() const { return edge_count_; }

  /// Ids of all nodes with degree >= 1, ascending.
  std::vector<EntityId> active_nodes() const {
    std::vector<EntityId> nodes;
    nodes.reserve(adjacency_.size());
    for (std::size_t v = 0; v < adjacency_.size(); ++v)
      if (!adjacency_[v].empty()) nodes.push_back(static_cast<EntityId>(v));
    return nodes;
  }

  double min_rating() const { return min_rating_; }
  double max_rating() const { return max_rating_; }
  double social_weight() const { return social_weight_; }

 private:
  std::vector<std::vector<Edge>> adjacency_;
  std::size_t edge_count_ = 0;
  double min_rating_ = 0.0;
  double max_rating_ = 0.0;
  double social_weight_ = 0.0;
};

/// Builds the unified graph: one Score edge per rating (weight = rating) and
/// one Social edge per trust pair (weight = c). min/max ratings are taken
/// from `stats` and drive the negative-walk weight complement.
/// Throws ArgumentError for c <= 0 or ids missing from the index.
UnifiedGraph build_unified_graph(const std::vector<RatingRecord>& ratings,
                                 const std::vector<SocialEdge>& social, double c,
                                 const EntityIndex& index, const DatasetStats& stats);

/// Per-node sampling distribution over neighbors for one walk kind.
///
/// Positive:   p(w|v) proportional to the edge weight.
/// Negative:   p(w|v) proportional to (minR + maxR - weight) for Score edges
///             and to the weight for Social edges.
/// Unweighted: p(w|v) = 1 / deg(v).
///
/// A node whose Negative weights are all zero falls back to uniform.
/// Sampling is O(log deg) via binary search on cumulative weights.
class TransitionTable {
 public:
  TransitionTable(const UnifiedGraph& graph, WalkKind kind);

  WalkKind kind() const { return kind_; }

  /// Probability of the edge at adjacency position `edge_index` of node v.
  double probability(EntityId v, std::size_t edge_index) const;

  /// All neighbor probabilities of v, in adjacency order.
  std::vector<double> probabilities(EntityId v) const;

  /// Draws the next node from v's distribution. v must have degree >= 1.
  EntityId sample(const UnifiedGraph& graph, EntityId v, std::mt19937_64& rng) const;

 private:
  WalkKind kind_;
  std::vector<std::vector<double>> cumulative_;  // aligned with graph adjacency
};

TransitionTable transition_table(const UnifiedGraph& graph, WalkKind kind);

/// Lazily built, cached tables for the three walk kinds. Build happens on
/// first access; afterwards tables are immutable and safe to share.
class TransitionTableCache {
 public:
  explicit TransitionTableCache(const UnifiedGraph& graph) : graph_(graph) {}

  const TransitionTable& get(WalkKind kind) {
    auto& slot = tables_[static_cast<std::size_t>(kind)];
    if (!slot) slot.emplace(graph_, kind);
    return *slot;
  }

 private:
  const UnifiedGraph& graph_;
  std::array<std::optional<TransitionTable>, 3> tables_;
};

}  // namespace uniwalk
