#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "uniwalk/error.hpp"
#include "uniwalk/graph.hpp"
#include "uniwalk/rng.hpp"
#include "uniwalk/types.hpp"

namespace uniwalk {

/// A node sequence produced by one random walk. nodes.front() is the start
/// node; consecutive nodes are always adjacent in the graph.
struct Walk {
  WalkKind kind = WalkKind::Unweighted;
  std::vector<EntityId> nodes;
};

/// Seed for the walk identified by (node, repetition) within one generation
/// round. Rounds with different base seeds or kinds produce independent
/// streams.
inline std::uint64_t walk_seed(std::uint64_t base_seed, WalkKind kind, EntityId node,
                               int repetition) {
  return mix_seed(base_seed, static_cast<std::uint64_t>(kind),
                  static_cast<std::uint64_t>(node), static_cast<std::uint64_t>(repetition));
}

/// Samples one walk of exactly l nodes starting at `start`, stepping with the
/// table's transition distribution. Throws ArgumentError for l < 2 or an
/// isolated start node.
Walk sample_walk(const UnifiedGraph& graph, const TransitionTable& table, EntityId start,
                 int l, std::mt19937_64& rng);

/// In-place variant reusing the Walk's node buffer (hot path).
void sample_walk_into(const UnifiedGraph& graph, const TransitionTable& table, EntityId start,
                      int l, std::mt19937_64& rng, Walk& out);

/// Invokes fn for walks_per_node walks from every node of degree >= 1, in
/// node-major, repetition-minor order. Each walk runs on its own generator
/// seeded by walk_seed(seed, kind, node, repetition), so the stream is
/// deterministic and independent of how calls are scheduled.
template <class Fn>
void for_each_walk(const UnifiedGraph& graph, const TransitionTable& table, int walks_per_node,
                   int l, std::uint64_t seed, Fn&& fn) {
  if (walks_per_node < 1)
    throw ArgumentError("walks per node must be at least 1, got " +
                        std::to_string(walks_per_node));
  Walk walk;
  for (std::size_t v = 0; v < graph.entity_count(); ++v) {
    const EntityId node = static_cast<EntityId>(v);
    if (graph.degree(node) == 0) continue;
    for (int rep = 0; rep < walks_per_node; ++rep) {
      std::mt19937_64 rng(walk_seed(seed, table.kind(), node, rep));
      sample_walk_into(graph, table, node, l, rng, walk);
      fn(walk);
    }
  }
}

/// Materialized convenience wrapper over for_each_walk.
std::vector<Walk> generate_walks(const UnifiedGraph& graph, const TransitionTable& table,
                                 int walks_per_node, int l, std::uint64_t seed);

/// Debug dump: one walk per line, kind tag then external ids, space separated.
void write_walks(std::ostream& out, const std::vector<Walk>& walks, const EntityIndex& index);

}  // namespace uniwalk
