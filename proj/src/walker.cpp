#include "uniwalk/walker.hpp"

#include <string>

#include "uniwalk/error.hpp"

namespace uniwalk {

void sample_walk_into(const UnifiedGraph& graph, const TransitionTable& table, EntityId start,
                      int l, std::mt19937_64& rng, Walk& out) {
  if (l < 2) throw ArgumentError("walk length must be at least 2, got " + std::to_string(l));
  if (graph.degree(start) == 0)
    throw ArgumentError("cannot start a walk at isolated node " + std::to_string(start));
  out.kind = table.kind();
  out.nodes.clear();
  out.nodes.reserve(static_cast<std::size_t>(l));
  EntityId current = start;
  out.nodes.push_back(current);
  for (int step = 1; step < l; ++step) {
    current = table.sample(graph, current, rng);
    out.nodes.push_back(current);
  }
}

Walk sample_walk(const UnifiedGraph& graph, const TransitionTable& table, EntityId start,
                 int l, std::mt19937_64& rng) {
  Walk walk;
  sample_walk_into(graph, table, start, l, rng, walk);
  return walk;
}

std::vector<Walk> generate_walks(const UnifiedGraph& graph, const TransitionTable& table,
                                 int walks_per_node, int l, std::uint64_t seed) {
  std::vector<Walk> walks;
  for_each_walk(graph, table, walks_per_node, l, seed,
                [&](const Walk& w) { walks.push_back(w); });
  return walks;
}

void write_walks(std::ostream& out, const std::vector<Walk>& walks, const EntityIndex& index) {
  for (const auto& walk : walks) {
    out << to_string(walk.kind);
    for (EntityId v : walk.nodes) out << ' ' << index.external_id(v);
    out << '\n';
  }
}

}  // namespace uniwalk
