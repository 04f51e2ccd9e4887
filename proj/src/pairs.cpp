#include "uniwalk/pairs.hpp"

#include <algorithm>

namespace uniwalk {

RatingLookup::RatingLookup(const std::vector<RatingRecord>& ratings, const EntityIndex& index) {
  map_.reserve(ratings.size());
  for (const auto& r : ratings) {
    auto u = index.find(EntityKind::User, r.user);
    auto i = index.find(EntityKind::Item, r.item);
    if (u && i) insert(*u, *i, r.value);
  }
}

RatingLookup::RatingLookup(const UnifiedGraph& graph, const EntityIndex& index) {
  for (std::size_t v = 0; v < graph.entity_count(); ++v) {
    const EntityId node = static_cast<EntityId>(v);
    if (index.kind(node) != EntityKind::User) continue;
    for (const auto& edge : graph.edges(node))
      if (edge.kind == LinkKind::Score) insert(node, edge.neighbor, edge.weight);
  }
}

std::vector<ClassifiedPair> extract_pairs(const Walk& walk, int s, const RatingLookup& lookup,
                                          const EntityIndex& index) {
  std::vector<ClassifiedPair> pairs;
  for_each_pair(walk, s, lookup, index, [&](const ClassifiedPair& p) { pairs.push_back(p); });
  return pairs;
}

std::vector<std::pair<std::uint64_t, std::int64_t>> CoocCounts::sorted_pairs() const {
  std::vector<std::pair<std::uint64_t, std::int64_t>> out(pair_count_.begin(),
                                                          pair_count_.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<EntityId, std::int64_t>> CoocCounts::sorted_totals() const {
  std::vector<std::pair<EntityId, std::int64_t>> out(entity_total_.begin(),
                                                     entity_total_.end());
  std::sort(out.begin(), out.end());
  return out;
}

CoocCounts& accumulate_cooccurrence(const std::vector<ClassifiedPair>& pairs,
                                    CoocCounts& counts) {
  for (const auto& p : pairs)
    if (p.set == PairSet::Plus) counts.add_plus(p.a, p.b);
  return counts;
}

}  // namespace uniwalk
