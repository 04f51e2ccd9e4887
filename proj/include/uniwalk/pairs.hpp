#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "uniwalk/error.hpp"
#include "uniwalk/graph.hpp"
#include "uniwalk/types.hpp"
#include "uniwalk/walker.hpp"

namespace uniwalk {

/// A (target, neighbor) window pair with its destination set. `rating` is
/// meaningful only for set == R.
struct ClassifiedPair {
  EntityId a = kNoEntity;
  EntityId b = kNoEntity;
  PairSet set = PairSet::R;
  double rating = 0.0;

  bool operator==(const ClassifiedPair&) const = default;
};

/// Observed-rating lookup keyed by (user entity id, item entity id).
class RatingLookup {
 public:
  RatingLookup() = default;

  /// Builds from rating records resolved through the index.
  RatingLookup(const std::vector<RatingRecord>& ratings, const EntityIndex& index);

  /// Builds from the Score edges of a unified graph.
  explicit RatingLookup(const UnifiedGraph& graph, const EntityIndex& index);

  void insert(EntityId user, EntityId item, double rating) {
    map_.emplace(key(user, item), rating);
  }

  std::optional<double> find(EntityId user, EntityId item) const {
    auto it = map_.find(key(user, item));
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return map_.size(); }

 private:
  static std::uint64_t key(EntityId user, EntityId item) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(user)) << 32) |
           static_cast<std::uint32_t>(item);
  }
  std::unordered_map<std::uint64_t, double> map_;
};

/// Streams every window pair of `walk` with radius s through fn, classified
/// by the walk's kind:
///   Unweighted: rated (user, item) pairs -> R, everything else dropped.
///   Positive:   rated (user, item) pairs -> R, everything else -> Plus.
///   Negative:   rated -> R; unrated (user, item) -> Minus; same-kind -> Plus.
/// Rating lookups consult the full training set, not walk adjacency. Window
/// positions holding the target's own entity id are skipped.
template <class Fn>
void for_each_pair(const Walk& walk, int s, const RatingLookup& lookup,
                   const EntityIndex& index, Fn&& fn) {
  if (s < 1) throw ArgumentError("window radius must be at least 1, got " + std::to_string(s));
  const auto& nodes = walk.nodes;
  const int n = static_cast<int>(nodes.size());
  ClassifiedPair pair;
  for (int t = 0; t < n; ++t) {
    const EntityId target = nodes[static_cast<std::size_t>(t)];
    const EntityKind target_kind = index.kind(target);
    const int lo = t - s < 0 ? 0 : t - s;
    const int hi = t + s > n - 1 ? n - 1 : t + s;
    for (int j = lo; j <= hi; ++j) {
      if (j == t) continue;
      const EntityId neighbor = nodes[static_cast<std::size_t>(j)];
      if (neighbor == target) continue;  // revisit within the window
      const EntityKind neighbor_kind = index.kind(neighbor);

      std::optional<double> rating;
      if (target_kind != neighbor_kind) {
        const EntityId user = target_kind == EntityKind::User ? target : neighbor;
        const EntityId item = target_kind == EntityKind::User ? neighbor : target;
        rating = lookup.find(user, item);
      }

      pair.a = target;
      pair.b = neighbor;
      if (rating) {
        pair.set = PairSet::R;
        pair.rating = *rating;
        fn(pair);
        continue;
      }
      pair.rating = 0.0;
      switch (walk.kind) {
        case WalkKind::Unweighted:
          break;  // dropped
        case WalkKind::Positive:
          pair.set = PairSet::Plus;
          fn(pair);
          break;
        case WalkKind::Negative:
          pair.set = target_kind != neighbor_kind ? PairSet::Minus : PairSet::Plus;
          fn(pair);
          break;
      }
    }
  }
}

/// Materialized wrapper over for_each_pair.
std::vector<ClassifiedPair> extract_pairs(const Walk& walk, int s, const RatingLookup& lookup,
                                          const EntityIndex& index);

/// Co-occurrence statistics over Plus pairs: #(v,w) per unordered pair and
/// #v per entity. Backs the similarity score sim(v,w) = #(v,w) / (#v * #w).
class CoocCounts {
 public:
  void add_plus(EntityId v, EntityId w) {
    ++pair_count_[pair_key(v, w)];
    ++entity_total_[v];
    ++entity_total_[w];
  }

  void merge(const CoocCounts& other) {
    for (const auto& [k, n] : other.pair_count_) pair_count_[k] += n;
    for (const auto& [v, n] : other.entity_total_) entity_total_[v] += n;
  }

  std::int64_t pair_count(EntityId v, EntityId w) const {
    auto it = pair_count_.find(pair_key(v, w));
    return it == pair_count_.end() ? 0 : it->second;
  }

  std::int64_t entity_total(EntityId v) const {
    auto it = entity_total_.find(v);
    return it == entity_total_.end() ? 0 : it->second;
  }

  std::size_t pair_entry_count() const { return pair_count_.size(); }
  std::size_t entity_entry_count() const { return entity_total_.size(); }

  /// Entries sorted by key, for serialization and deterministic iteration.
  std::vector<std::pair<std::uint64_t, std::int64_t>> sorted_pairs() const;
  std::vector<std::pair<EntityId, std::int64_t>> sorted_totals() const;

  static std::uint64_t pair_key(EntityId v, EntityId w) {
    auto lo = static_cast<std::uint32_t>(v < w ? v : w);
    auto hi = static_cast<std::uint32_t>(v < w ? w : v);
    return (static_cast<std::uint64_t>(lo) << 32) | hi;
  }

  void insert_pair_entry(std::uint64_t key, std::int64_t count) { pair_count_[key] = count; }
  void insert_total_entry(EntityId v, std::int64_t count) { entity_total_[v] = count; }

  bool operator==(const CoocCounts& other) const {
    return pair_count_ == other.pair_count_ && entity_total_ == other.entity_total_;
  }

 private:
  std::unordered_map<std::uint64_t, std::int64_t> pair_count_;
  std::unordered_map<EntityId, std::int64_t> entity_total_;
};

/// Folds the Plus pairs of `pairs` into `counts`; R and Minus pairs are
/// ignored. Returns `counts` for chaining.
CoocCounts& accumulate_cooccurrence(const std::vector<ClassifiedPair>& pairs,
                                    CoocCounts& counts);

}  // namespace uniwalk
