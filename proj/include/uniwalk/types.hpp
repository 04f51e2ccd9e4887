#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uniwalk/error.hpp"
#include "uniwalk/fwd.hpp"

namespace uniwalk {

/// One observed (user, item, rating) triple. Ids are opaque strings.
struct RatingRecord {
  std::string user;
  std::string item;
  double value = 0.0;

  bool operator==(const RatingRecord&) const = default;
};

/// Undirected social edge stored canonically with a < b (lexicographic).
struct SocialEdge {
  std::string a;
  std::string b;

  SocialEdge() = default;
  SocialEdge(std::string x, std::string y) {
    if (y < x) std::swap(x, y);
    a = std::move(x);
    b = std::move(y);
  }

  bool operator==(const SocialEdge&) const = default;
};

/// Summary statistics of a loaded rating set (optionally plus a social set).
///
/// user_count counts distinct users seen anywhere in the input: after
/// parse_ratings it covers raters only; after load_dataset it is the union of
/// raters and social-network users.
struct DatasetStats {
  double min_rating = 0.0;
  double max_rating = 0.0;
  double mean_rating = 0.0;  // mu
  std::size_t rating_count = 0;
  std::size_t user_count = 0;
  std::size_t item_count = 0;
  std::size_t social_edge_count = 0;
};

/// Bijective map between external (id, kind) pairs and dense entity ids.
/// Users and items share one id space; the same external string used as a
/// user and as an item yields two distinct entity ids.
class EntityIndex {
 public:
  EntityId add(EntityKind kind, std::string_view external) {
    auto& map = kind == EntityKind::User ? users_ : items_;
    auto it = map.find(std::string(external));
    if (it != map.end()) return it->second;
    const EntityId id = static_cast<EntityId>(entries_.size());
    entries_.push_back({std::string(external), kind});
    map.emplace(std::string(external), id);
    return id;
  }

  std::optional<EntityId> find(EntityKind kind, std::string_view external) const {
    const auto& map = kind == EntityKind::User ? users_ : items_;
    auto it = map.find(std::string(external));
    if (it == map.end()) return std::nullopt;
    return it->second;
  }

  EntityKind kind(EntityId id) const { return entries_.at(static_cast<std::size_t>(id)).kind; }

  const std::string& external_id(EntityId id) const {
    return entries_.at(static_cast<std::size_t>(id)).external;
  }

  std::size_t size() const { return entries_.size(); }

  std::size_t count(EntityKind kind) const {
    return kind == EntityKind::User ? users_.size() : items_.size();
  }

 private:
  struct Entry {
    std::string external;
    EntityKind kind;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, EntityId> users_;
  std::unordered_map<std::string, EntityId> items_;
};

/// Assignment of rating indices to cross-validation folds.
struct FoldSplit {
  int fold_count = 0;
  std::vector<std::int32_t> assignment;  // rating index -> fold index
  std::uint64_t seed = 0;

  std::size_t fold_size(int fold) const {
    std::size_t n = 0;
    for (auto f : assignment)
      if (f == fold) ++n;
    return n;
  }
};

}  // namespace uniwalk
