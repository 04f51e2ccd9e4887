#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uniwalk/model.hpp"
#include "uniwalk/pairs.hpp"
#include "uniwalk/types.hpp"

namespace uniwalk {

/// Training ratings indexed both ways (user -> rated items, item -> raters),
/// lists sorted by counterpart entity id.
class RatingsView {
 public:
  RatingsView(const std::vector<RatingRecord>& ratings, const EntityIndex& index);

  std::span<const std::pair<EntityId, double>> of_user(EntityId u) const {
    return by_user_[static_cast<std::size_t>(u)];
  }
  std::span<const std::pair<EntityId, double>> of_item(EntityId i) const {
    return by_item_[static_cast<std::size_t>(i)];
  }
  std::optional<double> rating(EntityId u, EntityId i) const { return lookup_.find(u, i); }

 private:
  std::vector<std::vector<std::pair<EntityId, double>>> by_user_;
  std::vector<std::vector<std::pair<EntityId, double>>> by_item_;
  RatingLookup lookup_;
};

/// Social adjacency with sorted friend lists.
class SocialView {
 public:
  SocialView(const std::vector<SocialEdge>& social, const EntityIndex& index);

  std::span<const EntityId> friends(EntityId u) const {
    return friends_[static_cast<std::size_t>(u)];
  }
  bool is_friend(EntityId u, EntityId v) const;

 private:
  std::vector<std::vector<EntityId>> friends_;
};

/// mu + b_u + b_i + z_u . z_i with unknown entities contributing nothing;
/// clamped into [min_rating, max_rating] when requested.
double predict(const ModelArtifact& artifact, std::string_view user, std::string_view item,
               bool clamp);

struct ScoredItem {
  EntityId item = kNoEntity;
  double rating = 0.0;
};

struct Recommendations {
  bool user_known = false;
  std::vector<ScoredItem> items;  // rating descending, ties by ascending id
};

/// Ranks the items the user has not rated by predicted rating. An unknown
/// user gets a bias-driven ranking over all items, flagged via user_known.
Recommendations recommend_top_n(const ModelArtifact& artifact, const RatingsView& ratings,
                                std::string_view user, int n, bool clamp = true);

/// Co-occurrence similarity #(v,w) / (#v * #w); 0 when the pair never
/// co-occurred. v == w raises ArgumentError.
double similarity(const CoocCounts& counts, EntityId v, EntityId w);

struct SimilarUser {
  EntityId user = kNoEntity;
  double sim = 0.0;
  bool is_friend = false;
  std::vector<std::pair<EntityId, double>> rated_recommended;  // (item, their rating)
};

/// Reason 1: users most similar to `u` (by co-occurrence similarity) among
/// those who rated at least one recommended item. Only sim > 0 candidates.
std::vector<SimilarUser> explain_similar_users(const CoocCounts& counts,
                                               const RatingsView& ratings,
                                               const SocialView& social, EntityId u,
                                               std::span<const EntityId> recommended,
                                               int k_expl);

struct SimilarItem {
  EntityId item = kNoEntity;
  double sim = 0.0;
  double target_rating = 0.0;  // u's rating of this item
};

struct ItemReason {
  EntityId recommended_item = kNoEntity;
  std::vector<SimilarItem> similar;
};

/// Reason 2: per recommended item, the most similar items among those `u`
/// has rated. Only sim > 0 candidates.
std::vector<ItemReason> explain_similar_items(const CoocCounts& counts,
                                              const RatingsView& ratings, EntityId u,
                                              std::span<const EntityId> recommended,
                                              int k_expl);

struct CommonItemRating {
  EntityId item = kNoEntity;
  double rating_u = 0.0;
  double rating_v = 0.0;
};

struct UserPairMeta {
  std::vector<EntityId> common_friends;
  std::vector<CommonItemRating> common_favorites;  // both rated >= high threshold
  std::vector<CommonItemRating> common_dislikes;   // both rated <= low threshold
};

/// Why users u and v count as similar: mutual friends, shared favorites,
/// shared dislikes.
UserPairMeta meta_explain_user_pair(const RatingsView& ratings, const SocialView& social,
                                    EntityId u, EntityId v, double high_threshold,
                                    double low_threshold);

struct CommonAdmirer {
  EntityId user = kNoEntity;
  double rating_i = 0.0;
  double rating_j = 0.0;
};

struct ItemPairMeta {
  std::vector<CommonAdmirer> common_admirers;  // rated both >= high threshold
};

/// Why items i and j count as similar: users who rated both favorably.
ItemPairMeta meta_explain_item_pair(const RatingsView& ratings, EntityId i, EntityId j,
                                    double high_threshold);

struct ExplainOptions {
  int top_n = 10;
  int k_expl = 5;
  bool clamp = true;
  /// Rating thresholds for the meta-explanations. NaN = (minR + maxR) / 2.
  double high_threshold = std::numeric_limits<double>::quiet_NaN();
  double low_threshold = std::numeric_limits<double>::quiet_NaN();
};

/// Full machine-readable explanation document. All ids are external ids.
struct ExplanationReport {
  struct RecommendedItem {
    std::string item;
    double predicted_rating = 0.0;
    bool operator==(const RecommendedItem&) const = default;
  };
  struct ItemRating {
    std::string item;
    double rating = 0.0;
    bool operator==(const ItemRating&) const = default;
  };
  struct SimilarUserEntry {
    std::string user;
    double sim = 0.0;
    bool is_friend = false;
    std::vector<ItemRating> rated_recommended;
    bool operator==(const SimilarUserEntry&) const = default;
  };
  struct SimilarItemEntry {
    std::string item;
    double sim = 0.0;
    double target_rating = 0.0;
    bool operator==(const SimilarItemEntry&) const = default;
  };
  struct ItemReasonEntry {
    std::string recommended_item;
    std::vector<SimilarItemEntry> similar_items;
    bool operator==(const ItemReasonEntry&) const = default;
  };
  struct CommonRatingEntry {
    std::string item;
    double target_rating = 0.0;
    double other_rating = 0.0;
    bool operator==(const CommonRatingEntry&) const = default;
  };
  struct UserMetaEntry {
    std::string user;
    std::vector<std::string> common_friends;
    std::vector<CommonRatingEntry> common_favorites;
    std::vector<CommonRatingEntry> common_dislikes;
    bool operator==(const UserMetaEntry&) const = default;
  };
  struct AdmirerEntry {
    std::string user;
    double rating_recommended = 0.0;
    double rating_similar = 0.0;
    bool operator==(const AdmirerEntry&) const = default;
  };
  struct ItemMetaEntry {
    std::string recommended_item;
    std::string similar_item;
    std::vector<AdmirerEntry> common_admirers;
    bool operator==(const ItemMetaEntry&) const = default;
  };

  int version = 1;
  std::string target_user;
  bool user_known = false;
  std::vector<RecommendedItem> recommended;
  std::vector<SimilarUserEntry> similar_users;
  std::vector<ItemReasonEntry> item_reasons;
  std::vector<UserMetaEntry> user_meta;
  std::vector<ItemMetaEntry> item_meta;

  bool operator==(const ExplanationReport&) const = default;
};

/// Composes recommendations, both reasons, and both meta-explanation layers
/// for one target user.
ExplanationReport build_explanation_report(const ModelArtifact& artifact,
                                           const RatingsView& ratings, const SocialView& social,
                                           std::string_view user, const ExplainOptions& options);

/// JSON serialization (schema in docs/explanation_schema.md). from_json
/// raises FormatError on malformed documents.
std::string report_to_json(const ExplanationReport& report);
ExplanationReport report_from_json(const std::string& text);

}  // namespace uniwalk
