#include "uniwalk/recommender.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "uniwalk/error.hpp"

namespace uniwalk {

RatingsView::RatingsView(const std::vector<RatingRecord>& ratings, const EntityIndex& index)
    : by_user_(index.size()), by_item_(index.size()) {
  for (const auto& r : ratings) {
    auto u = index.find(EntityKind::User, r.user);
    auto i = index.find(EntityKind::Item, r.item);
    if (!u || !i) continue;
    by_user_[static_cast<std::size_t>(*u)].emplace_back(*i, r.value);
    by_item_[static_cast<std::size_t>(*i)].emplace_back(*u, r.value);
    lookup_.insert(*u, *i, r.value);
  }
  for (auto& list : by_user_) std::sort(list.begin(), list.end());
  for (auto& list : by_item_) std::sort(list.begin(), list.end());
}

SocialView::SocialView(const std::vector<SocialEdge>& social, const EntityIndex& index)
    : friends_(index.size()) {
  for (const auto& e : social) {
    auto a = index.find(EntityKind::User, e.a);
    auto b = index.find(EntityKind::User, e.b);
    if (!a || !b) continue;
    friends_[static_cast<std::size_t>(*a)].push_back(*b);
    friends_[static_cast<std::size_t>(*b)].push_back(*a);
  }
  for (auto& list : friends_) std::sort(list.begin(), list.end());
}

bool SocialView::is_friend(EntityId u, EntityId v) const {
  const auto& list = friends_[static_cast<std::size_t>(u)];
  return std::binary_search(list.begin(), list.end(), v);
}

namespace {

double predict_ids(const ModelParams& model, EntityId u, EntityId i, double min_rating,
                   double max_rating, bool clamp) {
  double value = model.mu;
  if (u != kNoEntity) value += model.bias(u);
  if (i != kNoEntity) value += model.bias(i);
  if (u != kNoEntity && i != kNoEntity)
    value += model.latent.row(u).dot(model.latent.row(i));
  if (clamp) value = std::clamp(value, min_rating, max_rating);
  return value;
}

}  // namespace

double predict(const ModelArtifact& artifact, std::string_view user, std::string_view item,
               bool clamp) {
  const EntityId u = artifact.index.find(EntityKind::User, user).value_or(kNoEntity);
  const EntityId i = artifact.index.find(EntityKind::Item, item).value_or(kNoEntity);
  return predict_ids(artifact.params, u, i, artifact.min_rating, artifact.max_rating, clamp);
}

Recommendations recommend_top_n(const ModelArtifact& artifact, const RatingsView& ratings,
                                std::string_view user, int n, bool clamp) {
  if (n < 1) throw ArgumentError("top-n must be at least 1, got " + std::to_string(n));
  Recommendations out;
  const EntityId u = artifact.index.find(EntityKind::User, user).value_or(kNoEntity);
  out.user_known = u != kNoEntity;

  for (std::size_t v = 0; v < artifact.index.size(); ++v) {
    const EntityId item = static_cast<EntityId>(v);
    if (artifact.index.kind(item) != EntityKind::Item) continue;
    if (u != kNoEntity && ratings.rating(u, item)) continue;  // already rated
    const double score =
        predict_ids(artifact.params, u, item, artifact.min_rating, artifact.max_rating, clamp);
    out.items.push_back({item, score});
  }
  std::sort(out.items.begin(), out.items.end(), [](const ScoredItem& a, const ScoredItem& b) {
    if (a.rating != b.rating) return a.rating > b.rating;
    return a.item < b.item;
  });
  if (out.items.size() > static_cast<std::size_t>(n)) out.items.resize(static_cast<std::size_t>(n));
  return out;
}

double similarity(const CoocCounts& counts, EntityId v, EntityId w) {
  if (v == w) throw ArgumentError("similarity of an entity with itself is undefined");
  const std::int64_t pair = counts.pair_count(v, w);
  if (pair == 0) return 0.0;
  const double tv = static_cast<double>(counts.entity_total(v));
  const double tw = static_cast<double>(counts.entity_total(w));
  return static_cast<double>(pair) / (tv * tw);
}

std::vector<SimilarUser> explain_similar_users(const CoocCounts& counts,
                                               const RatingsView& ratings,
                                               const SocialView& social, EntityId u,
                                               std::span<const EntityId> recommended,
                                               int k_expl) {
  if (k_expl < 1) throw ArgumentError("k-expl must be at least 1, got " + std::to_string(k_expl));
  std::vector<EntityId> candidates;
  for (EntityId item : recommended)
    for (const auto& [rater, rating] : ratings.of_item(item))
      if (rater != u) candidates.push_back(rater);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<SimilarUser> ranked;
  for (EntityId v : candidates) {
    const double sim = similarity(counts, u, v);
    if (sim <= 0.0) continue;
    SimilarUser entry;
    entry.user = v;
    entry.sim = sim;
    entry.is_friend = social.is_friend(u, v);
    for (EntityId item : recommended)
      if (auto r = ratings.rating(v, item)) entry.rated_recommended.emplace_back(item, *r);
    ranked.push_back(std::move(entry));
  }
  std::sort(ranked.begin(), ranked.end(), [](const SimilarUser& a, const SimilarUser& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.user < b.user;
  });
  if (ranked.size() > static_cast<std::size_t>(k_expl))
    ranked.resize(static_cast<std::size_t>(k_expl));
  return ranked;
}

std::vector<ItemReason> explain_similar_items(const CoocCounts& counts,
                                              const RatingsView& ratings, EntityId u,
                                              std::span<const EntityId> recommended,
                                              int k_expl) {
  if (k_expl < 1) throw ArgumentError("k-expl must be at least 1, got " + std::to_string(k_expl));
  std::vector<ItemReason> reasons;
  for (EntityId item : recommended) {
    ItemReason reason;
    reason.recommended_item = item;
    for (const auto& [rated, rating] : ratings.of_user(u)) {
      if (rated == item) continue;
      const double sim = similarity(counts, item, rated);
      if (sim <= 0.0) continue;
      reason.similar.push_back({rated, sim, rating});
    }
    std::sort(reason.similar.begin(), reason.similar.end(),
              [](const SimilarItem& a, const SimilarItem& b) {
                if (a.sim != b.sim) return a.sim > b.sim;
                return a.item < b.item;
              });
    if (reason.similar.size() > static_cast<std::size_t>(k_expl))
      reason.similar.resize(static_cast<std::size_t>(k_expl));
    reasons.push_back(std::move(reason));
  }
  return reasons;
}

UserPairMeta meta_explain_user_pair(const RatingsView& ratings, const SocialView& social,
                                    EntityId u, EntityId v, double high_threshold,
                                    double low_threshold) {
  if (u == v) throw ArgumentError("meta-explanation needs two distinct users");
  UserPairMeta meta;
  const auto fu = social.friends(u);
  const auto fv = social.friends(v);
  std::set_intersection(fu.begin(), fu.end(), fv.begin(), fv.end(),
                        std::back_inserter(meta.common_friends));

  for (const auto& [item, rating_u] : ratings.of_user(u)) {
    const auto rating_v = ratings.rating(v, item);
    if (!rating_v) continue;
    if (rating_u >= high_threshold && *rating_v >= high_threshold)
      meta.common_favorites.push_back({item, rating_u, *rating_v});
    if (rating_u <= low_threshold && *rating_v <= low_threshold)
      meta.common_dislikes.push_back({item, rating_u, *rating_v});
  }
  return meta;
}

ItemPairMeta meta_explain_item_pair(const RatingsView& ratings, EntityId i, EntityId j,
                                    double high_threshold) {
  if (i == j) throw ArgumentError("meta-explanation needs two distinct items");
  ItemPairMeta meta;
  for (const auto& [user, rating_i] : ratings.of_item(i)) {
    const auto rating_j = ratings.rating(user, j);
    if (!rating_j) continue;
    if (rating_i >= high_threshold && *rating_j >= high_threshold)
      meta.common_admirers.push_back({user, rating_i, *rating_j});
  }
  return meta;
}

ExplanationReport build_explanation_report(const ModelArtifact& artifact,
                                           const RatingsView& ratings, const SocialView& social,
                                           std::string_view user,
                                           const ExplainOptions& options) {
  const EntityIndex& index = artifact.index;
  const double mid = (artifact.min_rating + artifact.max_rating) / 2.0;
  const double high = std::isnan(options.high_threshold) ? mid : options.high_threshold;
  const double low = std::isnan(options.low_threshold) ? mid : options.low_threshold;

  ExplanationReport report;
  report.target_user = std::string(user);

  const Recommendations recs = recommend_top_n(artifact, ratings, user, options.top_n,
                                               options.clamp);
  report.user_known = recs.user_known;
  std::vector<EntityId> recommended_ids;
  for (const auto& [item, rating] : recs.items) {
    recommended_ids.push_back(item);
    report.recommended.push_back({index.external_id(item), rating});
  }
  if (!report.user_known) return report;  // no profile: recommendations only

  const EntityId u = *index.find(EntityKind::User, user);
  const auto similar_users = explain_similar_users(artifact.counts, ratings, social, u,
                                                   recommended_ids, options.k_expl);
  for (const auto& su : similar_users) {
    ExplanationReport::SimilarUserEntry entry;
    entry.user = index.external_id(su.user);
    entry.sim = su.sim;
    entry.is_friend = su.is_friend;
    for (const auto& [item, rating] : su.rated_recommended)
      entry.rated_recommended.push_back({index.external_id(item), rating});
    report.similar_users.push_back(std::move(entry));

    const UserPairMeta meta = meta_explain_user_pair(ratings, social, u, su.user, high, low);
    ExplanationReport::UserMetaEntry meta_entry;
    meta_entry.user = index.external_id(su.user);
    for (EntityId f : meta.common_friends)
      meta_entry.common_friends.push_back(index.external_id(f));
    for (const auto& c : meta.common_favorites)
      meta_entry.common_favorites.push_back({index.external_id(c.item), c.rating_u, c.rating_v});
    for (const auto& c : meta.common_dislikes)
      meta_entry.common_dislikes.push_back({index.external_id(c.item), c.rating_u, c.rating_v});
    report.user_meta.push_back(std::move(meta_entry));
  }

  const auto item_reasons = explain_similar_items(artifact.counts, ratings, u, recommended_ids,
                                                  options.k_expl);
  for (const auto& reason : item_reasons) {
    ExplanationReport::ItemReasonEntry entry;
    entry.recommended_item = index.external_id(reason.recommended_item);
    for (const auto& si : reason.similar) {
      entry.similar_items.push_back({index.external_id(si.item), si.sim, si.target_rating});

      const ItemPairMeta meta =
          meta_explain_item_pair(ratings, reason.recommended_item, si.item, high);
      ExplanationReport::ItemMetaEntry meta_entry;
      meta_entry.recommended_item = entry.recommended_item;
      meta_entry.similar_item = index.external_id(si.item);
      for (const auto& adm : meta.common_admirers)
        meta_entry.common_admirers.push_back(
            {index.external_id(adm.user), adm.rating_i, adm.rating_j});
      report.item_meta.push_back(std::move(meta_entry));
    }
    report.item_reasons.push_back(std::move(entry));
  }
  return report;
}

namespace {

using nlohmann::json;

json to_json(const ExplanationReport& r) {
  json doc;
  doc["version"] = r.version;
  doc["targetUser"] = r.target_user;
  doc["userKnown"] = r.user_known;
  doc["recommendedItems"] = json::array();
  for (const auto& rec : r.recommended)
    doc["recommendedItems"].push_back({{"item", rec.item}, {"predictedRating", rec.predicted_rating}});
  doc["reasonSimilarUsers"] = json::array();
  for (const auto& su : r.similar_users) {
    json ratings = json::array();
    for (const auto& ir : su.rated_recommended)
      ratings.push_back({{"item", ir.item}, {"rating", ir.rating}});
    doc["reasonSimilarUsers"].push_back({{"user", su.user},
                                         {"sim", su.sim},
                                         {"isFriend", su.is_friend},
                                         {"theirRatings", std::move(ratings)}});
  }
  doc["reasonSimilarItems"] = json::array();
  for (const auto& ir : r.item_reasons) {
    json sims = json::array();
    for (const auto& si : ir.similar_items)
      sims.push_back({{"item", si.item}, {"sim", si.sim}, {"targetRating", si.target_rating}});
    doc["reasonSimilarItems"].push_back(
        {{"recommendedItem", ir.recommended_item}, {"similarItems", std::move(sims)}});
  }
  doc["metaUserExplanations"] = json::array();
  for (const auto& um : r.user_meta) {
    json favorites = json::array();
    for (const auto& c : um.common_favorites)
      favorites.push_back(
          {{"item", c.item}, {"targetRating", c.target_rating}, {"otherRating", c.other_rating}});
    json dislikes = json::array();
    for (const auto& c : um.common_dislikes)
      dislikes.push_back(
          {{"item", c.item}, {"targetRating", c.target_rating}, {"otherRating", c.other_rating}});
    doc["metaUserExplanations"].push_back({{"user", um.user},
                                           {"commonFriends", um.common_friends},
                                           {"commonFavorites", std::move(favorites)},
                                           {"commonDislikes", std::move(dislikes)}});
  }
  doc["metaItemExplanations"] = json::array();
  for (const auto& im : r.item_meta) {
    json admirers = json::array();
    for (const auto& a : im.common_admirers)
      admirers.push_back({{"user", a.user},
                          {"ratingRecommended", a.rating_recommended},
                          {"ratingSimilar", a.rating_similar}});
    doc["metaItemExplanations"].push_back({{"recommendedItem", im.recommended_item},
                                           {"similarItem", im.similar_item},
                                           {"commonAdmirers", std::move(admirers)}});
  }
  return doc;
}

ExplanationReport parse_report(const json& doc) {
  ExplanationReport r;
  r.version = doc.at("version").get<int>();
  if (r.version != 1)
    throw FormatError("unsupported report version " + std::to_string(r.version));
  r.target_user = doc.at("targetUser").get<std::string>();
  r.user_known = doc.at("userKnown").get<bool>();
  for (const auto& rec : doc.at("recommendedItems"))
    r.recommended.push_back(
        {rec.at("item").get<std::string>(), rec.at("predictedRating").get<double>()});
  for (const auto& su : doc.at("reasonSimilarUsers")) {
    ExplanationReport::SimilarUserEntry entry;
    entry.user = su.at("user").get<std::string>();
    entry.sim = su.at("sim").get<double>();
    entry.is_friend = su.at("isFriend").get<bool>();
    for (const auto& ir : su.at("theirRatings"))
      entry.rated_recommended.push_back(
          {ir.at("item").get<std::string>(), ir.at("rating").get<double>()});
    r.similar_users.push_back(std::move(entry));
  }
  for (const auto& ir : doc.at("reasonSimilarItems")) {
    ExplanationReport::ItemReasonEntry entry;
    entry.recommended_item = ir.at("recommendedItem").get<std::string>();
    for (const auto& si : ir.at("similarItems"))
      entry.similar_items.push_back({si.at("item").get<std::string>(),
                                     si.at("sim").get<double>(),
                                     si.at("targetRating").get<double>()});
    r.item_reasons.push_back(std::move(entry));
  }
  for (const auto& um : doc.at("metaUserExplanations")) {
    ExplanationReport::UserMetaEntry entry;
    entry.user = um.at("user").get<std::string>();
    for (const auto& f : um.at("commonFriends")) entry.common_friends.push_back(f.get<std::string>());
    for (const auto& c : um.at("commonFavorites"))
      entry.common_favorites.push_back({c.at("item").get<std::string>(),
                                        c.at("targetRating").get<double>(),
                                        c.at("otherRating").get<double>()});
    for (const auto& c : um.at("commonDislikes"))
      entry.common_dislikes.push_back({c.at("item").get<std::string>(),
                                       c.at("targetRating").get<double>(),
                                       c.at("otherRating").get<double>()});
    r.user_meta.push_back(std::move(entry));
  }
  for (const auto& im : doc.at("metaItemExplanations")) {
    ExplanationReport::ItemMetaEntry entry;
    entry.recommended_item = im.at("recommendedItem").get<std::string>();
    entry.similar_item = im.at("similarItem").get<std::string>();
    for (const auto& a : im.at("commonAdmirers"))
      entry.common_admirers.push_back({a.at("user").get<std::string>(),
                                       a.at("ratingRecommended").get<double>(),
                                       a.at("ratingSimilar").get<double>()});
    r.item_meta.push_back(std::move(entry));
  }
  return r;
}

}  // namespace

std::string report_to_json(const ExplanationReport& report) {
  return to_json(report).dump(2) + "\n";
}

ExplanationReport report_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed explanation report: ") + e.what());
  }
  try {
    return parse_report(doc);
  } catch (const json::exception& e) {
    throw FormatError(std::string("explanation report missing fields: ") + e.what());
  }
}

}  // namespace uniwalk
