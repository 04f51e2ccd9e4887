#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "uniwalk/ingest.hpp"
#include "uniwalk/recommender.hpp"

using namespace uniwalk;

namespace {

// Two users, three items; u1 rated i1 only, so i2 and i3 are candidates.
struct Fixture {
  EntityIndex index;
  std::vector<RatingRecord> ratings{{"u1", "i1", 4.0}, {"u2", "i1", 3.0}, {"u2", "i2", 2.0}};
  std::vector<SocialEdge> social{{"u1", "u2"}};
  ModelArtifact artifact;

  Fixture() {
    index = build_entity_index(ratings, social);
    index.add(EntityKind::Item, "i3");
    artifact.params = init_model(index, 2, 3.0, 1);
    artifact.params.latent.setZero();
    artifact.index = index;
    artifact.min_rating = 0.5;
    artifact.max_rating = 4.0;
  }

  EntityId id(EntityKind kind, const std::string& external) const {
    return *index.find(kind, external);
  }
};

}  // namespace

TEST_CASE("predict: unknown entities fall back toward mu") {
  Fixture f;
  CHECK(predict(f.artifact, "nobody", "nothing", false) == 3.0);
  CHECK(predict(f.artifact, "nobody", "nothing", true) == 3.0);

  // Unknown item: only the user's bias contributes.
  f.artifact.params.bias(f.id(EntityKind::User, "u1")) = 0.25;
  CHECK(predict(f.artifact, "u1", "nothing", false) == 3.25);
}

TEST_CASE("predict: clamps into the rating range when asked") {
  Fixture f;
  const EntityId u1 = f.id(EntityKind::User, "u1");
  const EntityId i1 = f.id(EntityKind::Item, "i1");
  f.artifact.params.bias(u1) = 2.0;
  f.artifact.params.bias(i1) = 0.7;  // raw 5.7

  CHECK(predict(f.artifact, "u1", "i1", false) == doctest::Approx(5.7).epsilon(1e-12));
  CHECK(predict(f.artifact, "u1", "i1", true) == 4.0);

  f.artifact.params.bias(u1) = -4.0;
  CHECK(predict(f.artifact, "u1", "i1", true) == 0.5);
}

TEST_CASE("predict: clamp off equals the raw model formula") {
  Fixture f;
  f.artifact.params = init_model(f.index, 3, 2.75, 17);
  const EntityId u2 = f.id(EntityKind::User, "u2");
  const EntityId i2 = f.id(EntityKind::Item, "i2");
  CHECK(predict(f.artifact, "u2", "i2", false) == predict_raw(f.artifact.params, u2, i2));
}

TEST_CASE("recommend_top_n: ranks unrated items by predicted rating") {
  Fixture f;
  RatingsView view(f.ratings, f.index);
  const EntityId i2 = f.id(EntityKind::Item, "i2");
  const EntityId i3 = f.id(EntityKind::Item, "i3");
  f.artifact.params.bias(i2) = 0.1;   // 3.1
  f.artifact.params.bias(i3) = 0.9;   // 3.9

  Recommendations rec = recommend_top_n(f.artifact, view, "u1", 1);
  CHECK(rec.user_known);
  REQUIRE(rec.items.size() == 1);
  CHECK(rec.items[0].item == i3);
  CHECK(rec.items[0].rating == doctest::Approx(3.9).epsilon(1e-12));

  // Rated items never reappear.
  Recommendations all = recommend_top_n(f.artifact, view, "u1", 10);
  CHECK(all.items.size() == 2);
  for (const auto& s : all.items) CHECK(s.item != f.id(EntityKind::Item, "i1"));
}

TEST_CASE("recommend_top_n: ties break toward the lower entity id") {
  Fixture f;
  RatingsView view(f.ratings, f.index);
  const EntityId i2 = f.id(EntityKind::Item, "i2");
  const EntityId i3 = f.id(EntityKind::Item, "i3");

  Recommendations rec = recommend_top_n(f.artifact, view, "u1", 2);
  REQUIRE(rec.items.size() == 2);
  CHECK(rec.items[0].rating == rec.items[1].rating);
  CHECK(rec.items[0].item == std::min(i2, i3));
  CHECK(rec.items[1].item == std::max(i2, i3));
}

TEST_CASE("recommend_top_n: unknown user gets a flagged bias ranking") {
  Fixture f;
  RatingsView view(f.ratings, f.index);
  f.artifact.params.bias(f.id(EntityKind::Item, "i1")) = 0.5;

  Recommendations rec = recommend_top_n(f.artifact, view, "stranger", 10);
  CHECK_FALSE(rec.user_known);
  CHECK(rec.items.size() == 3);  // all items are candidates
  CHECK(rec.items[0].item == f.id(EntityKind::Item, "i1"));
}

TEST_CASE("recommend_top_n: rejects non-positive n") {
  Fixture f;
  RatingsView view(f.ratings, f.index);
  CHECK_THROWS_AS(recommend_top_n(f.artifact, view, "u1", 0), ArgumentError);
}

TEST_CASE("recommend_top_n: constant bias shift keeps the ordering") {
  Fixture f;
  RatingsView view(f.ratings, f.index);
  const EntityId i2 = f.id(EntityKind::Item, "i2");
  const EntityId i3 = f.id(EntityKind::Item, "i3");
  f.artifact.params.bias(i2) = 0.3;
  f.artifact.params.bias(i3) = 0.1;

  Recommendations before = recommend_top_n(f.artifact, view, "u1", 2, false);
  for (Eigen::Index v = 0; v < f.artifact.params.bias.size(); ++v)
    f.artifact.params.bias(v) += 0.25;
  Recommendations after = recommend_top_n(f.artifact, view, "u1", 2, false);

  REQUIRE(before.items.size() == after.items.size());
  for (std::size_t k = 0; k < before.items.size(); ++k) {
    CHECK(before.items[k].item == after.items[k].item);
    // The user and item shift contribute twice per prediction.
    CHECK(after.items[k].rating == doctest::Approx(before.items[k].rating + 0.5).epsilon(1e-12));
  }
}

TEST_CASE("similarity: single pair scores one") {
  CoocCounts counts;
  counts.add_plus(0, 1);
  CHECK(similarity(counts, 0, 1) == 1.0);
  CHECK(similarity(counts, 1, 0) == 1.0);
}

TEST_CASE("similarity: absent pairs score zero") {
  CoocCounts counts;
  counts.add_plus(0, 1);
  CHECK(similarity(counts, 0, 2) == 0.0);
  CHECK(similarity(counts, 2, 3) == 0.0);
}

TEST_CASE("similarity: normalization by entity totals") {
  // {(v,w):2, (v,x):1} -> #v=3, #w=2, #x=1
  CoocCounts counts;
  counts.add_plus(0, 1);
  counts.add_plus(1, 0);
  counts.add_plus(0, 2);
  CHECK(similarity(counts, 0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(similarity(counts, 0, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("similarity: symmetric and within the unit interval") {
  std::mt19937_64 rng(77);
  CoocCounts counts;
  for (int n = 0; n < 300; ++n) {
    EntityId v = static_cast<EntityId>(rng() % 6);
    EntityId w = static_cast<EntityId>(rng() % 6);
    if (v != w) counts.add_plus(v, w);
  }
  for (EntityId v = 0; v < 6; ++v) {
    for (EntityId w = 0; w < 6; ++w) {
      if (v == w) continue;
      const double s = similarity(counts, v, w);
      CHECK(s == similarity(counts, w, v));
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
  }
}

TEST_CASE("similarity: self comparison is rejected") {
  CoocCounts counts;
  counts.add_plus(0, 1);
  CHECK_THROWS_AS(similarity(counts, 0, 0), ArgumentError);
}

TEST_CASE("explain_similar_users: candidates must have rated a recommended item") {
  // u3 co-occurs strongly with u1 but only rated i9 -> excluded.
  std::vector<RatingRecord> ratings{{"u1", "i1", 4.0}, {"u2", "i2", 3.5}, {"u3", "i9", 4.0}};
  std::vector<SocialEdge> social{{"u1", "u2"}};
  EntityIndex index = build_entity_index(ratings, social);
  RatingsView view(ratings, index);
  SocialView sview(social, index);

  const EntityId u1 = *index.find(EntityKind::User, "u1");
  const EntityId u2 = *index.find(EntityKind::User, "u2");
  const EntityId u3 = *index.find(EntityKind::User, "u3");
  const EntityId i2 = *index.find(EntityKind::Item, "i2");

  CoocCounts counts;
  counts.add_plus(u1, u2);
  counts.add_plus(u1, u3);
  counts.add_plus(u1, u3);

  std::vector<EntityId> recommended{i2};
  auto similar = explain_similar_users(counts, view, sview, u1, recommended, 5);
  REQUIRE(similar.size() == 1);
  CHECK(similar[0].user == u2);
  CHECK(similar[0].sim == similarity(counts, u1, u2));
  CHECK(similar[0].is_friend);
  REQUIRE(similar[0].rated_recommended.size() == 1);
  CHECK(similar[0].rated_recommended[0].first == i2);
  CHECK(similar[0].rated_recommended[0].second == 3.5);
}

TEST_CASE("explain_similar_users: zero similarity excluded, ranking by sim") {
  std::vector<RatingRecord> ratings{
      {"u1", "i1", 4.0}, {"u2", "i2", 3.0}, {"u3", "i2", 2.0}, {"u4", "i2", 1.0}};
  EntityIndex index = build_entity_index(ratings, {});
  RatingsView view(ratings, index);
  SocialView sview({}, index);

  const EntityId u1 = *index.find(EntityKind::User, "u1");
  const EntityId u2 = *index.find(EntityKind::User, "u2");
  const EntityId u3 = *index.find(EntityKind::User, "u3");
  const EntityId u4 = *index.find(EntityKind::User, "u4");
  const EntityId i2 = *index.find(EntityKind::Item, "i2");

  CoocCounts counts;
  counts.add_plus(u1, u2);            // sim(u1,u2) = 1/2
  counts.add_plus(u1, u3);            // raises #u1; sim(u1,u3) = ...
  counts.add_plus(u1, u3);
  // u4 never co-occurs with u1 -> sim 0 -> excluded.

  std::vector<EntityId> recommended{i2};
  auto similar = explain_similar_users(counts, view, sview, u1, recommended, 5);
  REQUIRE(similar.size() == 2);
  CHECK(similar[0].sim >= similar[1].sim);
  for (const auto& s : similar) {
    CHECK(s.user != u4);
    CHECK(s.sim > 0.0);
    CHECK_FALSE(s.is_friend);
  }

  // k_expl truncates.
  auto top1 = explain_similar_users(counts, view, sview, u1, recommended, 1);
  CHECK(top1.size() == 1);
  CHECK(top1[0].user == similar[0].user);
}

TEST_CASE("explain_similar_items: ranks the target's rated items per recommendation") {
  std::vector<RatingRecord> ratings{{"u1", "i1", 4.0}, {"u1", "i2", 1.5}, {"u2", "i3", 3.0}};
  EntityIndex index = build_entity_index(ratings, {});
  RatingsView view(ratings, index);

  const EntityId u1 = *index.find(EntityKind::User, "u1");
  const EntityId i1 = *index.find(EntityKind::Item, "i1");
  const EntityId i2 = *index.find(EntityKind::Item, "i2");
  const EntityId i3 = *index.find(EntityKind::Item, "i3");

  CoocCounts counts;
  counts.add_plus(i3, i1);
  counts.add_plus(i3, i1);
  counts.add_plus(i3, i2);
  counts.add_plus(i1, i2);  // sim(i3,i1)=2/9 > sim(i3,i2)=1/6

  std::vector<EntityId> recommended{i3};
  auto reasons = explain_similar_items(counts, view, u1, recommended, 5);
  REQUIRE(reasons.size() == 1);
  CHECK(reasons[0].recommended_item == i3);
  REQUIRE(reasons[0].similar.size() == 2);
  CHECK(reasons[0].similar[0].item == i1);
  CHECK(reasons[0].similar[0].sim > reasons[0].similar[1].sim);
  CHECK(reasons[0].similar[0].target_rating == 4.0);
  CHECK(reasons[0].similar[1].item == i2);
  CHECK(reasons[0].similar[1].target_rating == 1.5);

  // No co-occurrence with anything u1 rated -> empty list for that item.
  CoocCounts empty;
  auto none = explain_similar_items(empty, view, u1, recommended, 5);
  REQUIRE(none.size() == 1);
  CHECK(none[0].similar.empty());
}

TEST_CASE("meta_explain_user_pair: shared friends, favorites, dislikes") {
  std::vector<RatingRecord> ratings{{"u1", "x", 4.0}, {"u2", "x", 4.0}, {"u1", "y", 0.5},
                                    {"u2", "y", 1.0}, {"u1", "z", 4.0}, {"u2", "z", 1.0}};
  std::vector<SocialEdge> social{{"u1", "f"}, {"u2", "f"}, {"u1", "u2"}};
  EntityIndex index = build_entity_index(ratings, social);
  RatingsView view(ratings, index);
  SocialView sview(social, index);

  const EntityId u1 = *index.find(EntityKind::User, "u1");
  const EntityId u2 = *index.find(EntityKind::User, "u2");
  const EntityId f = *index.find(EntityKind::User, "f");
  const EntityId x = *index.find(EntityKind::Item, "x");
  const EntityId y = *index.find(EntityKind::Item, "y");

  UserPairMeta meta = meta_explain_user_pair(view, sview, u1, u2, 2.25, 2.25);
  REQUIRE(meta.common_friends.size() == 1);
  CHECK(meta.common_friends[0] == f);

  REQUIRE(meta.common_favorites.size() == 1);
  CHECK(meta.common_favorites[0].item == x);
  CHECK(meta.common_favorites[0].rating_u == 4.0);
  CHECK(meta.common_favorites[0].rating_v == 4.0);

  // z splits: u1 high, u2 low -> appears nowhere.
  REQUIRE(meta.common_dislikes.size() == 1);
  CHECK(meta.common_dislikes[0].item == y);
  CHECK(meta.common_dislikes[0].rating_u == 0.5);
  CHECK(meta.common_dislikes[0].rating_v == 1.0);
}

TEST_CASE("meta_explain_user_pair: disjoint users yield empty lists") {
  std::vector<RatingRecord> ratings{{"u1", "x", 4.0}, {"u2", "y", 4.0}};
  EntityIndex index = build_entity_index(ratings, {});
  RatingsView view(ratings, index);
  SocialView sview({}, index);

  const EntityId u1 = *index.find(EntityKind::User, "u1");
  const EntityId u2 = *index.find(EntityKind::User, "u2");
  UserPairMeta meta = meta_explain_user_pair(view, sview, u1, u2, 2.25, 2.25);
  CHECK(meta.common_friends.empty());
  CHECK(meta.common_favorites.empty());
  CHECK(meta.common_dislikes.empty());
}

TEST_CASE("meta_explain_item_pair: common admirers above the threshold") {
  std::vector<RatingRecord> ratings{{"u1", "i", 4.0}, {"u1", "j", 3.5}, {"u2", "i", 4.0},
                                    {"u2", "j", 1.0}, {"u3", "j", 4.0}};
  EntityIndex index = build_entity_index(ratings, {});
  RatingsView view(ratings, index);

  const EntityId u1 = *index.find(EntityKind::User, "u1");
  const EntityId i = *index.find(EntityKind::Item, "i");
  const EntityId j = *index.find(EntityKind::Item, "j");

  ItemPairMeta meta = meta_explain_item_pair(view, i, j, 2.25);
  REQUIRE(meta.common_admirers.size() == 1);  // u2's j rating is below threshold
  CHECK(meta.common_admirers[0].user == u1);
  CHECK(meta.common_admirers[0].rating_i == 4.0);
  CHECK(meta.common_admirers[0].rating_j == 3.5);

  ItemPairMeta none = meta_explain_item_pair(view, i, *index.find(EntityKind::Item, "j"), 4.5);
  CHECK(none.common_admirers.empty());
}

TEST_CASE("report: composed sections agree with the building blocks") {
  std::vector<RatingRecord> ratings{{"u1", "i1", 4.0}, {"u2", "i1", 3.5}, {"u2", "i2", 4.0},
                                    {"u3", "i2", 3.0}, {"u3", "i1", 4.0}};
  std::vector<SocialEdge> social{{"u1", "u2"}};
  EntityIndex index = build_entity_index(ratings, social);

  ModelArtifact artifact;
  artifact.params = init_model(index, 2, 3.5, 3);
  artifact.index = index;
  artifact.min_rating = 0.5;
  artifact.max_rating = 4.0;

  const EntityId u1 = *index.find(EntityKind::User, "u1");
  const EntityId u2 = *index.find(EntityKind::User, "u2");
  const EntityId u3 = *index.find(EntityKind::User, "u3");
  const EntityId i1 = *index.find(EntityKind::Item, "i1");
  const EntityId i2 = *index.find(EntityKind::Item, "i2");
  artifact.counts.add_plus(u1, u2);
  artifact.counts.add_plus(u1, u3);
  artifact.counts.add_plus(i1, i2);

  RatingsView view(ratings, index);
  SocialView sview(social, index);
  ExplainOptions options;
  options.top_n = 5;
  options.k_expl = 3;

  ExplanationReport report = build_explanation_report(artifact, view, sview, "u1", options);
  CHECK(report.version == 1);
  CHECK(report.target_user == "u1");
  CHECK(report.user_known);

  // u1 rated i1 only, so i2 is the single candidate.
  REQUIRE(report.recommended.size() == 1);
  CHECK(report.recommended[0].item == "i2");

  // Both u2 and u3 rated i2 and co-occur with u1.
  REQUIRE(report.similar_users.size() == 2);
  for (const auto& su : report.similar_users) {
    CHECK(su.sim > 0.0);
    REQUIRE(su.rated_recommended.size() == 1);
    CHECK(su.rated_recommended[0].item == "i2");
  }
  const auto& friend_entry =
      report.similar_users[0].user == "u2" ? report.similar_users[0] : report.similar_users[1];
  CHECK(friend_entry.is_friend);

  // i1 is u1's only rated item and co-occurs with i2.
  REQUIRE(report.item_reasons.size() == 1);
  CHECK(report.item_reasons[0].recommended_item == "i2");
  REQUIRE(report.item_reasons[0].similar_items.size() == 1);
  CHECK(report.item_reasons[0].similar_items[0].item == "i1");
  CHECK(report.item_reasons[0].similar_items[0].target_rating == 4.0);

  // Meta layers follow the reason sections' pairs.
  REQUIRE(report.user_meta.size() == 2);
  REQUIRE(report.item_meta.size() == 1);
  CHECK(report.item_meta[0].recommended_item == "i2");
  CHECK(report.item_meta[0].similar_item == "i1");
  // u2 and u3 rated both i1 and i2 at >= 2.25.
  CHECK(report.item_meta[0].common_admirers.size() == 2);
}

TEST_CASE("report: degenerate user still yields a valid document") {
  std::vector<RatingRecord> ratings{{"u1", "i1", 4.0}, {"u2", "i2", 3.0}};
  EntityIndex index = build_entity_index(ratings, {});
  ModelArtifact artifact;
  artifact.params = init_model(index, 2, 3.5, 3);
  artifact.index = index;
  artifact.min_rating = 0.5;
  artifact.max_rating = 4.0;

  RatingsView view(ratings, index);
  SocialView sview({}, index);
  ExplainOptions options;

  // No co-occurrence counts at all: reasons stay empty.
  ExplanationReport report = build_explanation_report(artifact, view, sview, "u1", options);
  CHECK(report.user_known);
  CHECK(report.recommended.size() == 1);
  CHECK(report.similar_users.empty());
  REQUIRE(report.item_reasons.size() == 1);
  CHECK(report.item_reasons[0].similar_items.empty());
  CHECK(report.user_meta.empty());
  CHECK(report.item_meta.empty());

  // Unknown target: flagged, recommendation-only document.
  ExplanationReport unknown = build_explanation_report(artifact, view, sview, "zz", options);
  CHECK_FALSE(unknown.user_known);
  CHECK(unknown.recommended.size() == 2);
  CHECK(unknown.similar_users.empty());
}

TEST_CASE("report: json round-trip preserves every field") {
  std::vector<RatingRecord> ratings{{"u1", "i1", 4.0}, {"u2", "i1", 3.5}, {"u2", "i2", 4.0},
                                    {"u3", "i2", 3.0}, {"u3", "i1", 4.0}};
  std::vector<SocialEdge> social{{"u1", "u2"}};
  EntityIndex index = build_entity_index(ratings, social);
  ModelArtifact artifact;
  artifact.params = init_model(index, 2, 3.5, 3);
  artifact.index = index;
  artifact.min_rating = 0.5;
  artifact.max_rating = 4.0;
  artifact.counts.add_plus(*index.find(EntityKind::User, "u1"),
                           *index.find(EntityKind::User, "u2"));
  artifact.counts.add_plus(*index.find(EntityKind::Item, "i1"),
                           *index.find(EntityKind::Item, "i2"));

  RatingsView view(ratings, index);
  SocialView sview(social, index);
  ExplanationReport report = build_explanation_report(artifact, view, sview, "u1", {});

  const std::string text = report_to_json(report);
  ExplanationReport parsed = report_from_json(text);
  CHECK(parsed == report);
}

TEST_CASE("report: malformed json is rejected") {
  CHECK_THROWS_AS(report_from_json("not json"), FormatError);
  CHECK_THROWS_AS(report_from_json("{}"), FormatError);
  CHECK_THROWS_AS(report_from_json(R"({"version": 99})"), FormatError);
}
