#include "uniwalk/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <thread>
#include <tuple>

#include "uniwalk/error.hpp"
#include "uniwalk/graph.hpp"
#include "uniwalk/rng.hpp"

namespace uniwalk {

namespace {

void check_lengths(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size())
    throw ArgumentError("prediction and truth lengths differ: " +
                        std::to_string(predictions.size()) + " vs " +
                        std::to_string(truth.size()));
  if (predictions.empty()) throw ArgumentError("cannot score an empty prediction set");
}

}  // namespace

double rmse(std::span<const double> predictions, std::span<const double> truth) {
  check_lengths(predictions, truth);
  double sum = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double e = predictions[k] - truth[k];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(predictions.size()));
}

double mae(std::span<const double> predictions, std::span<const double> truth) {
  check_lengths(predictions, truth);
  double sum = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k)
    sum += std::abs(predictions[k] - truth[k]);
  return sum / static_cast<double>(predictions.size());
}

MfModel train_mf(const std::vector<RatingRecord>& ratings, const MfHyperparams& hp,
                 const std::vector<RatingRecord>& validation) {
  if (ratings.empty()) throw ArgumentError("cannot train on an empty rating set");

  MfModel model;
  model.index = build_entity_index(ratings, {});
  const DatasetStats stats = compute_stats(ratings);
  model.min_rating = stats.min_rating;
  model.max_rating = stats.max_rating;
  model.params = init_model(model.index, hp.d, stats.mean_rating, hp.seed);
  OptimizerState state(model.params);

  // The per-rating update is the trainer's R-pair gradient with momentum off.
  Hyperparams pair_hp;
  pair_hp.d = hp.d;
  pair_hp.lambda_b = hp.lambda;
  pair_hp.lambda_z = hp.lambda;
  pair_hp.eta = hp.eta;
  pair_hp.gamma = 0.0;
  pair_hp.grad_clip = hp.grad_clip;

  std::vector<ClassifiedPair> pairs;
  pairs.reserve(ratings.size());
  for (const auto& r : ratings) {
    const EntityId u = *model.index.find(EntityKind::User, r.user);
    const EntityId i = *model.index.find(EntityKind::Item, r.item);
    pairs.push_back({u, i, PairSet::R, r.value});
  }

  struct ValEntry {
    EntityId u, i;
    double truth;
  };
  std::vector<ValEntry> val;
  for (const auto& r : validation)
    val.push_back({model.index.find(EntityKind::User, r.user).value_or(kNoEntity),
                   model.index.find(EntityKind::Item, r.item).value_or(kNoEntity), r.value});

  ModelParams best_params;
  double best_val = std::numeric_limits<double>::infinity();
  int bad_streak = 0;
  bool keep_best = false;

  std::vector<std::size_t> order(pairs.size());
  PairGradient grad;
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::mt19937_64 rng(mix_seed(hp.seed, 0x6d66ULL, static_cast<std::uint64_t>(epoch)));
    deterministic_shuffle(order.begin(), order.end(), rng);
    for (std::size_t k : order) {
      pair_gradient(model.params, pairs[k], pair_hp, grad);
      apply_update(model.params, state, grad, pair_hp.eta, pair_hp.gamma);
    }

    if (!val.empty()) {
      double sum = 0.0;
      for (const auto& entry : val) {
        double pred = model.params.mu;
        if (entry.u != kNoEntity) pred += model.params.bias(entry.u);
        if (entry.i != kNoEntity) pred += model.params.bias(entry.i);
        if (entry.u != kNoEntity && entry.i != kNoEntity)
          pred += model.params.latent.row(entry.u).dot(model.params.latent.row(entry.i));
        pred = std::clamp(pred, model.min_rating, model.max_rating);
        sum += (pred - entry.truth) * (pred - entry.truth);
      }
      const double val_rmse = std::sqrt(sum / static_cast<double>(val.size()));
      if (val_rmse < best_val) {
        best_val = val_rmse;
        best_params = model.params;
        keep_best = true;
        bad_streak = 0;
      } else if (++bad_streak >= hp.patience) {
        break;
      }
    }
  }
  if (keep_best) model.params = std::move(best_params);
  return model;
}

double predict_mf(const MfModel& model, std::string_view user, std::string_view item) {
  const EntityId u = model.index.find(EntityKind::User, user).value_or(kNoEntity);
  const EntityId i = model.index.find(EntityKind::Item, item).value_or(kNoEntity);
  double pred = model.params.mu;
  if (u != kNoEntity) pred += model.params.bias(u);
  if (i != kNoEntity) pred += model.params.bias(i);
  if (u != kNoEntity && i != kNoEntity)
    pred += model.params.latent.row(u).dot(model.params.latent.row(i));
  return pred;
}

NeighborView::NeighborView(const std::vector<RatingRecord>& ratings) {
  index = build_entity_index(ratings, {});
  by_user.resize(index.size());
  by_item.resize(index.size());
  norm.assign(index.size(), 0.0);
  double sum = 0.0;
  for (const auto& r : ratings) {
    const EntityId u = *index.find(EntityKind::User, r.user);
    const EntityId i = *index.find(EntityKind::Item, r.item);
    by_user[static_cast<std::size_t>(u)].emplace_back(i, r.value);
    by_item[static_cast<std::size_t>(i)].emplace_back(u, r.value);
    norm[static_cast<std::size_t>(u)] += r.value * r.value;
    norm[static_cast<std::size_t>(i)] += r.value * r.value;
    sum += r.value;
  }
  for (auto& list : by_user) std::sort(list.begin(), list.end());
  for (auto& list : by_item) std::sort(list.begin(), list.end());
  for (auto& n : norm) n = std::sqrt(n);
  mu = ratings.empty() ? 0.0 : sum / static_cast<double>(ratings.size());
}

namespace {

/// Cosine of two sparse rating vectors given as sorted (id, value) lists.
/// Zero-filled missing entries: the dot product runs over the co-support and
/// the norms cover each full vector.
double cosine(std::span<const std::pair<EntityId, double>> a,
              std::span<const std::pair<EntityId, double>> b, double norm_a, double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  double dot = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia].first < b[ib].first) {
      ++ia;
    } else if (b[ib].first < a[ia].first) {
      ++ib;
    } else {
      dot += a[ia].second * b[ib].second;
      ++ia;
      ++ib;
    }
  }
  return dot / (norm_a * norm_b);
}

/// Top-k mean over (similarity, id, rating) candidates; deterministic ties.
double neighbor_mean(std::vector<std::tuple<double, EntityId, double>>& candidates, int k,
                     double fallback) {
  if (candidates.empty()) return fallback;
  std::sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    return std::get<1>(x) < std::get<1>(y);
  });
  const std::size_t take = std::min(candidates.size(), static_cast<std::size_t>(k));
  double sum = 0.0;
  for (std::size_t n = 0; n < take; ++n) sum += std::get<2>(candidates[n]);
  return sum / static_cast<double>(take);
}

}  // namespace

double ucf_predict(const NeighborView& view, std::string_view user, std::string_view item,
                   int k) {
  if (k < 1) throw ArgumentError("neighborhood size k must be at least 1");
  const auto i = view.index.find(EntityKind::Item, item);
  if (!i) return view.mu;
  const auto& raters = view.by_item[static_cast<std::size_t>(*i)];
  if (raters.empty()) return view.mu;
  const auto u = view.index.find(EntityKind::User, user);

  std::vector<std::tuple<double, EntityId, double>> candidates;
  candidates.reserve(raters.size());
  for (const auto& [v, rating] : raters) {
    if (u && v == *u) continue;
    const double sim = u ? cosine(view.by_user[static_cast<std::size_t>(*u)],
                                  view.by_user[static_cast<std::size_t>(v)],
                                  view.norm[static_cast<std::size_t>(*u)],
                                  view.norm[static_cast<std::size_t>(v)])
                         : 0.0;
    candidates.emplace_back(sim, v, rating);
  }
  return neighbor_mean(candidates, k, view.mu);
}

double icf_predict(const NeighborView& view, std::string_view user, std::string_view item,
                   int k) {
  if (k < 1) throw ArgumentError("neighborhood size k must be at least 1");
  const auto u = view.index.find(EntityKind::User, user);
  if (!u) return view.mu;
  const auto& rated = view.by_user[static_cast<std::size_t>(*u)];
  if (rated.empty()) return view.mu;
  const auto i = view.index.find(EntityKind::Item, item);

  std::vector<std::tuple<double, EntityId, double>> candidates;
  candidates.reserve(rated.size());
  for (const auto& [j, rating] : rated) {
    if (i && j == *i) continue;
    const double sim = i ? cosine(view.by_item[static_cast<std::size_t>(*i)],
                                  view.by_item[static_cast<std::size_t>(j)],
                                  view.norm[static_cast<std::size_t>(*i)],
                                  view.norm[static_cast<std::size_t>(j)])
                         : 0.0;
    candidates.emplace_back(sim, j, rating);
  }
  return neighbor_mean(candidates, k, view.mu);
}

FoldData split_fold(const std::vector<RatingRecord>& ratings, const FoldSplit& split, int fold) {
  if (fold < 0 || fold >= split.fold_count)
    throw ArgumentError("fold index " + std::to_string(fold) + " out of range");
  if (ratings.size() != split.assignment.size())
    throw ArgumentError("fold split does not match the rating set size");
  FoldData data;
  for (std::size_t k = 0; k < ratings.size(); ++k) {
    if (split.assignment[k] == fold)
      data.test.push_back(ratings[k]);
    else
      data.train.push_back(ratings[k]);
  }
  return data;
}

TrainValSplit carve_validation(std::vector<RatingRecord> records, double fraction,
                               std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0)
    throw ArgumentError("validation fraction must be in [0, 1)");
  TrainValSplit out;
  const auto n_val = static_cast<std::size_t>(fraction * static_cast<double>(records.size()));
  if (n_val == 0) {
    out.train = std::move(records);
    return out;
  }
  std::vector<std::size_t> order(records.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::mt19937_64 rng(mix_seed(seed, 0x76616cULL));  // "val"
  deterministic_shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_val(records.size(), false);
  for (std::size_t k = 0; k < n_val; ++k) is_val[order[k]] = true;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (is_val[k])
      out.validation.push_back(std::move(records[k]));
    else
      out.train.push_back(std::move(records[k]));
  }
  return out;
}

namespace {

struct FoldOutcome {
  std::vector<double> predictions;
  std::vector<double> truth;
  double wall_seconds = 0.0;
};

FoldOutcome eval_uniwalk_fold(const Dataset& data, const FoldSplit& split, int fold,
                              const CvOptions& options) {
  FoldData fd = split_fold(data.ratings, split, fold);
  Hyperparams hp = options.uniwalk;
  hp.seed = mix_seed(options.uniwalk.seed, 0x666f6c64ULL, static_cast<std::uint64_t>(fold));
  TrainValSplit tv = carve_validation(std::move(fd.train), options.validation_fraction, hp.seed);

  const EntityIndex index = build_entity_index(tv.train, data.social);
  const DatasetStats stats = compute_stats(tv.train);
  const UnifiedGraph graph = build_unified_graph(tv.train, data.social, hp.c, index, stats);

  TrainOptions topts;
  topts.cooc_scope = options.cooc_scope;
  topts.mode = options.mode;
  topts.validation = std::move(tv.validation);
  const TrainResult result = train(graph, index, stats, hp, topts);

  FoldOutcome outcome;
  outcome.predictions.reserve(fd.test.size());
  outcome.truth.reserve(fd.test.size());
  for (const auto& r : fd.test) {
    const EntityId u = index.find(EntityKind::User, r.user).value_or(kNoEntity);
    const EntityId i = index.find(EntityKind::Item, r.item).value_or(kNoEntity);
    double pred = result.params.mu;
    if (u != kNoEntity) pred += result.params.bias(u);
    if (i != kNoEntity) pred += result.params.bias(i);
    if (u != kNoEntity && i != kNoEntity)
      pred += result.params.latent.row(u).dot(result.params.latent.row(i));
    if (options.clamp) pred = std::clamp(pred, stats.min_rating, stats.max_rating);
    outcome.predictions.push_back(pred);
    outcome.truth.push_back(r.value);
  }
  return outcome;
}

FoldOutcome eval_mf_fold(const Dataset& data, const FoldSplit& split, int fold,
                         const CvOptions& options) {
  FoldData fd = split_fold(data.ratings, split, fold);
  MfHyperparams hp = options.mf;
  hp.seed = mix_seed(options.mf.seed, 0x666f6c64ULL, static_cast<std::uint64_t>(fold));
  TrainValSplit tv = carve_validation(std::move(fd.train), options.validation_fraction, hp.seed);
  const MfModel model = train_mf(tv.train, hp, tv.validation);

  FoldOutcome outcome;
  for (const auto& r : fd.test) {
    double pred = predict_mf(model, r.user, r.item);
    if (options.clamp) pred = std::clamp(pred, model.min_rating, model.max_rating);
    outcome.predictions.push_back(pred);
    outcome.truth.push_back(r.value);
  }
  return outcome;
}

FoldOutcome eval_neighbor_fold(const Dataset& data, const FoldSplit& split, int fold,
                               const CvOptions& options, bool user_based) {
  FoldData fd = split_fold(data.ratings, split, fold);
  const NeighborView view(fd.train);
  const DatasetStats stats = compute_stats(fd.train);
  FoldOutcome outcome;
  for (const auto& r : fd.test) {
    double pred = user_based ? ucf_predict(view, r.user, r.item, options.neighbor_k)
                             : icf_predict(view, r.user, r.item, options.neighbor_k);
    if (options.clamp) pred = std::clamp(pred, stats.min_rating, stats.max_rating);
    outcome.predictions.push_back(pred);
    outcome.truth.push_back(r.value);
  }
  return outcome;
}

FoldOutcome eval_mean_fold(const Dataset& data, const FoldSplit& split, int fold) {
  FoldData fd = split_fold(data.ratings, split, fold);
  const double mu = compute_stats(fd.train).mean_rating;
  FoldOutcome outcome;
  for (const auto& r : fd.test) {
    outcome.predictions.push_back(mu);
    outcome.truth.push_back(r.value);
  }
  return outcome;
}

}  // namespace

CvResult run_cv(std::string_view method, const Dataset& data, const FoldSplit& split,
                const CvOptions& options) {
  const bool known = method == "uniwalk" || method == "mf" || method == "ucf" ||
                     method == "icf" || method == "mean";
  if (!known) throw ArgumentError("unknown method '" + std::string(method) + "'");
  if (split.fold_count < 2) throw ArgumentError("need at least 2 folds");

  const int folds = split.fold_count;
  std::vector<FoldOutcome> outcomes(static_cast<std::size_t>(folds));

  auto run_fold = [&](int fold) {
    const auto t0 = std::chrono::steady_clock::now();
    FoldOutcome outcome;
    if (method == "uniwalk")
      outcome = eval_uniwalk_fold(data, split, fold, options);
    else if (method == "mf")
      outcome = eval_mf_fold(data, split, fold, options);
    else if (method == "ucf")
      outcome = eval_neighbor_fold(data, split, fold, options, true);
    else if (method == "icf")
      outcome = eval_neighbor_fold(data, split, fold, options, false);
    else
      outcome = eval_mean_fold(data, split, fold);
    outcome.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    outcomes[static_cast<std::size_t>(fold)] = std::move(outcome);
  };

  int threads = options.threads > 0 ? options.threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, folds);
  if (threads == 1) {
    for (int fold = 0; fold < folds; ++fold) run_fold(fold);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        try {
          for (int fold = next.fetch_add(1); fold < folds; fold = next.fetch_add(1))
            run_fold(fold);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  CvResult result;
  std::vector<double> pooled_pred, pooled_truth;
  double total_wall = 0.0;
  for (int fold = 0; fold < folds; ++fold) {
    const auto& outcome = outcomes[static_cast<std::size_t>(fold)];
    EvalMetrics m;
    m.method = std::string(method);
    m.fold = fold;
    m.rmse = rmse(outcome.predictions, outcome.truth);
    m.mae = mae(outcome.predictions, outcome.truth);
    m.n_predictions = outcome.predictions.size();
    m.wall_seconds = outcome.wall_seconds;
    result.folds.push_back(std::move(m));
    pooled_pred.insert(pooled_pred.end(), outcome.predictions.begin(),
                       outcome.predictions.end());
    pooled_truth.insert(pooled_truth.end(), outcome.truth.begin(), outcome.truth.end());
    total_wall += outcome.wall_seconds;
  }
  result.aggregate.method = std::string(method);
  result.aggregate.fold = -1;
  result.aggregate.rmse = rmse(pooled_pred, pooled_truth);
  result.aggregate.mae = mae(pooled_pred, pooled_truth);
  result.aggregate.n_predictions = pooled_pred.size();
  result.aggregate.wall_seconds = total_wall;
  return result;
}

void write_metrics_table(std::ostream& out, std::span<const CvResult> results) {
  out << std::left << std::setw(10) << "method" << std::right << std::setw(9) << "RMSE"
      << std::setw(9) << "MAE" << std::setw(12) << "n" << std::setw(12) << "seconds" << '\n';
  for (const auto& r : results) {
    out << std::left << std::setw(10) << r.aggregate.method << std::right << std::fixed
        << std::setprecision(4) << std::setw(9) << r.aggregate.rmse << std::setw(9)
        << r.aggregate.mae << std::setw(12) << r.aggregate.n_predictions << std::setw(12)
        << std::setprecision(2) << r.aggregate.wall_seconds << '\n';
    out.unsetf(std::ios::fixed);
    out << std::setprecision(6);
  }
}

void write_metrics_delimited(std::ostream& out, std::span<const CvResult> results) {
  out << "method\tfold\trmse\tmae\tn_predictions\twall_seconds\n";
  auto row = [&out](const EvalMetrics& m) {
    out << m.method << '\t' << m.fold << '\t' << std::setprecision(17) << m.rmse << '\t'
        << m.mae << '\t' << m.n_predictions << '\t' << m.wall_seconds << '\n';
  };
  for (const auto& r : results) {
    for (const auto& m : r.folds) row(m);
    row(r.aggregate);
  }
}

}  // namespace uniwalk
