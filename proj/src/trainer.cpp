#include "uniwalk/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "uniwalk/error.hpp"
#include "uniwalk/rng.hpp"
#include "uniwalk/walker.hpp"

namespace uniwalk {

double loss_value(const ModelParams& model, const PairSnapshot& snapshot,
                  const Hyperparams& hp) {
  double loss = 0.0;
  for (const auto& p : snapshot.pairs) {
    switch (p.set) {
      case PairSet::R: {
        const double e = predict_raw(model, p.a, p.b) - p.rating;
        loss += 0.5 * e * e;
        break;
      }
      case PairSet::Plus:
        loss -= hp.alpha * model.latent.row(p.a).dot(model.latent.row(p.b));
        break;
      case PairSet::Minus:
        loss += hp.beta * model.latent.row(p.a).dot(model.latent.row(p.b));
        break;
    }
  }
  loss += 0.5 * hp.lambda_b * model.bias.squaredNorm();
  loss += 0.5 * hp.lambda_z * model.latent.squaredNorm();
  return loss;
}

namespace {

inline double clip_scalar(double g, double cap) {
  if (g > cap) return cap;
  if (g < -cap) return -cap;
  return g;
}

inline void clip_vector(Eigen::VectorXd& g, double cap) {
  const double norm2 = g.squaredNorm();
  if (norm2 > cap * cap) g *= cap / std::sqrt(norm2);
}

}  // namespace

void pair_gradient(const ModelParams& model, const ClassifiedPair& pair, const Hyperparams& hp,
                   PairGradient& grad) {
  const auto a = static_cast<Eigen::Index>(pair.a);
  const auto b = static_cast<Eigen::Index>(pair.b);
  grad.a = pair.a;
  grad.b = pair.b;
  if (grad.latent_a.size() != model.d) {
    grad.latent_a.resize(model.d);
    grad.latent_b.resize(model.d);
  }
  switch (pair.set) {
    case PairSet::R: {
      const double e = predict_raw(model, pair.a, pair.b) - pair.rating;
      grad.has_bias = true;
      grad.residual = e;
      grad.bias_a = clip_scalar(e + hp.lambda_b * model.bias(a), hp.grad_clip);
      grad.bias_b = clip_scalar(e + hp.lambda_b * model.bias(b), hp.grad_clip);
      grad.latent_a = e * model.latent.row(b).transpose() + hp.lambda_z * model.latent.row(a).transpose();
      grad.latent_b = e * model.latent.row(a).transpose() + hp.lambda_z * model.latent.row(b).transpose();
      break;
    }
    case PairSet::Plus:
      grad.has_bias = false;
      grad.residual = 0.0;
      grad.latent_a = -hp.alpha * model.latent.row(b).transpose() + hp.lambda_z * model.latent.row(a).transpose();
      grad.latent_b = -hp.alpha * model.latent.row(a).transpose() + hp.lambda_z * model.latent.row(b).transpose();
      break;
    case PairSet::Minus:
      grad.has_bias = false;
      grad.residual = 0.0;
      grad.latent_a = hp.beta * model.latent.row(b).transpose() + hp.lambda_z * model.latent.row(a).transpose();
      grad.latent_b = hp.beta * model.latent.row(a).transpose() + hp.lambda_z * model.latent.row(b).transpose();
      break;
  }
  clip_vector(grad.latent_a, hp.grad_clip);
  clip_vector(grad.latent_b, hp.grad_clip);
}

void apply_update(ModelParams& model, OptimizerState& state, const PairGradient& grad,
                  double eta, double gamma) {
  const auto a = static_cast<Eigen::Index>(grad.a);
  const auto b = static_cast<Eigen::Index>(grad.b);
  if (grad.has_bias) {
    double& va = state.bias_velocity(a);
    va = gamma * va - eta * grad.bias_a;
    model.bias(a) += va;
    double& vb = state.bias_velocity(b);
    vb = gamma * vb - eta * grad.bias_b;
    model.bias(b) += vb;
  }
  state.latent_velocity.row(a) = gamma * state.latent_velocity.row(a) - eta * grad.latent_a.transpose();
  model.latent.row(a) += state.latent_velocity.row(a);
  state.latent_velocity.row(b) = gamma * state.latent_velocity.row(b) - eta * grad.latent_b.transpose();
  model.latent.row(b) += state.latent_velocity.row(b);

  const bool finite = model.latent.row(a).allFinite() && model.latent.row(b).allFinite() &&
                      (!grad.has_bias ||
                       (std::isfinite(model.bias(a)) && std::isfinite(model.bias(b))));
  if (!finite)
    throw DivergenceError("non-finite parameter after update of entities " +
                          std::to_string(grad.a) + " and " + std::to_string(grad.b));
}

namespace {

struct ResolvedValidation {
  std::vector<EntityId> users;  // kNoEntity when unknown
  std::vector<EntityId> items;
  std::vector<double> truth;
};

ResolvedValidation resolve_validation(const std::vector<RatingRecord>& validation,
                                      const EntityIndex& index) {
  ResolvedValidation rv;
  rv.users.reserve(validation.size());
  rv.items.reserve(validation.size());
  rv.truth.reserve(validation.size());
  for (const auto& r : validation) {
    rv.users.push_back(index.find(EntityKind::User, r.user).value_or(kNoEntity));
    rv.items.push_back(index.find(EntityKind::Item, r.item).value_or(kNoEntity));
    rv.truth.push_back(r.value);
  }
  return rv;
}

double validation_rmse(const ModelParams& model, const ResolvedValidation& rv,
                       double min_rating, double max_rating, bool clamp) {
  if (rv.truth.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (std::size_t k = 0; k < rv.truth.size(); ++k) {
    double pred = model.mu;
    const EntityId u = rv.users[k];
    const EntityId i = rv.items[k];
    if (u != kNoEntity) pred += model.bias(u);
    if (i != kNoEntity) pred += model.bias(i);
    if (u != kNoEntity && i != kNoEntity) pred += model.latent.row(u).dot(model.latent.row(i));
    if (clamp) pred = std::clamp(pred, min_rating, max_rating);
    const double e = pred - rv.truth[k];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(rv.truth.size()));
}

constexpr WalkKind kKindOrder[3] = {WalkKind::Positive, WalkKind::Negative,
                                    WalkKind::Unweighted};

/// One worker's pass over a contiguous range of start nodes for one walk
/// kind. Appends supervised error statistics and Plus co-occurrences to the
/// supplied accumulators; parameter updates go straight into `model`.
void consume_node_range(const UnifiedGraph& graph, const EntityIndex& index,
                        const RatingLookup& lookup, const TransitionTable& table,
                        const std::vector<EntityId>& nodes, std::size_t begin, std::size_t end,
                        const Hyperparams& hp, std::uint64_t iter_seed, bool record_cooc,
                        ModelParams& model, OptimizerState& state, CoocCounts& cooc,
                        double& sq_err_sum, std::size_t& r_pair_count) {
  Walk walk;
  PairGradient grad;
  for (std::size_t n = begin; n < end; ++n) {
    const EntityId node = nodes[n];
    for (int rep = 0; rep < hp.walks_per_node; ++rep) {
      std::mt19937_64 rng(walk_seed(iter_seed, table.kind(), node, rep));
      sample_walk_into(graph, table, node, hp.l, rng, walk);
      for_each_pair(walk, hp.s, lookup, index, [&](const ClassifiedPair& pair) {
        pair_gradient(model, pair, hp, grad);
        apply_update(model, state, grad, hp.eta, hp.gamma);
        if (pair.set == PairSet::R) {
          sq_err_sum += grad.residual * grad.residual;
          ++r_pair_count;
        } else if (record_cooc && pair.set == PairSet::Plus) {
          cooc.add_plus(pair.a, pair.b);
        }
      });
    }
  }
}

}  // namespace

TrainResult train(const UnifiedGraph& graph, const EntityIndex& index,
                  const DatasetStats& stats, const Hyperparams& hp,
                  const TrainOptions& options) {
  hp.validate();
  if (graph.node_count() == 0) throw ArgumentError("cannot train on an empty graph");

  const RatingLookup lookup(graph, index);
  const std::vector<EntityId> nodes = graph.active_nodes();
  TransitionTableCache tables(graph);
  const ResolvedValidation validation = resolve_validation(options.validation, index);

  TrainResult result;
  result.params = init_model(index, hp.d, stats.mean_rating, hp.seed);
  OptimizerState state(result.params);

  ModelParams best_params;
  double best_val = std::numeric_limits<double>::infinity();
  int bad_streak = 0;

  int threads = options.threads > 0 ? options.threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;

  for (int iter = 1; iter <= hp.iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    if (options.cooc_scope == CoocScope::Last) result.counts = CoocCounts{};
    const std::uint64_t iter_seed = mix_seed(hp.seed, static_cast<std::uint64_t>(iter));

    double sq_err_sum = 0.0;
    std::size_t r_pair_count = 0;

    for (WalkKind kind : kKindOrder) {
      const TransitionTable& table = tables.get(kind);
      if (options.mode == TrainMode::Reference || threads == 1) {
        consume_node_range(graph, index, lookup, table, nodes, 0, nodes.size(), hp, iter_seed,
                           true, result.params, state, result.counts, sq_err_sum, r_pair_count);
      } else {
        // Unsynchronized concurrent updates; per-thread co-occurrence counts
        // merged afterwards so totals stay exact.
        std::vector<std::thread> pool;
        std::vector<CoocCounts> local_cooc(static_cast<std::size_t>(threads));
        std::vector<double> local_err(static_cast<std::size_t>(threads), 0.0);
        std::vector<std::size_t> local_count(static_cast<std::size_t>(threads), 0);
        std::exception_ptr first_error;
        std::mutex error_mutex;
        const std::size_t chunk = (nodes.size() + static_cast<std::size_t>(threads) - 1) /
                                  static_cast<std::size_t>(threads);
        for (int t = 0; t < threads; ++t) {
          const std::size_t begin = std::min(nodes.size(), static_cast<std::size_t>(t) * chunk);
          const std::size_t end = std::min(nodes.size(), begin + chunk);
          pool.emplace_back([&, t, begin, end] {
            try {
              consume_node_range(graph, index, lookup, table, nodes, begin, end, hp, iter_seed,
                                 true, result.params, state, local_cooc[static_cast<std::size_t>(t)],
                                 local_err[static_cast<std::size_t>(t)],
                                 local_count[static_cast<std::size_t>(t)]);
            } catch (...) {
              std::lock_guard<std::mutex> lock(error_mutex);
              if (!first_error) first_error = std::current_exception();
            }
          });
        }
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
        for (int t = 0; t < threads; ++t) {
          result.counts.merge(local_cooc[static_cast<std::size_t>(t)]);
          sq_err_sum += local_err[static_cast<std::size_t>(t)];
          r_pair_count += local_count[static_cast<std::size_t>(t)];
        }
      }
    }

    IterationStats row;
    row.iteration = iter;
    row.train_rmse = r_pair_count == 0
                         ? std::numeric_limits<double>::quiet_NaN()
                         : std::sqrt(sq_err_sum / static_cast<double>(r_pair_count));
    row.validation_rmse = validation_rmse(result.params, validation, stats.min_rating,
                                          stats.max_rating, hp.clamp_predictions);
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.trace.iterations.push_back(row);

    if (!validation.truth.empty()) {
      if (row.validation_rmse < best_val) {
        best_val = row.validation_rmse;
        best_params = result.params;
        result.trace.best_iteration = iter;
        bad_streak = 0;
      } else {
        ++bad_streak;
        if (bad_streak >= options.patience) {
          result.trace.stopped_early = true;
          break;
        }
      }
    }
  }

  if (result.trace.best_iteration > 0) result.params = std::move(best_params);
  return result;
}

}  // namespace uniwalk
