#pragma once

#include <optional>
#include <vector>

#include "uniwalk/graph.hpp"
#include "uniwalk/model.hpp"
#include "uniwalk/pairs.hpp"
#include "uniwalk/types.hpp"

namespace uniwalk {

/// Which iterations feed the co-occurrence statistics used by explanations.
enum class CoocScope : std::uint8_t { All = 0, Last = 1 };

/// Update scheduling. Reference mode applies updates strictly sequentially
/// and is bit-reproducible under a fixed seed. Performance mode shards walks
/// across threads with unsynchronized parameter updates; faster, but not
/// deterministic.
enum class TrainMode : std::uint8_t { Reference = 0, Performance = 1 };

struct TrainOptions {
  CoocScope cooc_scope = CoocScope::All;
  TrainMode mode = TrainMode::Reference;
  int threads = 0;  // 0 = hardware concurrency (performance mode only)
  /// Held-out ratings scored after each iteration; enables early stopping.
  std::vector<RatingRecord> validation;
  /// Stop after this many consecutive non-improving validation iterations.
  int patience = 3;
};

struct IterationStats {
  int iteration = 0;             // 1-based
  double train_rmse = 0.0;       // over the R pairs consumed this iteration
  double validation_rmse = 0.0;  // NaN when no validation set
  double wall_seconds = 0.0;
};

struct TrainingTrace {
  std::vector<IterationStats> iterations;
  int best_iteration = 0;  // 1-based; 0 when no validation set
  bool stopped_early = false;
};

struct TrainResult {
  ModelParams params;
  CoocCounts counts;
  TrainingTrace trace;
};

/// Snapshot of classified pairs for loss evaluation in tests.
struct PairSnapshot {
  std::vector<ClassifiedPair> pairs;
};

/// Full objective: supervised squared error over R pairs, L2 regularization
/// of all biases and latents, -alpha * (z_v . z_w) over Plus pairs and
/// +beta * (z_v . z_w) over Minus pairs. Used by tests and diagnostics, not
/// by the training loop.
double loss_value(const ModelParams& model, const PairSnapshot& snapshot,
                  const Hyperparams& hp);

/// Sparse gradient of one pair's loss contribution. For R pairs the bias
/// slots are active and `residual` holds r_hat - r; Plus and Minus pairs
/// touch only the latent slots.
struct PairGradient {
  EntityId a = kNoEntity;
  EntityId b = kNoEntity;
  bool has_bias = false;
  double bias_a = 0.0;
  double bias_b = 0.0;
  double residual = 0.0;
  Eigen::VectorXd latent_a;
  Eigen::VectorXd latent_b;
};

/// Computes the gradient of `pair`'s loss term at `model` into `grad`
/// (buffers are reused across calls). Regularization is applied locally to
/// the touched parameters; each block (b_a, b_b, z_a, z_b) is clipped to
/// Euclidean norm <= hp.grad_clip.
void pair_gradient(const ModelParams& model, const ClassifiedPair& pair, const Hyperparams& hp,
                   PairGradient& grad);

/// Momentum step for every parameter touched by `grad`:
///   v <- gamma * v - eta * g;  theta <- theta + v.
/// Throws DivergenceError if a parameter turns non-finite.
void apply_update(ModelParams& model, OptimizerState& state, const PairGradient& grad,
                  double eta, double gamma);

/// Runs the full training loop on the unified graph: per iteration, positive
/// walks, then negative walks, then unweighted walks, each streamed into
/// window pairs and consumed with per-pair momentum SGD. Ratings for R-pair
/// classification come from the graph's Score edges. When a validation set
/// is supplied, returns the parameters of the best validation iteration.
TrainResult train(const UnifiedGraph& graph, const EntityIndex& index,
                  const DatasetStats& stats, const Hyperparams& hp,
                  const TrainOptions& options = {});

}  // namespace uniwalk
