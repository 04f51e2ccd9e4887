#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uniwalk/ingest.hpp"
#include "uniwalk/model.hpp"
#include "uniwalk/trainer.hpp"
#include "uniwalk/types.hpp"

namespace uniwalk {

/// sqrt(mean squared error). Throws ArgumentError on empty or mismatched
/// inputs.
double rmse(std::span<const double> predictions, std::span<const double> truth);

/// Mean absolute error, same contract as rmse.
double mae(std::span<const double> predictions, std::span<const double> truth);

struct EvalMetrics {
  std::string method;
  int fold = -1;  // -1 = pooled aggregate
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t n_predictions = 0;
  double wall_seconds = 0.0;
};

struct CvResult {
  std::vector<EvalMetrics> folds;
  EvalMetrics aggregate;
};

/// Biased matrix factorization: r_hat = mu + b_u + b_i + x_u . y_i, learned
/// by per-rating SGD on the squared error with L2 regularization.
struct MfHyperparams {
  int d = 25;
  double lambda = 0.1;
  double eta = 0.01;
  int epochs = 50;
  std::uint64_t seed = 1;
  int patience = 3;
  double grad_clip = 5.0;
};

struct MfModel {
  ModelParams params;
  EntityIndex index;
  double min_rating = 0.0;
  double max_rating = 0.0;
};

/// Trains on `ratings`; when `validation` is nonempty, per-epoch validation
/// RMSE drives early stopping and the best epoch's parameters are returned.
MfModel train_mf(const std::vector<RatingRecord>& ratings, const MfHyperparams& hp,
                 const std::vector<RatingRecord>& validation = {});

/// Raw prediction with cold fallback toward mu; no clamping.
double predict_mf(const MfModel& model, std::string_view user, std::string_view item);

/// Precomputed rating lists and vector norms for the neighborhood baselines.
struct NeighborView {
  EntityIndex index;
  std::vector<std::vector<std::pair<EntityId, double>>> by_user;  // sorted by item id
  std::vector<std::vector<std::pair<EntityId, double>>> by_item;  // sorted by user id
  std::vector<double> norm;  // Euclidean norm of each entity's rating vector
  double mu = 0.0;

  explicit NeighborView(const std::vector<RatingRecord>& ratings);
};

/// User-based CF: mean rating of item i over the k users most cosine-similar
/// to u among those who rated i, ties broken by ascending id; mu when nobody
/// rated i.
double ucf_predict(const NeighborView& view, std::string_view user, std::string_view item,
                   int k);

/// Item-based CF, symmetric to ucf_predict over the items u rated.
double icf_predict(const NeighborView& view, std::string_view user, std::string_view item,
                   int k);

/// Ratings of `fold` versus the rest.
struct FoldData {
  std::vector<RatingRecord> train;
  std::vector<RatingRecord> test;
};
FoldData split_fold(const std::vector<RatingRecord>& ratings, const FoldSplit& split, int fold);

/// Deterministically moves ~fraction of `records` into a validation slice.
struct TrainValSplit {
  std::vector<RatingRecord> train;
  std::vector<RatingRecord> validation;
};
TrainValSplit carve_validation(std::vector<RatingRecord> records, double fraction,
                               std::uint64_t seed);

struct CvOptions {
  Hyperparams uniwalk;     // seed is re-mixed per fold
  MfHyperparams mf;
  int neighbor_k = 50;     // ucf/icf neighborhood size
  // 0 = train on the full k-1 folds for the configured iteration count.
  // Setting a fraction carves a validation slice out of the training fold
  // and turns on best-iteration early stopping for uniwalk and mf.
  double validation_fraction = 0.0;
  CoocScope cooc_scope = CoocScope::All;
  TrainMode mode = TrainMode::Reference;
  int threads = 0;         // 0 = one thread per fold, capped at hardware
  bool clamp = true;
};

/// Cross-validation driver. method is one of uniwalk | mf | ucf | icf |
/// mean ("mean" predicts the training-fold average; a floor for sanity
/// checks). Social edges are never fold-split; only ratings are. Aggregate
/// metrics pool every fold's predictions.
CvResult run_cv(std::string_view method, const Dataset& data, const FoldSplit& split,
                const CvOptions& options);

/// Aligned human-readable table: one row per method aggregate.
void write_metrics_table(std::ostream& out, std::span<const CvResult> results);

/// Machine-readable rows: method, fold, rmse, mae, n, wall seconds.
void write_metrics_delimited(std::ostream& out, std::span<const CvResult> results);

}  // namespace uniwalk
