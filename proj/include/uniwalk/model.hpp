#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "uniwalk/pairs.hpp"
#include "uniwalk/types.hpp"

namespace uniwalk {

/// All tunables of the learner. Defaults are the FilmTrust-scale settings;
/// validate() rejects out-of-range combinations.
struct Hyperparams {
  double c = 5.0;          // social edge weight
  int l = 30;              // walk length in nodes
  int s = 7;               // window radius
  double alpha = 0.05;     // weight of the positive unsupervised term
  double beta = 0.005;     // weight of the negative unsupervised term
  int d = 25;              // latent dimension
  double lambda_b = 0.1;   // bias regularization
  double lambda_z = 0.1;   // latent regularization
  double eta = 0.01;       // learning rate
  double gamma = 0.2;      // momentum
  int walks_per_node = 10;
  int iterations = 10;
  std::uint64_t seed = 1;
  double grad_clip = 5.0;       // per-block Euclidean norm cap
  bool clamp_predictions = true;

  void validate() const;  // throws ArgumentError
};

/// Learned parameters: the global mean (fixed), one bias and one d-dim latent
/// vector per entity. Rows of `latent` align with entity ids.
struct ModelParams {
  double mu = 0.0;
  int d = 0;
  Eigen::VectorXd bias;
  RowMatrixXd latent;

  std::size_t entity_count() const { return static_cast<std::size_t>(bias.size()); }
};

/// Momentum buffers, one per learnable parameter; zero-initialized.
struct OptimizerState {
  Eigen::VectorXd bias_velocity;
  RowMatrixXd latent_velocity;

  explicit OptimizerState(const ModelParams& model)
      : bias_velocity(Eigen::VectorXd::Zero(model.bias.size())),
        latent_velocity(RowMatrixXd::Zero(model.latent.rows(), model.latent.cols())) {}
};

/// Zero biases; latent coordinates uniform in [-0.5/sqrt(d), +0.5/sqrt(d)].
ModelParams init_model(const EntityIndex& index, int d, double mu, std::uint64_t seed);

/// mu + b_u + b_i + z_u . z_i, no clamping. Both ids must be valid rows.
inline double predict_raw(const ModelParams& model, EntityId u, EntityId i) {
  return model.mu + model.bias(u) + model.bias(i) + model.latent.row(u).dot(model.latent.row(i));
}

/// Everything needed to serve predictions and explanations after training.
struct ModelArtifact {
  ModelParams params;
  CoocCounts counts;
  EntityIndex index;
  double min_rating = 0.0;
  double max_rating = 0.0;
};

/// Binary model file (format documented in docs/model_format.md). Both raise
/// IoError on filesystem failure; load raises FormatError on bad magic,
/// unsupported version, or truncation. Serialization is byte-exact: floats
/// are stored as IEEE-754 bit patterns, little endian.
void save_model(const ModelArtifact& artifact, const std::filesystem::path& path);
ModelArtifact load_model(const std::filesystem::path& path);

}  // namespace uniwalk
