#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace uniwalk {

using Scalar = double;
using EntityId = std::int32_t;

inline constexpr EntityId kNoEntity = -1;

enum class EntityKind : std::uint8_t { User = 0, Item = 1 };

/// Edge flavor in the unified graph: a rating edge or a social edge.
enum class LinkKind : std::uint8_t { Score = 0, Social = 1 };

enum class WalkKind : std::uint8_t { Positive = 0, Negative = 1, Unweighted = 2 };

/// Destination multiset of an extracted (target, neighbor) pair.
enum class PairSet : std::uint8_t { R = 0, Plus = 1, Minus = 2 };

/// Latent vectors are stored one row per entity; row-major keeps rows contiguous.
using RowMatrixXd = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline const char* to_string(WalkKind kind) {
  switch (kind) {
    case WalkKind::Positive: return "positive";
    case WalkKind::Negative: return "negative";
    case WalkKind::Unweighted: return "unweighted";
  }
  return "?";
}

inline const char* to_string(EntityKind kind) {
  return kind == EntityKind::User ? "user" : "item";
}

inline const char* to_string(PairSet set) {
  switch (set) {
    case PairSet::R: return "R";
    case PairSet::Plus: return "plus";
    case PairSet::Minus: return "minus";
  }
  return "?";
}

}  // namespace uniwalk
