#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <vector>

#include "uniwalk/types.hpp"

namespace uniwalk {

/// Field splitting for rating/trust files. By default any run of spaces and
/// tabs separates fields; a single-character delimiter can be set instead
/// (some dataset distributions use ',' or '::'-free single chars).
struct ParseOptions {
  std::optional<char> delimiter;  // nullopt = whitespace runs
};

struct RatingsParse {
  std::vector<RatingRecord> records;
  DatasetStats stats;
};

/// Parses `user item rating` lines. Blank lines and lines starting with '#'
/// are skipped; LF and CRLF both accepted. Lines with fewer than three
/// fields, a non-finite or non-numeric rating, or a repeated (user, item)
/// pair raise ParseError / DuplicateRatingError with the line number.
RatingsParse parse_ratings(std::istream& in, const ParseOptions& options = {});

struct TrustParse {
  std::vector<SocialEdge> edges;      // deduplicated, undirected, no self-loops
  std::size_t line_count = 0;         // directed statements read
  std::size_t self_loop_count = 0;    // dropped self-loops
};

/// Parses `userA userB [weight]` lines into undirected deduplicated edges.
/// A third field (trust weight) is ignored; self-loops are dropped and
/// counted.
TrustParse parse_trust(std::istream& in, const ParseOptions& options = {});

/// Uniform random permutation followed by round-robin fold assignment.
/// Deterministic in (rating_count, fold_count, seed); fold sizes differ by
/// at most one.
FoldSplit kfold_split(std::size_t rating_count, int fold_count, std::uint64_t seed);

/// Ratings plus optional social edges, with dataset-level statistics
/// (user_count is the union of raters and social users).
struct Dataset {
  std::vector<RatingRecord> ratings;
  std::vector<SocialEdge> social;
  DatasetStats stats;
  std::size_t trust_self_loops = 0;
};

Dataset load_dataset(const std::filesystem::path& ratings_path,
                     const std::optional<std::filesystem::path>& trust_path,
                     const ParseOptions& options = {});

/// Entity ids in encounter order: rating users/items first, then users that
/// appear only in the social network.
EntityIndex build_entity_index(const std::vector<RatingRecord>& ratings,
                               const std::vector<SocialEdge>& social);

/// Writes records in the input file format (used by fixtures and tests).
/// Ratings are printed with shortest round-trip precision.
void write_ratings(std::ostream& out, const std::vector<RatingRecord>& records);

/// Recomputes dataset statistics over a rating subset (e.g. one CV training
/// fold). social_edge_count and user_count cover the ratings only.
DatasetStats compute_stats(const std::vector<RatingRecord>& ratings);

}  // namespace uniwalk
