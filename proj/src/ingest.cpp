#include "uniwalk/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unordered_set>

#include "uniwalk/rng.hpp"

namespace uniwalk {

namespace {

void split_fields(const std::string& line, const ParseOptions& options,
                  std::vector<std::string_view>& out) {
  out.clear();
  const std::string_view sv(line);
  if (options.delimiter) {
    const char d = *options.delimiter;
    std::size_t start = 0;
    while (start <= sv.size()) {
      const std::size_t pos = sv.find(d, start);
      if (pos == std::string_view::npos) {
        out.push_back(sv.substr(start));
        break;
      }
      out.push_back(sv.substr(start, pos - start));
      start = pos + 1;
    }
  } else {
    std::size_t i = 0;
    while (i < sv.size()) {
      while (i < sv.size() && (sv[i] == ' ' || sv[i] == '\t')) ++i;
      if (i >= sv.size()) break;
      std::size_t j = i;
      while (j < sv.size() && sv[j] != ' ' && sv[j] != '\t') ++j;
      out.push_back(sv.substr(i, j - i));
      i = j;
    }
  }
}

double parse_rating_value(std::string_view field, std::size_t line_number) {
  double value = 0.0;
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw ParseError("invalid rating value '" + std::string(field) + "'", line_number);
  if (!std::isfinite(value))
    throw ParseError("non-finite rating value '" + std::string(field) + "'", line_number);
  return value;
}

// Returns false for lines that carry no data (blank or '#' comment).
bool next_data_line(std::istream& in, std::string& line, std::size_t& line_number) {
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    return true;
  }
  return false;
}

}  // namespace

RatingsParse parse_ratings(std::istream& in, const ParseOptions& options) {
  RatingsParse result;
  std::unordered_set<std::string> seen_pairs;
  std::unordered_set<std::string> users, items;
  std::string line;
  std::vector<std::string_view> fields;
  std::size_t line_number = 0;

  double min_r = 0.0, max_r = 0.0;
  double sum = 0.0, compensation = 0.0;  // Kahan

  while (next_data_line(in, line, line_number)) {
    split_fields(line, options, fields);
    if (fields.size() < 3)
      throw ParseError("expected at least 3 fields (user, item, rating), got " +
                           std::to_string(fields.size()),
                       line_number);
    if (fields[0].empty() || fields[1].empty())
      throw ParseError("empty user or item id", line_number);

    RatingRecord record;
    record.user = std::string(fields[0]);
    record.item = std::string(fields[1]);
    record.value = parse_rating_value(fields[2], line_number);

    std::string key = record.user;
    key.push_back('\x1f');
    key += record.item;
    if (!seen_pairs.insert(std::move(key)).second)
      throw DuplicateRatingError(
          "duplicate rating for (" + record.user + ", " + record.item + ")", line_number);

    if (result.records.empty()) {
      min_r = max_r = record.value;
    } else {
      min_r = std::min(min_r, record.value);
      max_r = std::max(max_r, record.value);
    }
    const double y = record.value - compensation;
    const double t = sum + y;
    compensation = (t - sum) - y;
    sum = t;

    users.insert(record.user);
    items.insert(record.item);
    result.records.push_back(std::move(record));
  }

  result.stats.rating_count = result.records.size();
  result.stats.user_count = users.size();
  result.stats.item_count = items.size();
  result.stats.min_rating = min_r;
  result.stats.max_rating = max_r;
  result.stats.mean_rating =
      result.records.empty() ? 0.0 : sum / static_cast<double>(result.records.size());
  return result;
}

TrustParse parse_trust(std::istream& in, const ParseOptions& options) {
  TrustParse result;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::vector<std::string_view> fields;
  std::size_t line_number = 0;

  while (next_data_line(in, line, line_number)) {
    split_fields(line, options, fields);
    if (fields.size() < 2)
      throw ParseError("expected at least 2 fields (userA, userB), got " +
                           std::to_string(fields.size()),
                       line_number);
    if (fields[0].empty() || fields[1].empty())
      throw ParseError("empty user id", line_number);
    ++result.line_count;
    if (fields[0] == fields[1]) {
      ++result.self_loop_count;
      continue;
    }
    SocialEdge edge{std::string(fields[0]), std::string(fields[1])};
    if (seen.emplace(edge.a, edge.b).second) result.edges.push_back(std::move(edge));
  }
  return result;
}

FoldSplit kfold_split(std::size_t rating_count, int fold_count, std::uint64_t seed) {
  if (fold_count < 2) throw ArgumentError("fold_count must be >= 2");
  if (rating_count == 0) throw ArgumentError("cannot split an empty rating set");
  if (rating_count < static_cast<std::size_t>(fold_count))
    throw ArgumentError("need at least fold_count ratings");

  std::vector<std::size_t> order(rating_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  deterministic_shuffle(order.begin(), order.end(), rng);

  FoldSplit split;
  split.fold_count = fold_count;
  split.seed = seed;
  split.assignment.resize(rating_count);
  for (std::size_t j = 0; j < rating_count; ++j)
    split.assignment[order[j]] = static_cast<std::int32_t>(j % static_cast<std::size_t>(fold_count));
  return split;
}

Dataset load_dataset(const std::filesystem::path& ratings_path,
                     const std::optional<std::filesystem::path>& trust_path,
                     const ParseOptions& options) {
  std::ifstream ratings_file(ratings_path);
  if (!ratings_file) throw IoError("cannot open ratings file: " + ratings_path.string());

  Dataset dataset;
  auto parsed = parse_ratings(ratings_file, options);
  dataset.ratings = std::move(parsed.records);
  dataset.stats = parsed.stats;

  if (trust_path) {
    std::ifstream trust_file(*trust_path);
    if (!trust_file) throw IoError("cannot open trust file: " + trust_path->string());
    auto trust = parse_trust(trust_file, options);
    dataset.social = std::move(trust.edges);
    dataset.trust_self_loops = trust.self_loop_count;
    dataset.stats.social_edge_count = dataset.social.size();

    std::unordered_set<std::string> users;
    for (const auto& r : dataset.ratings) users.insert(r.user);
    for (const auto& e : dataset.social) {
      users.insert(e.a);
      users.insert(e.b);
    }
    dataset.stats.user_count = users.size();
  }
  return dataset;
}

EntityIndex build_entity_index(const std::vector<RatingRecord>& ratings,
                               const std::vector<SocialEdge>& social) {
  EntityIndex index;
  for (const auto& r : ratings) {
    index.add(EntityKind::User, r.user);
    index.add(EntityKind::Item, r.item);
  }
  for (const auto& e : social) {
    index.add(EntityKind::User, e.a);
    index.add(EntityKind::User, e.b);
  }
  return index;
}

void write_ratings(std::ostream& out, const std::vector<RatingRecord>& records) {
  char buffer[64];
  for (const auto& r : records) {
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), r.value);
    out << r.user << ' ' << r.item << ' ';
    out.write(buffer, ptr - buffer);
    out.put('\n');
  }
}

DatasetStats compute_stats(const std::vector<RatingRecord>& ratings) {
  DatasetStats stats;
  stats.rating_count = ratings.size();
  if (ratings.empty()) return stats;

  std::unordered_set<std::string> users, items;
  double min_r = ratings.front().value, max_r = ratings.front().value;
  double sum = 0.0, compensation = 0.0;
  for (const auto& r : ratings) {
    min_r = std::min(min_r, r.value);
    max_r = std::max(max_r, r.value);
    const double y = r.value - compensation;
    const double t = sum + y;
    compensation = (t - sum) - y;
    sum = t;
    users.insert(r.user);
    items.insert(r.item);
  }
  stats.min_rating = min_r;
  stats.max_rating = max_r;
  stats.mean_rating = sum / static_cast<double>(ratings.size());
  stats.user_count = users.size();
  stats.item_count = items.size();
  return stats;
}

}  // namespace uniwalk
