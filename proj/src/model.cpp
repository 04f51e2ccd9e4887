#include "uniwalk/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "uniwalk/error.hpp"
#include "uniwalk/rng.hpp"

namespace uniwalk {

void Hyperparams::validate() const {
  if (!(c > 0.0)) throw ArgumentError("c must be positive");
  if (l < 2) throw ArgumentError("walk length l must be at least 2");
  if (s < 1) throw ArgumentError("window radius s must be at least 1");
  if (alpha < 0.0) throw ArgumentError("alpha must be nonnegative");
  if (beta < 0.0) throw ArgumentError("beta must be nonnegative");
  if (d < 1) throw ArgumentError("dimension d must be at least 1");
  if (lambda_b < 0.0) throw ArgumentError("lambda_b must be nonnegative");
  if (lambda_z < 0.0) throw ArgumentError("lambda_z must be nonnegative");
  if (!(eta > 0.0)) throw ArgumentError("eta must be positive");
  if (gamma < 0.0 || gamma >= 1.0) throw ArgumentError("gamma must be in [0, 1)");
  if (walks_per_node < 1) throw ArgumentError("walks_per_node must be at least 1");
  if (iterations < 1) throw ArgumentError("iterations must be at least 1");
  if (!(grad_clip > 0.0)) throw ArgumentError("grad_clip must be positive");
}

ModelParams init_model(const EntityIndex& index, int d, double mu, std::uint64_t seed) {
  if (d < 1) throw ArgumentError("dimension d must be at least 1");
  ModelParams model;
  model.mu = mu;
  model.d = d;
  const auto n = static_cast<Eigen::Index>(index.size());
  model.bias = Eigen::VectorXd::Zero(n);
  model.latent.resize(n, d);
  const double scale = 0.5 / std::sqrt(static_cast<double>(d));
  std::mt19937_64 rng(mix_seed(seed, 0x696e6974ULL));  // "init"
  for (Eigen::Index v = 0; v < n; ++v)
    for (int k = 0; k < d; ++k)
      model.latent(v, k) = (2.0 * uniform_unit(rng) - 1.0) * scale;
  return model;
}

namespace {

constexpr char kMagic[4] = {'U', 'W', 'L', 'K'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(buf, 4);
  }
  void u64(std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(buf, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() {
    char c;
    if (!in_.get(c)) fail();
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() {
    char buf[4];
    if (!in_.read(buf, 4)) fail();
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    char buf[8];
    if (!in_.read(buf, 8)) fail();
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[i])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    std::string s(n, '\0');
    if (n > 0 && !in_.read(s.data(), n)) fail();
    return s;
  }

 private:
  [[noreturn]] void fail() { throw FormatError("model file truncated"); }
  std::istream& in_;
};

}  // namespace

void save_model(const ModelArtifact& artifact, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open model file for writing: " + path.string());

  const ModelParams& m = artifact.params;
  out.write(kMagic, 4);
  Writer w(out);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(m.d));
  w.f64(m.mu);
  w.f64(artifact.min_rating);
  w.f64(artifact.max_rating);
  w.u64(artifact.index.size());

  for (std::size_t v = 0; v < artifact.index.size(); ++v) {
    const EntityId id = static_cast<EntityId>(v);
    w.u8(static_cast<std::uint8_t>(artifact.index.kind(id)));
    w.str(artifact.index.external_id(id));
    w.f64(m.bias(id));
  }
  for (Eigen::Index v = 0; v < m.latent.rows(); ++v)
    for (int k = 0; k < m.d; ++k) w.f64(m.latent(v, k));

  const auto pairs = artifact.counts.sorted_pairs();
  w.u64(pairs.size());
  for (const auto& [key, count] : pairs) {
    w.u64(key);
    w.u64(static_cast<std::uint64_t>(count));
  }
  const auto totals = artifact.counts.sorted_totals();
  w.u64(totals.size());
  for (const auto& [v, count] : totals) {
    w.u32(static_cast<std::uint32_t>(v));
    w.u64(static_cast<std::uint64_t>(count));
  }
  out.flush();
  if (!out) throw IoError("failed writing model file: " + path.string());
}

ModelArtifact load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path.string());

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("not a model file (bad magic): " + path.string());
  Reader r(in);
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw FormatError("unsupported model format version " + std::to_string(version));

  ModelArtifact artifact;
  ModelParams& m = artifact.params;
  m.d = static_cast<int>(r.u32());
  m.mu = r.f64();
  artifact.min_rating = r.f64();
  artifact.max_rating = r.f64();
  const std::uint64_t entity_count = r.u64();

  m.bias.resize(static_cast<Eigen::Index>(entity_count));
  m.latent.resize(static_cast<Eigen::Index>(entity_count), m.d);
  for (std::uint64_t v = 0; v < entity_count; ++v) {
    const auto kind = static_cast<EntityKind>(r.u8());
    const std::string external = r.str();
    const EntityId id = artifact.index.add(kind, external);
    if (static_cast<std::uint64_t>(id) != v)
      throw FormatError("duplicate entity in model file: " + external);
    m.bias(static_cast<Eigen::Index>(v)) = r.f64();
  }
  for (std::uint64_t v = 0; v < entity_count; ++v)
    for (int k = 0; k < m.d; ++k) m.latent(static_cast<Eigen::Index>(v), k) = r.f64();

  const std::uint64_t pair_entries = r.u64();
  for (std::uint64_t e = 0; e < pair_entries; ++e) {
    const std::uint64_t key = r.u64();
    const std::uint64_t count = r.u64();
    artifact.counts.insert_pair_entry(key, static_cast<std::int64_t>(count));
  }
  const std::uint64_t total_entries = r.u64();
  for (std::uint64_t e = 0; e < total_entries; ++e) {
    const EntityId v = static_cast<EntityId>(r.u32());
    const std::uint64_t count = r.u64();
    artifact.counts.insert_total_entry(v, static_cast<std::int64_t>(count));
  }
  return artifact;
}

}  // namespace uniwalk
