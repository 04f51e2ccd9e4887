#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "uniwalk/error.hpp"
#include "uniwalk/eval.hpp"
#include "uniwalk/graph.hpp"
#include "uniwalk/ingest.hpp"
#include "uniwalk/model.hpp"
#include "uniwalk/recommender.hpp"
#include "uniwalk/trainer.hpp"
#include "uniwalk/walker.hpp"

namespace {

using namespace uniwalk;

constexpr int kExitOk = 0;
constexpr int kExitArgument = 2;  // bad arguments, unknown ids
constexpr int kExitIo = 3;        // filesystem failures
constexpr int kExitParse = 4;     // malformed data or model files
constexpr int kExitDiverged = 5;  // training produced non-finite values

std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for digest: " + path.string());
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize k = 0; k < n; ++k) {
      hash ^= static_cast<unsigned char>(buf[k]);
      hash *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return hash;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << v;
  return out.str();
}

/// Resolved key=value view of one command's configuration, reused by
/// --print-config and the run manifest.
using ConfigDump = std::vector<std::pair<std::string, std::string>>;

void print_config(const ConfigDump& dump) {
  for (const auto& [key, value] : dump) std::cout << key << '=' << value << '\n';
}

void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const ConfigDump& dump,
                    const std::vector<std::pair<std::string, std::filesystem::path>>& inputs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write run manifest: " + path.string());
  out << "command=" << command << '\n';
  for (const auto& [key, value] : dump) out << key << '=' << value << '\n';
  for (const auto& [name, file] : inputs)
    out << "digest." << name << "=fnv1a64:" << hex64(fnv1a64_file(file)) << '\n';
  if (!out) throw IoError("failed writing run manifest: " + path.string());
}

struct CommonConfig {
  std::string ratings_path;
  std::string trust_path;
  std::string delimiter;  // empty = whitespace runs
  std::string config_path;
  bool print_config = false;
};

/// Settings resolution: command-line flag > config file > environment
/// variable > built-in default. CLI11 only processes config files attached
/// to the root app, and its environment pass runs before required-option
/// checks, so both layers are applied here by hand once the flags of the
/// active subcommand are known.
struct SettingsRegistry {
  struct Binding {
    CLI::Option* option;
    const char* env;  // nullptr = not settable from the environment
    bool required;
  };
  CLI::Option* config_option = nullptr;
  const std::string* config_path = nullptr;
  std::vector<Binding> bindings;

  CLI::Option* bind(CLI::Option* option, const char* env = nullptr, bool required = false) {
    bindings.push_back({option, env, required});
    return option;
  }
};

std::string_view trim(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  return text;
}

/// Flat key=value lines; blank lines and '#' comments are skipped.
std::vector<std::pair<std::string, std::string>> read_flat_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw uniwalk::ParseError("expected key=value in config file", line_no);
    const std::string_view key = trim(text.substr(0, eq));
    if (key.empty()) throw uniwalk::ParseError("empty key in config file", line_no);
    values.emplace_back(std::string(key), std::string(trim(text.substr(eq + 1))));
  }
  return values;
}

void resolve_settings(const SettingsRegistry& registry) {
  const auto apply = [](CLI::Option* option, const std::string& value) {
    option->add_result(value);
    option->run_callback();
  };

  if (registry.config_option->count() == 0) {
    if (const char* env = std::getenv("UNIWALK_CONFIG"); env != nullptr && *env != '\0')
      apply(registry.config_option, env);
  }
  std::vector<std::pair<std::string, std::string>> file_values;
  if (!registry.config_path->empty()) file_values = read_flat_config(*registry.config_path);

  for (const auto& [key, value] : file_values) {
    const bool known =
        std::any_of(registry.bindings.begin(), registry.bindings.end(),
                    [&](const auto& b) { return b.option->get_lnames().front() == key; });
    if (!known) throw ArgumentError("unknown configuration key '" + key + "'");
  }

  for (const auto& binding : registry.bindings) {
    if (binding.option->count() > 0) continue;  // explicit flag wins
    const std::string& key = binding.option->get_lnames().front();
    const auto in_file =
        std::find_if(file_values.begin(), file_values.end(),
                     [&](const auto& entry) { return entry.first == key; });
    if (in_file != file_values.end()) {
      apply(binding.option, in_file->second);
    } else if (binding.env != nullptr) {
      if (const char* env = std::getenv(binding.env); env != nullptr && *env != '\0')
        apply(binding.option, env);
    }
  }

  for (const auto& binding : registry.bindings) {
    if (binding.required && binding.option->count() == 0)
      throw ArgumentError(binding.option->get_name() + " is required");
  }
}

ParseOptions parse_options(const CommonConfig& common) {
  ParseOptions options;
  if (!common.delimiter.empty()) {
    if (common.delimiter.size() != 1)
      throw ArgumentError("delimiter must be a single character");
    options.delimiter = common.delimiter[0];
  }
  return options;
}

Dataset load(const CommonConfig& common) {
  std::optional<std::filesystem::path> trust;
  if (!common.trust_path.empty()) trust = common.trust_path;
  return load_dataset(common.ratings_path, trust, parse_options(common));
}

void add_common_flags(CLI::App* cmd, CommonConfig& common, SettingsRegistry& registry) {
  registry.bind(cmd->add_option("--ratings", common.ratings_path,
                                "Ratings file (user item rating per line); required"),
                "UNIWALK_RATINGS", true);
  registry.bind(
      cmd->add_option("--trust", common.trust_path, "Trust file (userA userB per line)"),
      "UNIWALK_TRUST");
  registry.bind(cmd->add_option("--delimiter", common.delimiter,
                                "Field delimiter (default: any whitespace run)"),
                "UNIWALK_DELIMITER");
  cmd->add_flag("--print-config", common.print_config,
                "Print the resolved configuration and exit");
  registry.config_option =
      cmd->add_option("--config", common.config_path, "Flat key=value configuration file");
  registry.config_path = &common.config_path;
}

void add_hyperparam_flags(CLI::App* cmd, Hyperparams& hp, SettingsRegistry& registry) {
  registry.bind(cmd->add_option("--c", hp.c, "Social edge weight"), "UNIWALK_C");
  registry.bind(cmd->add_option("--walk-length", hp.l, "Walk length in nodes"),
                "UNIWALK_WALK_LENGTH");
  registry.bind(cmd->add_option("--window", hp.s, "Window radius for pair extraction"),
                "UNIWALK_WINDOW");
  registry.bind(cmd->add_option("--alpha", hp.alpha, "Positive unsupervised weight"),
                "UNIWALK_ALPHA");
  registry.bind(cmd->add_option("--beta", hp.beta, "Negative unsupervised weight"),
                "UNIWALK_BETA");
  registry.bind(cmd->add_option("--dim", hp.d, "Latent dimension"), "UNIWALK_DIM");
  registry.bind(cmd->add_option("--lambda-b", hp.lambda_b, "Bias regularization"),
                "UNIWALK_LAMBDA_B");
  registry.bind(cmd->add_option("--lambda-z", hp.lambda_z, "Latent regularization"),
                "UNIWALK_LAMBDA_Z");
  registry.bind(cmd->add_option("--eta", hp.eta, "Learning rate"), "UNIWALK_ETA");
  registry.bind(cmd->add_option("--gamma", hp.gamma, "Momentum coefficient"), "UNIWALK_GAMMA");
  registry.bind(cmd->add_option("--walks-per-node", hp.walks_per_node,
                                "Walks per node per kind per iteration"),
                "UNIWALK_WALKS_PER_NODE");
  registry.bind(cmd->add_option("--iterations", hp.iterations, "Maximum training iterations"),
                "UNIWALK_ITERATIONS");
  registry.bind(cmd->add_option("--seed", hp.seed, "Random seed"), "UNIWALK_SEED");
  registry.bind(cmd->add_option("--grad-clip", hp.grad_clip, "Per-block gradient norm cap"),
                "UNIWALK_GRAD_CLIP");
  registry.bind(cmd->add_flag("--clamp,!--no-clamp", hp.clamp_predictions,
                              "Clamp predictions into the observed rating range"));
}

void dump_common(ConfigDump& dump, const CommonConfig& common) {
  dump.emplace_back("ratings", common.ratings_path);
  dump.emplace_back("trust", common.trust_path);
  dump.emplace_back("delimiter", common.delimiter);
}

void dump_hyperparams(ConfigDump& dump, const Hyperparams& hp) {
  dump.emplace_back("c", fmt_double(hp.c));
  dump.emplace_back("walk-length", std::to_string(hp.l));
  dump.emplace_back("window", std::to_string(hp.s));
  dump.emplace_back("alpha", fmt_double(hp.alpha));
  dump.emplace_back("beta", fmt_double(hp.beta));
  dump.emplace_back("dim", std::to_string(hp.d));
  dump.emplace_back("lambda-b", fmt_double(hp.lambda_b));
  dump.emplace_back("lambda-z", fmt_double(hp.lambda_z));
  dump.emplace_back("eta", fmt_double(hp.eta));
  dump.emplace_back("gamma", fmt_double(hp.gamma));
  dump.emplace_back("walks-per-node", std::to_string(hp.walks_per_node));
  dump.emplace_back("iterations", std::to_string(hp.iterations));
  dump.emplace_back("seed", std::to_string(hp.seed));
  dump.emplace_back("grad-clip", fmt_double(hp.grad_clip));
  dump.emplace_back("clamp", hp.clamp_predictions ? "true" : "false");
}

std::vector<std::pair<std::string, std::filesystem::path>> input_files(
    const CommonConfig& common) {
  std::vector<std::pair<std::string, std::filesystem::path>> files;
  files.emplace_back("ratings", common.ratings_path);
  if (!common.trust_path.empty()) files.emplace_back("trust", common.trust_path);
  return files;
}

// ---------------------------------------------------------------------------
// train

struct TrainConfig {
  CommonConfig common;
  Hyperparams hp;
  std::string model_path = "uniwalk_model.bin";
  std::string trace_path;  // default: model path + ".trace.tsv"
  std::string dump_walks_path;
  double validation_fraction = 0.1;
  int patience = 3;
  std::string mode = "reference";
  std::string cooc_scope = "all";
  int threads = 0;
};

TrainMode parse_mode(const std::string& mode) {
  if (mode == "reference") return TrainMode::Reference;
  if (mode == "performance") return TrainMode::Performance;
  throw ArgumentError("mode must be 'reference' or 'performance', got '" + mode + "'");
}

CoocScope parse_cooc_scope(const std::string& scope) {
  if (scope == "all") return CoocScope::All;
  if (scope == "last") return CoocScope::Last;
  throw ArgumentError("cooc-scope must be 'all' or 'last', got '" + scope + "'");
}

ConfigDump dump_train(const TrainConfig& cfg) {
  ConfigDump dump;
  dump_common(dump, cfg.common);
  dump_hyperparams(dump, cfg.hp);
  dump.emplace_back("model", cfg.model_path);
  dump.emplace_back("trace", cfg.trace_path);
  dump.emplace_back("dump-walks", cfg.dump_walks_path);
  dump.emplace_back("validation-fraction", fmt_double(cfg.validation_fraction));
  dump.emplace_back("patience", std::to_string(cfg.patience));
  dump.emplace_back("mode", cfg.mode);
  dump.emplace_back("cooc-scope", cfg.cooc_scope);
  dump.emplace_back("threads", std::to_string(cfg.threads));
  return dump;
}

int run_train(TrainConfig& cfg) {
  if (cfg.trace_path.empty()) cfg.trace_path = cfg.model_path + ".trace.tsv";
  const ConfigDump dump = dump_train(cfg);
  if (cfg.common.print_config) {
    print_config(dump);
    return kExitOk;
  }
  cfg.hp.validate();

  const Dataset data = load(cfg.common);
  TrainValSplit tv = carve_validation(data.ratings, cfg.validation_fraction, cfg.hp.seed);
  const EntityIndex index = build_entity_index(tv.train, data.social);
  const DatasetStats stats = compute_stats(tv.train);
  const UnifiedGraph graph = build_unified_graph(tv.train, data.social, cfg.hp.c, index, stats);

  if (!cfg.dump_walks_path.empty()) {
    std::ofstream out(cfg.dump_walks_path, std::ios::trunc);
    if (!out) throw IoError("cannot write walk dump: " + cfg.dump_walks_path);
    TransitionTableCache tables(graph);
    for (WalkKind kind : {WalkKind::Positive, WalkKind::Negative, WalkKind::Unweighted}) {
      const auto walks = generate_walks(graph, tables.get(kind), cfg.hp.walks_per_node,
                                        cfg.hp.l, mix_seed(cfg.hp.seed, 1));
      write_walks(out, walks, index);
    }
  }

  TrainOptions topts;
  topts.mode = parse_mode(cfg.mode);
  topts.cooc_scope = parse_cooc_scope(cfg.cooc_scope);
  topts.threads = cfg.threads;
  topts.patience = cfg.patience;
  topts.validation = std::move(tv.validation);
  const TrainResult result = train(graph, index, stats, cfg.hp, topts);

  ModelArtifact artifact;
  artifact.params = result.params;
  artifact.counts = result.counts;
  artifact.index = index;
  artifact.min_rating = stats.min_rating;
  artifact.max_rating = stats.max_rating;
  save_model(artifact, cfg.model_path);

  std::ofstream trace(cfg.trace_path, std::ios::trunc);
  if (!trace) throw IoError("cannot write training trace: " + cfg.trace_path);
  trace << "iteration\ttrain_rmse\tvalidation_rmse\twall_seconds\n";
  for (const auto& row : result.trace.iterations)
    trace << row.iteration << '\t' << fmt_double(row.train_rmse) << '\t'
          << fmt_double(row.validation_rmse) << '\t' << fmt_double(row.wall_seconds) << '\n';

  write_manifest(cfg.model_path + ".manifest", "train", dump, input_files(cfg.common));

  std::cout << "trained " << index.size() << " entities, " << graph.edge_count() << " edges";
  if (result.trace.best_iteration > 0)
    std::cout << ", best iteration " << result.trace.best_iteration;
  std::cout << "\nmodel written to " << cfg.model_path << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalConfig {
  CommonConfig common;
  Hyperparams hp;
  std::vector<std::string> methods{"uniwalk"};
  int folds = 5;
  int neighbor_k = 50;
  double mf_lambda = 0.1;
  int mf_epochs = 50;
  double validation_fraction = 0.0;  // 0 = train each fold on all k-1 folds
  std::string mode = "reference";
  std::string cooc_scope = "all";
  int threads = 0;
  std::string out_path = "eval_results.tsv";
};

ConfigDump dump_eval(const EvalConfig& cfg) {
  ConfigDump dump;
  dump_common(dump, cfg.common);
  dump_hyperparams(dump, cfg.hp);
  std::string methods;
  for (const auto& m : cfg.methods) {
    if (!methods.empty()) methods += ',';
    methods += m;
  }
  dump.emplace_back("methods", methods);
  dump.emplace_back("folds", std::to_string(cfg.folds));
  dump.emplace_back("neighbor-k", std::to_string(cfg.neighbor_k));
  dump.emplace_back("mf-lambda", fmt_double(cfg.mf_lambda));
  dump.emplace_back("mf-epochs", std::to_string(cfg.mf_epochs));
  dump.emplace_back("validation-fraction", fmt_double(cfg.validation_fraction));
  dump.emplace_back("mode", cfg.mode);
  dump.emplace_back("cooc-scope", cfg.cooc_scope);
  dump.emplace_back("threads", std::to_string(cfg.threads));
  dump.emplace_back("out", cfg.out_path);
  return dump;
}

int run_eval(EvalConfig& cfg) {
  const ConfigDump dump = dump_eval(cfg);
  if (cfg.common.print_config) {
    print_config(dump);
    return kExitOk;
  }
  if (cfg.methods.empty()) throw ArgumentError("need at least one method");
  cfg.hp.validate();

  const Dataset data = load(cfg.common);
  const FoldSplit split = kfold_split(data.ratings.size(), cfg.folds, cfg.hp.seed);

  CvOptions options;
  options.uniwalk = cfg.hp;
  options.mf.d = cfg.hp.d;
  options.mf.eta = cfg.hp.eta;
  options.mf.seed = cfg.hp.seed;
  options.mf.lambda = cfg.mf_lambda;
  options.mf.epochs = cfg.mf_epochs;
  options.neighbor_k = cfg.neighbor_k;
  options.validation_fraction = cfg.validation_fraction;
  options.mode = parse_mode(cfg.mode);
  options.cooc_scope = parse_cooc_scope(cfg.cooc_scope);
  options.threads = cfg.threads;
  options.clamp = cfg.hp.clamp_predictions;

  std::vector<CvResult> results;
  for (const auto& method : cfg.methods) results.push_back(run_cv(method, data, split, options));

  write_metrics_table(std::cout, results);
  std::ofstream out(cfg.out_path, std::ios::trunc);
  if (!out) throw IoError("cannot write results file: " + cfg.out_path);
  write_metrics_delimited(out, results);
  write_manifest(cfg.out_path + ".manifest", "eval", dump, input_files(cfg.common));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// recommend / explain

struct RecommendConfig {
  CommonConfig common;
  std::string model_path;
  std::string user;
  int top_n = 10;
  bool clamp = true;
  std::string out_path = "recommendations.txt";
};

ConfigDump dump_recommend(const RecommendConfig& cfg) {
  ConfigDump dump;
  dump_common(dump, cfg.common);
  dump.emplace_back("model", cfg.model_path);
  dump.emplace_back("user", cfg.user);
  dump.emplace_back("top-n", std::to_string(cfg.top_n));
  dump.emplace_back("clamp", cfg.clamp ? "true" : "false");
  dump.emplace_back("out", cfg.out_path);
  return dump;
}

int run_recommend(RecommendConfig& cfg) {
  const ConfigDump dump = dump_recommend(cfg);
  if (cfg.common.print_config) {
    print_config(dump);
    return kExitOk;
  }
  const ModelArtifact artifact = load_model(cfg.model_path);
  const Dataset data = load(cfg.common);
  const RatingsView ratings(data.ratings, artifact.index);

  const Recommendations recs = recommend_top_n(artifact, ratings, cfg.user, cfg.top_n,
                                               cfg.clamp);
  std::ofstream out(cfg.out_path, std::ios::trunc);
  if (!out) throw IoError("cannot write recommendations: " + cfg.out_path);
  out << "# user " << cfg.user << (recs.user_known ? "" : " (unknown: bias-driven ranking)")
      << '\n';
  for (const auto& [item, rating] : recs.items)
    out << artifact.index.external_id(item) << '\t' << fmt_double(rating) << '\n';

  auto inputs = input_files(cfg.common);
  inputs.emplace_back("model", cfg.model_path);
  write_manifest(cfg.out_path + ".manifest", "recommend", dump, inputs);
  std::cout << "wrote " << recs.items.size() << " recommendations to " << cfg.out_path << '\n';
  return kExitOk;
}

struct ExplainConfig {
  CommonConfig common;
  std::string model_path;
  std::string user;
  ExplainOptions options;
  std::string out_path = "explanation.json";
};

ConfigDump dump_explain(const ExplainConfig& cfg) {
  ConfigDump dump;
  dump_common(dump, cfg.common);
  dump.emplace_back("model", cfg.model_path);
  dump.emplace_back("user", cfg.user);
  dump.emplace_back("top-n", std::to_string(cfg.options.top_n));
  dump.emplace_back("k-expl", std::to_string(cfg.options.k_expl));
  dump.emplace_back("clamp", cfg.options.clamp ? "true" : "false");
  dump.emplace_back("high-threshold", fmt_double(cfg.options.high_threshold));
  dump.emplace_back("low-threshold", fmt_double(cfg.options.low_threshold));
  dump.emplace_back("out", cfg.out_path);
  return dump;
}

int run_explain(ExplainConfig& cfg) {
  const ConfigDump dump = dump_explain(cfg);
  if (cfg.common.print_config) {
    print_config(dump);
    return kExitOk;
  }
  const ModelArtifact artifact = load_model(cfg.model_path);
  if (!artifact.index.find(EntityKind::User, cfg.user))
    throw LookupError("user '" + cfg.user + "' is not in the model");
  const Dataset data = load(cfg.common);
  const RatingsView ratings(data.ratings, artifact.index);
  const SocialView social(data.social, artifact.index);

  const ExplanationReport report =
      build_explanation_report(artifact, ratings, social, cfg.user, cfg.options);
  std::ofstream out(cfg.out_path, std::ios::trunc);
  if (!out) throw IoError("cannot write explanation report: " + cfg.out_path);
  out << report_to_json(report);

  auto inputs = input_files(cfg.common);
  inputs.emplace_back("model", cfg.model_path);
  write_manifest(cfg.out_path + ".manifest", "explain", dump, inputs);
  std::cout << "wrote explanation for user " << cfg.user << " to " << cfg.out_path << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uniwalk: explainable social recommendations from random walks on a unified "
               "user-item graph"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "uniwalk 1.0.0");

  TrainConfig train_cfg;
  SettingsRegistry train_reg;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write it to disk");
  add_common_flags(train_cmd, train_cfg.common, train_reg);
  add_hyperparam_flags(train_cmd, train_cfg.hp, train_reg);
  train_reg.bind(train_cmd->add_option("--model", train_cfg.model_path, "Output model file"));
  train_reg.bind(
      train_cmd->add_option("--trace", train_cfg.trace_path, "Output per-iteration trace file"));
  train_reg.bind(train_cmd->add_option("--dump-walks", train_cfg.dump_walks_path,
                                       "Debug: dump one round of walks per kind to this file"));
  train_reg.bind(train_cmd->add_option("--validation-fraction", train_cfg.validation_fraction,
                                       "Held-out fraction for early stopping (0 disables)"));
  train_reg.bind(train_cmd->add_option("--patience", train_cfg.patience,
                                       "Non-improving iterations before early stop"));
  train_reg.bind(train_cmd->add_option("--mode", train_cfg.mode, "reference | performance"));
  train_reg.bind(train_cmd->add_option("--cooc-scope", train_cfg.cooc_scope,
                                       "Iterations feeding explanation statistics: all | last"));
  train_reg.bind(train_cmd->add_option("--threads", train_cfg.threads,
                                       "Worker threads in performance mode (0 = hardware)"));

  EvalConfig eval_cfg;
  SettingsRegistry eval_reg;
  auto* eval_cmd = app.add_subcommand("eval", "Cross-validated accuracy comparison");
  add_common_flags(eval_cmd, eval_cfg.common, eval_reg);
  add_hyperparam_flags(eval_cmd, eval_cfg.hp, eval_reg);
  eval_reg.bind(eval_cmd
                    ->add_option("--methods", eval_cfg.methods,
                                 "Comma-separated: uniwalk, mf, ucf, icf, mean")
                    ->delimiter(','));
  eval_reg.bind(eval_cmd->add_option("--folds", eval_cfg.folds, "Cross-validation fold count"));
  eval_reg.bind(
      eval_cmd->add_option("--neighbor-k", eval_cfg.neighbor_k, "UCF/ICF neighborhood size"));
  eval_reg.bind(eval_cmd->add_option("--mf-lambda", eval_cfg.mf_lambda, "MF regularization"));
  eval_reg.bind(eval_cmd->add_option("--mf-epochs", eval_cfg.mf_epochs, "MF training epochs"));
  eval_reg.bind(
      eval_cmd->add_option("--validation-fraction", eval_cfg.validation_fraction,
                           "Held-out fraction of each training fold for early "
                           "stopping (0 = train on the whole fold)"));
  eval_reg.bind(eval_cmd->add_option("--mode", eval_cfg.mode, "reference | performance"));
  eval_reg.bind(eval_cmd->add_option("--cooc-scope", eval_cfg.cooc_scope, "all | last"));
  eval_reg.bind(
      eval_cmd->add_option("--threads", eval_cfg.threads, "Concurrent folds (0 = hardware)"));
  eval_reg.bind(
      eval_cmd->add_option("--out", eval_cfg.out_path, "Machine-readable results file"));

  RecommendConfig rec_cfg;
  SettingsRegistry rec_reg;
  auto* rec_cmd = app.add_subcommand("recommend", "Top-N recommendations for one user");
  add_common_flags(rec_cmd, rec_cfg.common, rec_reg);
  rec_reg.bind(
      rec_cmd->add_option("--model", rec_cfg.model_path, "Trained model file; required"),
      nullptr, true);
  rec_reg.bind(rec_cmd->add_option("--user", rec_cfg.user, "Target user id; required"), nullptr,
               true);
  rec_reg.bind(rec_cmd->add_option("--top-n", rec_cfg.top_n, "Number of recommendations"));
  rec_reg.bind(
      rec_cmd->add_flag("--clamp,!--no-clamp", rec_cfg.clamp, "Clamp predicted ratings"));
  rec_reg.bind(rec_cmd->add_option("--out", rec_cfg.out_path, "Output file"));

  ExplainConfig expl_cfg;
  SettingsRegistry expl_reg;
  auto* expl_cmd = app.add_subcommand("explain", "Explained recommendations for one user");
  add_common_flags(expl_cmd, expl_cfg.common, expl_reg);
  expl_reg.bind(
      expl_cmd->add_option("--model", expl_cfg.model_path, "Trained model file; required"),
      nullptr, true);
  expl_reg.bind(expl_cmd->add_option("--user", expl_cfg.user, "Target user id; required"),
                nullptr, true);
  expl_reg.bind(
      expl_cmd->add_option("--top-n", expl_cfg.options.top_n, "Number of recommendations"));
  expl_reg.bind(expl_cmd->add_option("--k-expl", expl_cfg.options.k_expl,
                                     "Similar users/items per explanation"));
  expl_reg.bind(expl_cmd->add_flag("--clamp,!--no-clamp", expl_cfg.options.clamp,
                                   "Clamp predicted ratings"));
  expl_reg.bind(expl_cmd->add_option("--high-threshold", expl_cfg.options.high_threshold,
                                     "Favorite cutoff (default: rating-scale midpoint)"));
  expl_reg.bind(expl_cmd->add_option("--low-threshold", expl_cfg.options.low_threshold,
                                     "Dislike cutoff (default: rating-scale midpoint)"));
  expl_reg.bind(expl_cmd->add_option("--out", expl_cfg.out_path, "Output report file"));

  int exit_code = kExitOk;
  train_cmd->callback([&] {
    resolve_settings(train_reg);
    exit_code = run_train(train_cfg);
  });
  eval_cmd->callback([&] {
    resolve_settings(eval_reg);
    exit_code = run_eval(eval_cfg);
  });
  rec_cmd->callback([&] {
    resolve_settings(rec_reg);
    exit_code = run_recommend(rec_cfg);
  });
  expl_cmd->callback([&] {
    resolve_settings(expl_reg);
    exit_code = run_explain(expl_cfg);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitArgument;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitArgument;
  } catch (const LookupError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitArgument;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const uniwalk::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  }
  return exit_code;
}
