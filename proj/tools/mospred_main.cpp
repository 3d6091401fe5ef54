#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mospred/checkpoint.hpp"
#include "mospred/features.hpp"
#include "mospred/ingest.hpp"
#include "mospred/report.hpp"
#include "mospred/synth.hpp"
#include "mospred/train.hpp"
#include "mospred/tsne.hpp"
#include "mospred/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string compact_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

std::string default_cache_dir() {
  if (const char* env = std::getenv("MOSPRED_CACHE_DIR"); env && *env) return env;
  return ".mospred-cache";
}

// Everything a pipeline run needs, resolvable from a JSON config file with
// command-line flags taking precedence. The resolved form is echoed into the
// run directory so the run can be reproduced from that file alone.
struct RunConfig {
  std::string ratings;
  std::string splits;
  std::string dataset_id;
  std::string extractor = "dummy";
  std::string cache_dir = default_cache_dir();
  std::string out;
  std::string checkpoint;
  std::string ledger;
  mospred::SplitConfig split;
  mospred::HeadConfig head;
  mospred::TrainConfig train;
  std::string eval_split = "validation";
  std::string eval_level = "utterance";
  mospred::TsneConfig tsne;
  int workers = 1;
};

json to_json(const RunConfig& c) {
  json j;
  j["ratings"] = c.ratings;
  j["splits"] = c.splits;
  j["dataset_id"] = c.dataset_id;
  j["extractor"] = c.extractor;
  j["cache_dir"] = c.cache_dir;
  j["out"] = c.out;
  j["checkpoint"] = c.checkpoint;
  j["ledger"] = c.ledger;
  j["split"] = {{"train_fraction", c.split.train_fraction},
                {"test_fraction", c.split.test_fraction},
                {"validation_fraction", c.split.validation_fraction},
                {"seed", c.split.seed},
                {"stratify_by_score", c.split.stratify_by_score}};
  j["head"] = {{"hidden_dim", c.head.hidden_dim}, {"dropout_rate", c.head.dropout_rate}};
  j["train"] = {{"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"max_epochs", c.train.max_epochs},
                {"patience_epochs", c.train.patience_epochs},
                {"seed", c.train.seed}};
  j["eval_split"] = c.eval_split;
  j["eval_level"] = c.eval_level;
  j["tsne"] = {{"perplexity", c.tsne.perplexity},
               {"iterations", c.tsne.iterations},
               {"seed", c.tsne.seed},
               {"learning_rate", c.tsne.learning_rate}};
  j["workers"] = c.workers;
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void from_json_file(const fs::path& path, RunConfig& c) {
  json j;
  try {
    j = json::parse(mospred::read_text_file(path));
  } catch (const json::exception& e) {
    throw mospred::UserError("bad config file " + path.string() + ": " + e.what());
  }
  maybe(j, "ratings", c.ratings);
  maybe(j, "splits", c.splits);
  maybe(j, "dataset_id", c.dataset_id);
  maybe(j, "extractor", c.extractor);
  maybe(j, "cache_dir", c.cache_dir);
  maybe(j, "out", c.out);
  maybe(j, "checkpoint", c.checkpoint);
  maybe(j, "ledger", c.ledger);
  if (j.contains("split")) {
    const json& s = j["split"];
    maybe(s, "train_fraction", c.split.train_fraction);
    maybe(s, "test_fraction", c.split.test_fraction);
    maybe(s, "validation_fraction", c.split.validation_fraction);
    maybe(s, "seed", c.split.seed);
    maybe(s, "stratify_by_score", c.split.stratify_by_score);
  }
  if (j.contains("head")) {
    const json& h = j["head"];
    maybe(h, "hidden_dim", c.head.hidden_dim);
    maybe(h, "dropout_rate", c.head.dropout_rate);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    maybe(t, "batch_size", c.train.batch_size);
    maybe(t, "learning_rate", c.train.learning_rate);
    maybe(t, "max_epochs", c.train.max_epochs);
    maybe(t, "patience_epochs", c.train.patience_epochs);
    maybe(t, "seed", c.train.seed);
  }
  maybe(j, "eval_split", c.eval_split);
  maybe(j, "eval_level", c.eval_level);
  if (j.contains("tsne")) {
    const json& t = j["tsne"];
    maybe(t, "perplexity", c.tsne.perplexity);
    maybe(t, "iterations", c.tsne.iterations);
    maybe(t, "seed", c.tsne.seed);
    maybe(t, "learning_rate", c.tsne.learning_rate);
  }
  maybe(j, "workers", c.workers);
}

// Applies flag values over config-file values after parsing: a deferred
// assignment runs only when its flag was actually given.
struct Overrides {
  std::vector<std::pair<CLI::Option*, std::function<void()>>> items;

  void bind(CLI::Option* option, std::function<void()> assign) {
    items.emplace_back(option, std::move(assign));
  }
  void apply() const {
    for (const auto& [option, assign] : items) {
      if (option->count() > 0) assign();
    }
  }
};

// Shared flag surface for the pipeline subcommands. Each flag writes into
// `flags` during parsing and is copied onto the resolved config afterwards.
struct PipelineArgs {
  std::string config_path;
  RunConfig flags;
  Overrides overrides;

  void add_config(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run config; flags override its values");
  }
  void add_data(CLI::App* cmd, RunConfig& resolved) {
    overrides.bind(cmd->add_option("--ratings", flags.ratings, "ratings CSV"),
                   [this, &resolved] { resolved.ratings = flags.ratings; });
    overrides.bind(cmd->add_option("--splits", flags.splits, "split assignment CSV"),
                   [this, &resolved] { resolved.splits = flags.splits; });
    overrides.bind(
        cmd->add_option("--dataset-id", flags.dataset_id, "dataset name for reports"),
        [this, &resolved] { resolved.dataset_id = flags.dataset_id; });
  }
  void add_extractor(CLI::App* cmd, RunConfig& resolved) {
    overrides.bind(cmd->add_option("--extractor", flags.extractor, "extractor id"),
                   [this, &resolved] { resolved.extractor = flags.extractor; });
    overrides.bind(
        cmd->add_option("--cache", flags.cache_dir,
                        "embedding cache root (default $MOSPRED_CACHE_DIR or .mospred-cache)"),
        [this, &resolved] { resolved.cache_dir = flags.cache_dir; });
  }
  void add_out(CLI::App* cmd, RunConfig& resolved) {
    overrides.bind(cmd->add_option("--out", flags.out, "output directory"),
                   [this, &resolved] { resolved.out = flags.out; });
  }
  void add_train(CLI::App* cmd, RunConfig& resolved) {
    overrides.bind(cmd->add_option("--hidden-dim", flags.head.hidden_dim, "head hidden width"),
                   [this, &resolved] { resolved.head.hidden_dim = flags.head.hidden_dim; });
    overrides.bind(cmd->add_option("--dropout", flags.head.dropout_rate, "head dropout rate"),
                   [this, &resolved] { resolved.head.dropout_rate = flags.head.dropout_rate; });
    overrides.bind(cmd->add_option("--batch-size", flags.train.batch_size, "batch size"),
                   [this, &resolved] { resolved.train.batch_size = flags.train.batch_size; });
    overrides.bind(
        cmd->add_option("--learning-rate", flags.train.learning_rate, "optimizer step size"),
        [this, &resolved] { resolved.train.learning_rate = flags.train.learning_rate; });
    overrides.bind(cmd->add_option("--max-epochs", flags.train.max_epochs, "epoch limit"),
                   [this, &resolved] { resolved.train.max_epochs = flags.train.max_epochs; });
    overrides.bind(
        cmd->add_option("--patience", flags.train.patience_epochs,
                        "epochs without test-SRCC improvement before stopping"),
        [this, &resolved] { resolved.train.patience_epochs = flags.train.patience_epochs; });
    overrides.bind(cmd->add_option("--seed", flags.train.seed, "training seed"),
                   [this, &resolved] { resolved.train.seed = flags.train.seed; });
  }

  // Resolution order: defaults, then config-file values, then explicit flags.
  // `resolved` must be the same object the bind() lambdas write into.
  void resolve_into(RunConfig& resolved) {
    if (!config_path.empty()) from_json_file(config_path, resolved);
    overrides.apply();
  }
};

fs::path ensure_out_dir(RunConfig& config, const std::string& command) {
  if (config.out.empty()) {
    config.out = (fs::path("runs") / (command + "-" + compact_timestamp())).string();
  }
  fs::create_directories(config.out);
  return config.out;
}

void echo_config(const RunConfig& config, const std::string& command, const fs::path& out_dir) {
  json j = to_json(config);
  j["command"] = command;
  mospred::write_text_file(out_dir / "runconfig.json", j.dump(2) + "\n");
}

mospred::DatasetManifest load_dataset(const RunConfig& config, bool need_splits) {
  if (config.ratings.empty()) throw mospred::UserError("--ratings is required");
  auto manifest = mospred::load_ratings(config.ratings, config.dataset_id);
  if (!config.splits.empty()) {
    mospred::load_split_file(config.splits, manifest);
  } else if (need_splits) {
    throw mospred::UserError("--splits is required (run `mospred ingest` first)");
  }
  return manifest;
}

mospred::Split parse_split(const std::string& name) {
  const auto split = mospred::split_from_string(name);
  if (!split) throw mospred::UserError("unknown split: " + name);
  return *split;
}

mospred::Level parse_level(const std::string& name) {
  const auto level = mospred::level_from_string(name);
  if (!level) throw mospred::UserError("unknown level: " + name);
  return *level;
}

void write_history_csv(const fs::path& path, const mospred::Checkpoint& ckpt) {
  std::string text = "epoch,train_loss,test_srcc\n";
  for (std::size_t i = 0; i < ckpt.history.size(); ++i) {
    const auto& stats = ckpt.history[i];
    text += std::to_string(i + 1) + "," + mospred::format_fixed(stats.train_loss, 8) + ",";
    text += std::isnan(stats.test_srcc) ? "undefined" : mospred::format_fixed(stats.test_srcc, 8);
    text += "\n";
  }
  mospred::write_text_file(path, text);
}

void print_train_summary(const mospred::Checkpoint& ckpt) {
  std::cout << "epochs run: " << ckpt.history.size() << "\n";
  if (ckpt.best_epoch > 0) {
    std::cout << "best epoch: " << ckpt.best_epoch << " (test SRCC "
              << mospred::format_fixed(ckpt.history[ckpt.best_epoch - 1].test_srcc, 4) << ")\n";
  } else {
    std::cout << "best epoch: none (selection metric never defined)\n";
  }
}

json metrics_json(const mospred::MetricReport& r) {
  json j;
  j["extractor_id"] = r.extractor_id;
  j["dataset_id"] = r.dataset_id;
  j["split"] = mospred::to_string(r.split);
  j["level"] = mospred::to_string(r.level);
  j["lcc"] = r.lcc;
  j["srcc"] = r.srcc;
  j["ktau"] = r.ktau;
  j["mse"] = r.mse;
  j["mse_raw"] = r.mse * 16.0;
  j["n"] = r.n;
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"MOS prediction from pretrained speech representations"};
  app.require_subcommand(1);

  const mospred::ExtractorRegistry registry = mospred::ExtractorRegistry::builtin();

  // ---- synth ----
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic rated corpus");
  mospred::SynthConfig synth_config;
  std::string synth_out;
  std::string synth_profile = "linear";
  synth_cmd->add_option("--out", synth_out, "corpus directory")->required();
  synth_cmd->add_option("--count", synth_config.count, "number of utterances");
  synth_cmd->add_option("--seed", synth_config.seed, "generator seed");
  synth_cmd->add_option("--raters", synth_config.raters_per_utterance, "ratings per utterance");
  synth_cmd->add_option("--jitter", synth_config.rater_jitter, "per-rater score jitter");
  synth_cmd->add_option("--profile", synth_profile, "quality-to-score profile: linear|inverted");
  synth_cmd->add_option("--systems", synth_config.num_systems, "number of synthetic systems");
  synth_cmd->add_option("--duration", synth_config.duration_s, "clip length in seconds");

  // ---- ingest ----
  auto* ingest_cmd = app.add_subcommand("ingest", "validate ratings and assign splits");
  std::string ingest_ratings, ingest_out, ingest_dataset_id, ingest_fractions;
  mospred::SplitConfig ingest_split;
  bool ingest_no_stratify = false;
  ingest_cmd->add_option("--ratings", ingest_ratings, "ratings CSV")->required();
  ingest_cmd->add_option("--out", ingest_out, "output directory")->required();
  ingest_cmd->add_option("--dataset-id", ingest_dataset_id, "dataset name");
  ingest_cmd->add_option("--splits", ingest_fractions,
                         "train,test,validation fractions (default 0.8,0.1,0.1)");
  ingest_cmd->add_option("--seed", ingest_split.seed, "split seed");
  ingest_cmd->add_flag("--no-stratify", ingest_no_stratify, "disable score stratification");

  // ---- extract ----
  auto* extract_cmd = app.add_subcommand("extract", "fill the embedding cache");
  PipelineArgs extract_args;
  RunConfig extract_config;
  extract_args.add_config(extract_cmd);
  extract_args.add_data(extract_cmd, extract_config);
  extract_args.add_extractor(extract_cmd, extract_config);
  extract_args.overrides.bind(
      extract_cmd->add_option("--workers", extract_args.flags.workers, "parallel extractors"),
      [&] { extract_config.workers = extract_args.flags.workers; });

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train the regression head");
  PipelineArgs train_args;
  RunConfig train_config;
  train_args.add_config(train_cmd);
  train_args.add_data(train_cmd, train_config);
  train_args.add_extractor(train_cmd, train_config);
  train_args.add_out(train_cmd, train_config);
  train_args.add_train(train_cmd, train_config);

  // ---- finetune ----
  auto* finetune_cmd = app.add_subcommand("finetune", "continue training on a new dataset");
  PipelineArgs finetune_args;
  RunConfig finetune_config;
  finetune_args.add_config(finetune_cmd);
  finetune_args.add_data(finetune_cmd, finetune_config);
  finetune_args.add_extractor(finetune_cmd, finetune_config);
  finetune_args.add_out(finetune_cmd, finetune_config);
  finetune_args.add_train(finetune_cmd, finetune_config);
  finetune_args.overrides.bind(
      finetune_cmd->add_option("--checkpoint", finetune_args.flags.checkpoint,
                               "base checkpoint file"),
      [&] { finetune_config.checkpoint = finetune_args.flags.checkpoint; });

  // ---- evaluate ----
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a checkpoint on a split");
  PipelineArgs evaluate_args;
  RunConfig evaluate_config;
  evaluate_args.add_config(evaluate_cmd);
  evaluate_args.add_data(evaluate_cmd, evaluate_config);
  evaluate_args.add_extractor(evaluate_cmd, evaluate_config);
  evaluate_args.add_out(evaluate_cmd, evaluate_config);
  evaluate_args.overrides.bind(
      evaluate_cmd->add_option("--checkpoint", evaluate_args.flags.checkpoint,
                               "checkpoint file"),
      [&] { evaluate_config.checkpoint = evaluate_args.flags.checkpoint; });
  evaluate_args.overrides.bind(
      evaluate_cmd->add_option("--split", evaluate_args.flags.eval_split,
                               "train|test|validation"),
      [&] { evaluate_config.eval_split = evaluate_args.flags.eval_split; });
  evaluate_args.overrides.bind(
      evaluate_cmd->add_option("--level", evaluate_args.flags.eval_level, "utterance|system"),
      [&] { evaluate_config.eval_level = evaluate_args.flags.eval_level; });
  evaluate_args.overrides.bind(
      evaluate_cmd->add_option("--ledger", evaluate_args.flags.ledger, "results ledger JSONL"),
      [&] { evaluate_config.ledger = evaluate_args.flags.ledger; });

  // ---- project ----
  auto* project_cmd = app.add_subcommand("project", "2-D t-SNE map of pooled embeddings");
  PipelineArgs project_args;
  RunConfig project_config;
  project_args.add_config(project_cmd);
  project_args.add_data(project_cmd, project_config);
  project_args.add_extractor(project_cmd, project_config);
  project_args.add_out(project_cmd, project_config);
  project_args.overrides.bind(
      project_cmd->add_option("--perplexity", project_args.flags.tsne.perplexity,
                              "t-SNE perplexity"),
      [&] { project_config.tsne.perplexity = project_args.flags.tsne.perplexity; });
  project_args.overrides.bind(
      project_cmd->add_option("--iterations", project_args.flags.tsne.iterations,
                              "t-SNE iterations"),
      [&] { project_config.tsne.iterations = project_args.flags.tsne.iterations; });
  project_args.overrides.bind(
      project_cmd->add_option("--seed", project_args.flags.tsne.seed, "t-SNE layout seed"),
      [&] { project_config.tsne.seed = project_args.flags.tsne.seed; });

  // ---- report ----
  auto* report_cmd = app.add_subcommand("report", "render tables and plots from the ledger");
  PipelineArgs report_args;
  RunConfig report_config;
  report_args.add_config(report_cmd);
  report_args.add_data(report_cmd, report_config);
  report_args.add_out(report_cmd, report_config);
  report_args.overrides.bind(
      report_cmd->add_option("--ledger", report_args.flags.ledger, "results ledger JSONL"),
      [&] { report_config.ledger = report_args.flags.ledger; });
  report_args.overrides.bind(
      report_cmd->add_option("--split", report_args.flags.eval_split, "split to report"),
      [&] { report_config.eval_split = report_args.flags.eval_split; });
  report_args.overrides.bind(
      report_cmd->add_option("--level", report_args.flags.eval_level, "level to report"),
      [&] { report_config.eval_level = report_args.flags.eval_level; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the message or help text
    return code == 0 ? 0 : 1;     // bad flags are user errors
  }

  if (synth_cmd->parsed()) {
    if (synth_profile == "inverted") {
      synth_config.profile = mospred::QualityProfile::Inverted;
    } else if (synth_profile != "linear") {
      throw mospred::UserError("unknown profile: " + synth_profile);
    }
    const auto corpus = mospred::synth_corpus(synth_out, synth_config);
    std::cout << "wrote " << corpus.manifest.utterances.size() << " utterances under "
              << synth_out << "\n";
    std::cout << "ratings: " << corpus.ratings_file.string() << "\n";
    return 0;
  }

  if (ingest_cmd->parsed()) {
    if (!ingest_fractions.empty()) {
      const auto parts = mospred::split_string(ingest_fractions, ',');
      if (parts.size() != 3) {
        throw mospred::UserError("--splits needs three comma-separated fractions");
      }
      try {
        ingest_split.train_fraction = std::stod(parts[0]);
        ingest_split.test_fraction = std::stod(parts[1]);
        ingest_split.validation_fraction = std::stod(parts[2]);
      } catch (const std::exception&) {
        throw mospred::UserError("bad split fractions: " + ingest_fractions);
      }
    }
    ingest_split.stratify_by_score = !ingest_no_stratify;
    auto manifest = mospred::load_ratings(ingest_ratings, ingest_dataset_id);
    auto result = mospred::assign_splits(manifest, ingest_split);
    for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";
    fs::create_directories(ingest_out);
    mospred::write_ratings(fs::path(ingest_out) / "ratings.csv", result.manifest);
    mospred::write_split_file(fs::path(ingest_out) / "splits.csv", result.manifest);
    json summary;
    summary["dataset_id"] = result.manifest.dataset_id;
    summary["utterances"] = result.manifest.utterances.size();
    for (const auto split : {mospred::Split::Train, mospred::Split::Test,
                             mospred::Split::Validation}) {
      summary[mospred::to_string(split)] = result.manifest.in_split(split).size();
    }
    summary["seed"] = ingest_split.seed;
    summary["stratified"] = ingest_split.stratify_by_score;
    mospred::write_text_file(fs::path(ingest_out) / "dataset.json", summary.dump(2) + "\n");
    std::cout << "ingested " << result.manifest.utterances.size() << " utterances ("
              << result.manifest.in_split(mospred::Split::Train).size() << " train, "
              << result.manifest.in_split(mospred::Split::Test).size() << " test, "
              << result.manifest.in_split(mospred::Split::Validation).size()
              << " validation)\n";
    return 0;
  }

  if (extract_cmd->parsed()) {
    extract_args.resolve_into(extract_config);
    RunConfig& config = extract_config;
    const auto manifest = load_dataset(config, false);
    const auto coverage = mospred::extract_all(registry, config.extractor, manifest,
                                               config.cache_dir, config.workers);
    std::cout << "cache hits: " << coverage.hits << ", extracted: " << coverage.misses
              << ", failures: " << coverage.failures.size() << "\n";
    for (const auto& failure : coverage.failures) {
      std::cerr << "failed: " << failure.utterance_id << ": " << failure.message << "\n";
    }
    return coverage.failures.empty() ? 0 : 1;
  }

  if (train_cmd->parsed() || finetune_cmd->parsed()) {
    const bool is_finetune = finetune_cmd->parsed();
    if (is_finetune) finetune_args.resolve_into(finetune_config); else train_args.resolve_into(train_config);
    RunConfig& config = is_finetune ? finetune_config : train_config;
    const auto manifest = load_dataset(config, true);
    const fs::path out_dir = ensure_out_dir(config, is_finetune ? "finetune" : "train");
    echo_config(config, is_finetune ? "finetune" : "train", out_dir);
    mospred::FeatureStore features(registry, config.extractor, config.cache_dir);
    mospred::Checkpoint ckpt;
    if (is_finetune) {
      if (config.checkpoint.empty()) throw mospred::UserError("--checkpoint is required");
      const auto base = mospred::load_checkpoint(config.checkpoint);
      ckpt = mospred::finetune(base, features, manifest, config.train);
    } else {
      ckpt = mospred::train(features, manifest, config.head, config.train);
    }
    mospred::save_checkpoint(ckpt, out_dir / "checkpoint.mosc");
    write_history_csv(out_dir / "history.csv", ckpt);
    print_train_summary(ckpt);
    std::cout << "checkpoint: " << (out_dir / "checkpoint.mosc").string() << "\n";
    return 0;
  }

  if (evaluate_cmd->parsed()) {
    evaluate_args.resolve_into(evaluate_config);
    RunConfig& config = evaluate_config;
    if (config.checkpoint.empty()) throw mospred::UserError("--checkpoint is required");
    if (!fs::exists(config.checkpoint)) {
      throw mospred::UserError("no checkpoint at " + config.checkpoint +
                               " (run `mospred train` first)");
    }
    const auto manifest = load_dataset(config, true);
    const auto ckpt = mospred::load_checkpoint(config.checkpoint);
    mospred::FeatureStore features(registry, ckpt.extractor_id, config.cache_dir);
    const auto split = parse_split(config.eval_split);
    const auto level = parse_level(config.eval_level);
    const auto report = mospred::evaluate(ckpt, features, manifest, split, level);

    const json j = metrics_json(report);
    std::cout << j.dump(2) << "\n";
    const fs::path out_dir = ensure_out_dir(config, "evaluate");
    echo_config(config, "evaluate", out_dir);
    const std::string name = "metrics-" + report.extractor_id + "-" + report.dataset_id + "-" +
                             mospred::to_string(report.split) + "-" +
                             mospred::to_string(report.level) + ".json";
    mospred::write_text_file(out_dir / name, j.dump(2) + "\n");
    if (!config.ledger.empty()) {
      mospred::ResultsLedger::append(config.ledger, report, utc_timestamp());
    }
    return 0;
  }

  if (project_cmd->parsed()) {
    project_args.resolve_into(project_config);
    RunConfig& config = project_config;
    const auto manifest = load_dataset(config, false);
    mospred::require_valid(manifest);
    const fs::path out_dir = ensure_out_dir(config, "project");
    echo_config(config, "project", out_dir);
    mospred::FeatureStore features(registry, config.extractor, config.cache_dir);

    std::vector<std::vector<double>> pooled;
    std::vector<int> colors;
    std::vector<std::string> ids;
    for (const auto& u : manifest.utterances) {
      pooled.push_back(features.pooled(u));
      colors.push_back(mospred::rounded_mos(mospred::make_mos_label(u.ratings).raw));
      ids.push_back(u.utterance_id);
    }
    const auto projection =
        mospred::tsne_projection(pooled, colors, ids, config.extractor, config.tsne);
    mospred::write_text_file(out_dir / "projection.svg", mospred::projection_svg(projection));
    mospred::write_text_file(out_dir / "projection.csv", mospred::projection_csv(projection));
    std::cout << "projected " << projection.size() << " utterances to "
              << (out_dir / "projection.svg").string() << "\n";
    return 0;
  }

  if (report_cmd->parsed()) {
    report_args.resolve_into(report_config);
    RunConfig& config = report_config;
    if (config.ledger.empty()) throw mospred::UserError("--ledger is required");
    if (config.dataset_id.empty()) throw mospred::UserError("--dataset-id is required");
    const auto ledger = mospred::ResultsLedger::load(config.ledger);
    const auto split = parse_split(config.eval_split);
    const auto level = parse_level(config.eval_level);
    const fs::path out_dir = ensure_out_dir(config, "report");
    echo_config(config, "report", out_dir);

    const auto table =
        mospred::render_results_table(ledger, registry, config.dataset_id, split, level);
    mospred::write_text_file(out_dir / "table.txt", table.text);
    mospred::write_text_file(out_dir / "table.csv", table.csv);
    std::cout << table.text;

    try {
      const auto ranking =
          mospred::ranking_plot(ledger, registry, config.dataset_id, split, level);
      mospred::write_text_file(out_dir / "ranking.svg", ranking.svg);
      mospred::write_text_file(out_dir / "ranking.csv", ranking.csv);
    } catch (const mospred::UserError& e) {
      std::cerr << "ranking plot skipped: " << e.what() << "\n";
    }

    if (!config.ratings.empty()) {
      const auto manifest = mospred::load_ratings(config.ratings, config.dataset_id);
      const auto histogram = mospred::score_histogram(manifest);
      for (const auto& warning : histogram.warnings) std::cerr << "warning: " << warning << "\n";
      mospred::write_text_file(out_dir / "histogram.svg", histogram.svg);
      mospred::write_text_file(out_dir / "histogram.csv", histogram.csv);
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mospred::UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
