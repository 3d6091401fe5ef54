#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mospred/checkpoint.hpp"
#include "mospred/features.hpp"
#include "mospred/ingest.hpp"
#include "mospred/synth.hpp"
#include "mospred/train.hpp"
#include "mospred/util.hpp"

using namespace mospred;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mospred-tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct Pipeline {
  std::filesystem::path dir;
  ExtractorRegistry registry = ExtractorRegistry::builtin();
  DatasetManifest manifest;
  std::unique_ptr<FeatureStore> store;
};

// Synthetic corpus -> splits -> warmed embedding cache, ready for training.
std::unique_ptr<Pipeline> make_pipeline(const std::string& name, std::size_t count,
                                        std::uint64_t synth_seed,
                                        QualityProfile profile = QualityProfile::Linear,
                                        std::uint32_t raters = 8, bool stratify = false) {
  auto p = std::make_unique<Pipeline>();
  p->dir = scratch_dir(name);
  SynthConfig sc;
  sc.count = count;
  sc.seed = synth_seed;
  sc.raters_per_utterance = raters;
  sc.rater_jitter = 0.5;
  sc.profile = profile;
  const auto corpus = synth_corpus(p->dir / "corpus", sc);
  p->manifest = assign_splits(corpus.manifest, {0.7, 0.15, 0.15, 5, stratify}).manifest;
  extract_all(p->registry, "dummy", p->manifest, p->dir / "cache", 1);
  p->store = std::make_unique<FeatureStore>(p->registry, "dummy", p->dir / "cache");
  return p;
}

// One corpus shared by the cases that only read from it.
const Pipeline& shared_pipeline() {
  static const std::unique_ptr<Pipeline> p = make_pipeline("train-shared", 64, 11);
  return *p;
}

HeadConfig small_head() {
  HeadConfig h;
  h.hidden_dim = 4;
  h.dropout_rate = 0.05;
  return h;
}

TrainConfig quick_train(std::uint64_t seed) {
  TrainConfig t;
  t.batch_size = 16;
  t.learning_rate = 0.01;
  t.max_epochs = 80;
  t.patience_epochs = 60;
  t.seed = seed;
  return t;
}

bool params_equal(const HeadParams& a, const HeadParams& b) {
  return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
}

}  // namespace

TEST_CASE("train config rejects out-of-range values") {
  TrainConfig c = quick_train(0);
  CHECK_NOTHROW(c.validate());

  c = quick_train(0);
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), UserError);

  c = quick_train(0);
  c.learning_rate = -0.1;
  CHECK_THROWS_AS(c.validate(), UserError);
  c.learning_rate = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(c.validate(), UserError);

  c = quick_train(0);
  c.max_epochs = 0;
  CHECK_THROWS_AS(c.validate(), UserError);

  c = quick_train(0);
  c.patience_epochs = 0;
  CHECK_THROWS_AS(c.validate(), UserError);

  // Patience must leave room to stop before the epoch limit.
  c = quick_train(0);
  c.patience_epochs = c.max_epochs;
  CHECK_THROWS_AS(c.validate(), UserError);
  c.patience_epochs = c.max_epochs - 1;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("training learns a target planted in the features") {
  // Feature 0 carries the quality signal; the other 63 dims are per-utterance
  // noise the head could memorize. A corpus this size with low-noise labels
  // makes the true feature win, so validation metrics prove generalization.
  const auto p = make_pipeline("train-learn", 256, 11, QualityProfile::Linear,
                               /*raters=*/32, /*stratify=*/true);
  TrainConfig tc = quick_train(3);
  tc.max_epochs = 200;
  tc.patience_epochs = 120;
  const auto ckpt = train(*p->store, p->manifest, small_head(), tc);

  CHECK(ckpt.extractor_id == "dummy");
  CHECK(ckpt.head_config.input_dim == 64);  // filled in from the extractor
  CHECK(ckpt.best_epoch >= 1);
  REQUIRE(ckpt.lineage.size() == 1);
  CHECK(ckpt.lineage[0].dataset_id == "corpus");
  CHECK(ckpt.lineage[0].phase == "pretrain");
  CHECK(ckpt.history.size() >= ckpt.best_epoch);

  const auto on_train = evaluate(ckpt, *p->store, p->manifest, Split::Train);
  const auto on_val = evaluate(ckpt, *p->store, p->manifest, Split::Validation);
  CHECK(on_train.lcc > 0.95);
  CHECK(on_val.lcc > 0.9);
  CHECK(on_val.srcc > 0.8);
  CHECK(on_val.mse < 0.02);
}

TEST_CASE("training rejects mismatched and degenerate inputs") {
  const auto& p = shared_pipeline();

  HeadConfig wrong = small_head();
  wrong.input_dim = 32;  // dummy produces 64
  CHECK_THROWS_AS(train(*p.store, p.manifest, wrong, quick_train(0)), UserError);

  // All utterances in train: no test split to select on.
  auto all_train = p.manifest;
  for (auto& [id, split] : all_train.split_assignment) split = Split::Train;
  CHECK_THROWS_AS(train(*p.store, all_train, small_head(), quick_train(0)), UserError);

  // No train split at all.
  auto all_test = p.manifest;
  for (auto& [id, split] : all_test.split_assignment) split = Split::Test;
  CHECK_THROWS_AS(train(*p.store, all_test, small_head(), quick_train(0)), UserError);
}

TEST_CASE("early stopping runs exactly patience epochs past the peak") {
  const auto& p = shared_pipeline();

  // Injected selection stream: rises for five epochs, then declines forever.
  const std::size_t peak = 5;
  std::map<std::size_t, HeadParams> seen;
  TrainHooks hooks;
  hooks.selection_metric = [&](std::size_t epoch, const HeadParams& params) {
    seen[epoch] = params;
    return epoch <= peak ? 0.1 * static_cast<double>(epoch)
                         : 0.5 - 0.01 * static_cast<double>(epoch - peak);
  };

  TrainConfig tc = quick_train(3);
  tc.max_epochs = 50;
  tc.patience_epochs = 4;
  const auto ckpt = train(*p.store, p.manifest, small_head(), tc, hooks);

  CHECK(ckpt.best_epoch == peak);
  CHECK(ckpt.history.size() == peak + tc.patience_epochs);  // stopped at epoch 9 of 50
  // The checkpoint holds the weights exactly as they were at the peak epoch.
  REQUIRE(seen.count(peak) == 1);
  CHECK(params_equal(ckpt.params, seen.at(peak)));
  CHECK_FALSE(params_equal(ckpt.params, seen.at(peak + tc.patience_epochs)));
  // History recorded the injected stream verbatim.
  CHECK(ckpt.history[peak - 1].test_srcc == doctest::Approx(0.5));
}

TEST_CASE("improvements below the threshold do not reset patience") {
  const auto& p = shared_pipeline();
  TrainHooks hooks;
  // Epoch 1 sets the bar; later epochs creep up by less than 1e-5 each.
  hooks.selection_metric = [](std::size_t epoch, const HeadParams&) {
    return 0.5 + (epoch > 1 ? 5e-6 : 0.0);
  };
  TrainConfig tc = quick_train(3);
  tc.max_epochs = 50;
  tc.patience_epochs = 3;
  const auto ckpt = train(*p.store, p.manifest, small_head(), tc, hooks);
  CHECK(ckpt.best_epoch == 1);
  CHECK(ckpt.history.size() == 1 + tc.patience_epochs);
}

TEST_CASE("an always-undefined selection metric never improves") {
  const auto& p = shared_pipeline();
  TrainHooks hooks;
  hooks.selection_metric = [](std::size_t, const HeadParams&) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  TrainConfig tc = quick_train(3);
  tc.max_epochs = 50;
  tc.patience_epochs = 6;
  const auto ckpt = train(*p.store, p.manifest, small_head(), tc, hooks);

  CHECK(ckpt.best_epoch == 0);  // nothing to restore
  CHECK(ckpt.history.size() == tc.patience_epochs);
  for (const auto& stats : ckpt.history) CHECK(std::isnan(stats.test_srcc));
  // Fallback is the final (trained) state, not the initialization.
  const auto fresh = init_head(ckpt.head_config, tc.seed);
  CHECK_FALSE(params_equal(ckpt.params, fresh));
}

TEST_CASE("training is bit-identical across reruns and sensitive to the seed") {
  const auto& p = shared_pipeline();
  TrainConfig tc = quick_train(7);
  tc.max_epochs = 20;
  tc.patience_epochs = 19;

  const auto a = train(*p.store, p.manifest, small_head(), tc);
  const auto b = train(*p.store, p.manifest, small_head(), tc);
  CHECK(params_equal(a.params, b.params));
  CHECK(a.best_epoch == b.best_epoch);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
  }

  // Saved checkpoints match byte for byte.
  const auto dir = scratch_dir("train-determinism");
  save_checkpoint(a, dir / "a.mosc");
  save_checkpoint(b, dir / "b.mosc");
  CHECK(read_text_file(dir / "a.mosc") == read_text_file(dir / "b.mosc"));

  TrainConfig other = tc;
  other.seed = 8;
  const auto c = train(*p.store, p.manifest, small_head(), other);
  CHECK_FALSE(params_equal(a.params, c.params));
}

TEST_CASE("finetune continues from the base weights and extends the lineage") {
  const auto& p = shared_pipeline();
  TrainConfig tc = quick_train(3);
  tc.max_epochs = 20;
  tc.patience_epochs = 19;
  const auto base = train(*p.store, p.manifest, small_head(), tc);

  // Zero learning rate: weights cannot move, so the result equals the base.
  auto second = make_pipeline("train-finetune", 48, 21);
  TrainConfig frozen = quick_train(4);
  frozen.learning_rate = 0.0;
  frozen.max_epochs = 5;
  frozen.patience_epochs = 2;
  const auto tuned = finetune(base, *second->store, second->manifest, frozen);

  CHECK(params_equal(tuned.params, base.params));
  REQUIRE(tuned.lineage.size() == 2);
  CHECK(tuned.lineage[0].phase == "pretrain");
  CHECK(tuned.lineage[0].dataset_id == "corpus");
  CHECK(tuned.lineage[1].phase == "finetune");
  CHECK(tuned.lineage[1].dataset_id == "corpus");  // second corpus dir shares the name
  CHECK(tuned.train_config.learning_rate == 0.0);  // config reflects the latest phase
  CHECK(base.train_config.learning_rate == doctest::Approx(0.01));

  // With a real learning rate the weights do move.
  TrainConfig moving = quick_train(4);
  moving.max_epochs = 10;
  moving.patience_epochs = 9;
  const auto moved = finetune(base, *second->store, second->manifest, moving);
  CHECK_FALSE(params_equal(moved.params, base.params));
}

TEST_CASE("finetune rejects incompatible checkpoints") {
  const auto& p = shared_pipeline();
  TrainConfig tc = quick_train(3);
  tc.max_epochs = 8;
  tc.patience_epochs = 7;
  auto base = train(*p.store, p.manifest, small_head(), tc);

  auto wrong_extractor = base;
  wrong_extractor.extractor_id = "titanet-large";
  CHECK_THROWS_AS(finetune(wrong_extractor, *p.store, p.manifest, tc), UserError);

  auto wrong_dim = base;
  wrong_dim.head_config.input_dim = 192;
  CHECK_THROWS_AS(finetune(wrong_dim, *p.store, p.manifest, tc), UserError);
}

TEST_CASE("evaluate fills the full report and aggregates per system") {
  const auto& p = shared_pipeline();
  TrainConfig tc = quick_train(3);
  tc.max_epochs = 30;
  tc.patience_epochs = 29;
  const auto ckpt = train(*p.store, p.manifest, small_head(), tc);

  const auto utt = evaluate(ckpt, *p.store, p.manifest, Split::Validation, Level::Utterance);
  CHECK(utt.extractor_id == "dummy");
  CHECK(utt.dataset_id == "corpus");
  CHECK(utt.split == Split::Validation);
  CHECK(utt.level == Level::Utterance);
  CHECK(utt.n == p.manifest.in_split(Split::Validation).size());
  CHECK(std::isfinite(utt.lcc));
  CHECK(std::isfinite(utt.srcc));
  CHECK(std::isfinite(utt.ktau));
  CHECK(utt.mse >= 0.0);
  CHECK(std::abs(utt.ktau) <= 1.0);

  // The synthetic corpus cycles three system ids; system level collapses to 3.
  const auto sys = evaluate(ckpt, *p.store, p.manifest, Split::Train, Level::System);
  CHECK(sys.level == Level::System);
  CHECK(sys.n == 3);
}

TEST_CASE("evaluate refuses empty or single-point splits") {
  const auto& p = shared_pipeline();
  TrainConfig tc = quick_train(3);
  tc.max_epochs = 8;
  tc.patience_epochs = 7;
  const auto ckpt = train(*p.store, p.manifest, small_head(), tc);

  auto no_val = p.manifest;
  for (auto& [id, split] : no_val.split_assignment) {
    if (split == Split::Validation) split = Split::Train;
  }
  CHECK_THROWS_AS(evaluate(ckpt, *p.store, no_val, Split::Validation), UserError);

  auto one_val = p.manifest;
  bool kept_one = false;
  for (auto& [id, split] : one_val.split_assignment) {
    if (split == Split::Validation) {
      if (kept_one) split = Split::Train;
      kept_one = true;
    }
  }
  CHECK_THROWS_AS(evaluate(ckpt, *p.store, one_val, Split::Validation), UserError);
}

TEST_CASE("checkpoint files round-trip every recorded field") {
  const auto& p = shared_pipeline();
  TrainConfig tc = quick_train(3);
  tc.max_epochs = 12;
  tc.patience_epochs = 11;
  auto ckpt = train(*p.store, p.manifest, small_head(), tc);
  // Exercise the undefined-metric representation too.
  ckpt.history.push_back({0.125, std::numeric_limits<double>::quiet_NaN()});

  const auto dir = scratch_dir("checkpoint-roundtrip");
  const auto path = dir / "model.mosc";
  save_checkpoint(ckpt, path);
  const auto back = load_checkpoint(path);

  CHECK(back.extractor_id == ckpt.extractor_id);
  CHECK(back.head_config.input_dim == ckpt.head_config.input_dim);
  CHECK(back.head_config.hidden_dim == ckpt.head_config.hidden_dim);
  CHECK(back.head_config.dropout_rate == ckpt.head_config.dropout_rate);
  CHECK(back.best_epoch == ckpt.best_epoch);
  CHECK(back.params.init_seed == ckpt.params.init_seed);
  CHECK(back.train_config.batch_size == tc.batch_size);
  CHECK(back.train_config.learning_rate == tc.learning_rate);
  CHECK(back.train_config.max_epochs == tc.max_epochs);
  CHECK(back.train_config.patience_epochs == tc.patience_epochs);
  CHECK(back.train_config.seed == tc.seed);
  REQUIRE(back.lineage.size() == ckpt.lineage.size());
  CHECK(back.lineage[0].dataset_id == ckpt.lineage[0].dataset_id);
  CHECK(back.lineage[0].phase == ckpt.lineage[0].phase);

  REQUIRE(back.history.size() == ckpt.history.size());
  for (std::size_t i = 0; i + 1 < back.history.size(); ++i) {
    CHECK(back.history[i].train_loss == ckpt.history[i].train_loss);
    CHECK(back.history[i].test_srcc == doctest::Approx(ckpt.history[i].test_srcc));
  }
  CHECK(std::isnan(back.history.back().test_srcc));

  // Parameters are stored as float32: the loaded doubles equal the casts.
  REQUIRE(back.params.w1.size() == ckpt.params.w1.size());
  for (std::size_t i = 0; i < ckpt.params.w1.size(); ++i) {
    CHECK(back.params.w1[i] == static_cast<double>(static_cast<float>(ckpt.params.w1[i])));
  }
  CHECK(back.params.b2 == static_cast<double>(static_cast<float>(ckpt.params.b2)));

  // Predictions from the reloaded head match to float32 precision.
  const auto& sample = p.manifest.utterances.front();
  const auto feature = p.store->pooled(sample);
  CHECK(forward_eval(back.head_config, back.params, feature) ==
        doctest::Approx(forward_eval(ckpt.head_config, ckpt.params, feature)).epsilon(1e-5));
}

TEST_CASE("checkpoint loader rejects damaged files") {
  const auto& p = shared_pipeline();
  TrainConfig tc = quick_train(3);
  tc.max_epochs = 8;
  tc.patience_epochs = 7;
  const auto ckpt = train(*p.store, p.manifest, small_head(), tc);

  const auto dir = scratch_dir("checkpoint-damage");
  const auto path = dir / "model.mosc";
  save_checkpoint(ckpt, path);
  const std::string good = read_text_file(path);

  CHECK_THROWS_AS(load_checkpoint(dir / "missing.mosc"), UserError);

  SUBCASE("wrong magic") {
    write_text_file(path, "JUNK" + good.substr(4));
    CHECK_THROWS_AS(load_checkpoint(path), UserError);
  }
  SUBCASE("future version") {
    std::string bytes = good;
    bytes[4] = 9;
    write_text_file(path, bytes);
    CHECK_THROWS_AS(load_checkpoint(path), UserError);
  }
  SUBCASE("truncated header") {
    write_text_file(path, good.substr(0, 20));
    CHECK_THROWS_AS(load_checkpoint(path), UserError);
  }
  SUBCASE("corrupt header json") {
    std::string bytes = good;
    bytes[12] = 'X';  // first header byte; header is a JSON object
    write_text_file(path, bytes);
    CHECK_THROWS_AS(load_checkpoint(path), UserError);
  }
  SUBCASE("truncated parameters") {
    write_text_file(path, good.substr(0, good.size() - 3));
    CHECK_THROWS_AS(load_checkpoint(path), UserError);
  }
  SUBCASE("trailing bytes") {
    write_text_file(path, good + "!");
    CHECK_THROWS_AS(load_checkpoint(path), UserError);
  }
}
