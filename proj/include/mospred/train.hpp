#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mospred/core.hpp"
#include "mospred/features.hpp"
#include "mospred/head.hpp"

namespace mospred {

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  std::size_t max_epochs = 200;
  std::size_t patience_epochs = 20;
  std::uint64_t seed = 0;
  // Selection metric is fixed: Spearman correlation on the test split.

  void validate() const;  // throws UserError
};

struct EpochStats {
  double train_loss = 0.0;
  double test_srcc = 0.0;  // NaN when the correlation was undefined that epoch
};

struct DatasetPhase {
  std::string dataset_id;
  std::string phase;  // "pretrain" or "finetune"
};

struct Checkpoint {
  HeadConfig head_config;
  HeadParams params;  // weights of the best epoch, not the last one
  std::string extractor_id;
  std::vector<DatasetPhase> lineage;
  std::size_t best_epoch = 0;  // 1-based; 0 means no epoch ever improved
  std::vector<EpochStats> history;
  TrainConfig train_config;  // config of the most recent phase
};

// Test hooks. selection_metric replaces the test-split SRCC stream, which is
// how the early-stopping contract is exercised with an injected sequence.
struct TrainHooks {
  std::function<double(std::size_t epoch, const HeadParams& params)> selection_metric;
};

// Trains the head on the train split, early-stopping when test-split SRCC
// has not improved by more than 1e-5 for patience_epochs consecutive epochs.
// Deterministic given (features, manifest ids, seeds). An undefined SRCC
// counts as no improvement.
Checkpoint train(const FeatureStore& features, const DatasetManifest& manifest,
                 HeadConfig head_config, const TrainConfig& config,
                 const TrainHooks& hooks = {});

// Continues from an existing checkpoint on a new dataset: params are carried
// over (not re-initialized) and the lineage grows by one finetune entry.
Checkpoint finetune(const Checkpoint& base, const FeatureStore& features,
                    const DatasetManifest& manifest, const TrainConfig& config,
                    const TrainHooks& hooks = {});

// Eval-mode predictions over one split, scored with the four metrics on the
// normalized scale. Degenerate series surface the metrics module's errors.
MetricReport evaluate(const Checkpoint& checkpoint, const FeatureStore& features,
                      const DatasetManifest& manifest, Split split,
                      Level level = Level::Utterance);

}  // namespace mospred
