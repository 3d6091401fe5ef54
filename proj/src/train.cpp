#include "mospred/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mospred/metrics.hpp"
#include "mospred/prng.hpp"
#include "mospred/util.hpp"

namespace mospred {

namespace {

constexpr double kImprovementDelta = 1e-5;

void TrainConfigCheck(const TrainConfig& c) {
  if (c.batch_size < 1) throw UserError("batch_size must be >= 1");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw UserError("learning_rate must be finite and >= 0");
  }
  if (c.max_epochs < 1) throw UserError("max_epochs must be >= 1");
  if (c.patience_epochs < 1) throw UserError("patience_epochs must be >= 1");
  if (c.patience_epochs >= c.max_epochs) {
    throw UserError("patience_epochs must be smaller than max_epochs");
  }
}

struct SplitData {
  std::vector<std::string> ids;      // sorted for run-order independence
  std::vector<TrainSample> samples;  // parallel to ids
};

SplitData load_split(const FeatureStore& features, const DatasetManifest& manifest,
                     Split split) {
  SplitData data;
  for (const Utterance* u : manifest.in_split(split)) data.ids.push_back(u->utterance_id);
  std::sort(data.ids.begin(), data.ids.end());
  data.samples.reserve(data.ids.size());
  for (const auto& id : data.ids) {
    const Utterance* u = manifest.find(id);
    TrainSample s;
    s.feature = features.pooled(*u);
    s.target = make_mos_label(u->ratings).normalized;
    data.samples.push_back(std::move(s));
  }
  return data;
}

// Adam over the flattened head parameters.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  void step(HeadParams& p, const HeadGradients& g) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    std::size_t off = 0;
    apply(p.w1.data(), g.w1.data(), g.w1.size(), off, bc1, bc2);
    apply(p.b1.data(), g.b1.data(), g.b1.size(), off, bc1, bc2);
    apply(p.w2.data(), g.w2.data(), g.w2.size(), off, bc1, bc2);
    apply(&p.b2, &g.b2, 1, off, bc1, bc2);
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  void apply(double* theta, const double* grad, std::size_t n, std::size_t& off, double bc1,
             double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
      double& m = m_[off + i];
      double& v = v_[off + i];
      m = kBeta1 * m + (1.0 - kBeta1) * grad[i];
      v = kBeta2 * v + (1.0 - kBeta2) * grad[i] * grad[i];
      theta[i] -= lr_ * (m / bc1) / (std::sqrt(v / bc2) + kEps);
    }
    off += n;
  }

  double lr_;
  std::uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

double test_srcc_of(const HeadConfig& config, const HeadParams& params,
                    const SplitData& test) {
  std::vector<double> preds, targets;
  preds.reserve(test.samples.size());
  targets.reserve(test.samples.size());
  for (const auto& s : test.samples) {
    preds.push_back(forward_eval(config, params, s.feature));
    targets.push_back(s.target);
  }
  try {
    return metrics::spearman(metrics::PairedSeries(preds, targets));
  } catch (const metrics::UndefinedCorrelation&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

Checkpoint train_phase(HeadParams params, const HeadConfig& head_config,
                       const FeatureStore& features, const DatasetManifest& manifest,
                       const TrainConfig& config, const TrainHooks& hooks,
                       std::vector<DatasetPhase> lineage) {
  require_valid(manifest);
  const SplitData train_data = load_split(features, manifest, Split::Train);
  const SplitData test_data = load_split(features, manifest, Split::Test);
  if (train_data.samples.empty()) throw UserError("empty train split");
  if (test_data.samples.size() < 2) {
    throw UserError("test split needs at least 2 utterances for the selection metric");
  }

  Checkpoint ckpt;
  ckpt.head_config = head_config;
  ckpt.extractor_id = features.extractor_id();
  ckpt.lineage = std::move(lineage);
  ckpt.train_config = config;

  AdamOptimizer adam(params.count(), config.learning_rate);

  double best_srcc = -std::numeric_limits<double>::infinity();
  HeadParams best_params = params;
  std::size_t stale_epochs = 0;

  std::vector<std::size_t> order(train_data.samples.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, 0xE0000000ull + epoch));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<TrainSample> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train_data.samples[order[i]]);
      const std::uint64_t dropout_seed =
          derive_seed(config.seed, (epoch << 20) ^ batch_index++);
      HeadGradients grads;
      try {
        grads = head_gradient(head_config, params, batch, dropout_seed);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(e.what()) + " at epoch " + std::to_string(epoch));
      }
      adam.step(params, grads);
      loss_sum += grads.loss * static_cast<double>(batch.size());
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(train_data.samples.size());
    stats.test_srcc = hooks.selection_metric ? hooks.selection_metric(epoch, params)
                                             : test_srcc_of(head_config, params, test_data);
    ckpt.history.push_back(stats);

    if (stats.test_srcc > best_srcc + kImprovementDelta) {  // NaN never improves
      best_srcc = stats.test_srcc;
      best_params = params;
      ckpt.best_epoch = epoch;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
      if (stale_epochs >= config.patience_epochs) break;
    }
  }

  // No epoch ever had a defined selection metric: fall back to final params.
  ckpt.params = ckpt.best_epoch == 0 ? params : best_params;
  return ckpt;
}

}  // namespace

void TrainConfig::validate() const { TrainConfigCheck(*this); }

Checkpoint train(const FeatureStore& features, const DatasetManifest& manifest,
                 HeadConfig head_config, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (head_config.input_dim == 0) head_config.input_dim = features.spec().output_dim;
  head_config.validate();
  if (head_config.input_dim != features.spec().output_dim) {
    throw UserError("head input_dim " + std::to_string(head_config.input_dim) +
                    " does not match extractor output_dim " +
                    std::to_string(features.spec().output_dim));
  }
  HeadParams params = init_head(head_config, config.seed);
  return train_phase(std::move(params), head_config, features, manifest, config, hooks,
                     {{manifest.dataset_id, "pretrain"}});
}

Checkpoint finetune(const Checkpoint& base, const FeatureStore& features,
                    const DatasetManifest& manifest, const TrainConfig& config,
                    const TrainHooks& hooks) {
  config.validate();
  if (base.extractor_id != features.extractor_id()) {
    throw UserError("incompatible checkpoint: trained with extractor '" + base.extractor_id +
                    "', requested '" + features.extractor_id() + "'");
  }
  if (base.head_config.input_dim != features.spec().output_dim) {
    throw UserError("incompatible checkpoint: head input_dim " +
                    std::to_string(base.head_config.input_dim) + " vs extractor output_dim " +
                    std::to_string(features.spec().output_dim));
  }
  auto lineage = base.lineage;
  lineage.push_back({manifest.dataset_id, "finetune"});
  return train_phase(base.params, base.head_config, features, manifest, config, hooks,
                     std::move(lineage));
}

MetricReport evaluate(const Checkpoint& checkpoint, const FeatureStore& features,
                      const DatasetManifest& manifest, Split split, Level level) {
  require_valid(manifest);
  const auto utterances = manifest.in_split(split);
  if (utterances.empty()) {
    throw UserError(std::string("empty split: ") + to_string(split));
  }
  if (utterances.size() < 2) {
    throw UserError("split '" + std::string(to_string(split)) + "' has n < 2");
  }

  std::vector<double> preds, targets;
  std::vector<std::string> systems;
  preds.reserve(utterances.size());
  targets.reserve(utterances.size());
  systems.reserve(utterances.size());
  for (const Utterance* u : utterances) {
    preds.push_back(forward_eval(checkpoint.head_config, checkpoint.params,
                                 features.pooled(*u)));
    targets.push_back(make_mos_label(u->ratings).normalized);
    systems.push_back(u->system_id);
  }

  metrics::PairedSeries series =
      level == Level::System ? metrics::system_level(preds, targets, systems)
                             : metrics::PairedSeries(std::move(preds), std::move(targets));

  MetricReport report;
  report.extractor_id = checkpoint.extractor_id;
  report.dataset_id = manifest.dataset_id;
  report.split = split;
  report.level = level;
  report.n = series.size();
  report.lcc = metrics::pearson(series);
  report.srcc = metrics::spearman(series);
  report.ktau = metrics::kendall_tau(series);
  report.mse = metrics::mse(series);
  return report;
}

}  // namespace mospred
