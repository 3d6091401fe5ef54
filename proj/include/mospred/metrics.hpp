#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mospred::metrics {

// A correlation without a defined value (zero variance, all ties). Surfaced
// as a typed error so callers never see silent zeros or NaNs.
class UndefinedCorrelation : public std::runtime_error {
 public:
  explicit UndefinedCorrelation(const std::string& what)
      : std::runtime_error("undefined correlation: " + what) {}
};

// Two equal-length finite series, n >= 2. The constructor enforces the
// invariants so every metric below can assume them.
struct PairedSeries {
  std::vector<double> predictions;
  std::vector<double> targets;

  PairedSeries(std::vector<double> preds, std::vector<double> targs);

  std::size_t size() const { return predictions.size(); }
};

// Fractional (average) ranks, 1-based; ties share the mean of their
// positions. Exposed because spearman is defined through it.
std::vector<double> fractional_ranks(const std::vector<double>& values);

// Pearson product-moment coefficient (LCC).
double pearson(const PairedSeries& s);

// Spearman rank correlation (SRCC): pearson over fractional ranks.
double spearman(const PairedSeries& s);

// Kendall rank correlation, tie-corrected tau-b (KTAU). O(n log n).
double kendall_tau(const PairedSeries& s);

// Mean squared error.
double mse(const PairedSeries& s);

// Collapses per-utterance pairs into per-system means. Requires at least two
// distinct systems; metrics can then be applied to the reduced series.
PairedSeries system_level(const std::vector<double>& predictions,
                          const std::vector<double>& targets,
                          const std::vector<std::string>& system_ids);

}  // namespace mospred::metrics
