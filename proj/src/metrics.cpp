#include "mospred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

namespace mospred::metrics {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Counts strict inversions of v via merge sort. With the input sorted by the
// other series (ties broken by v itself), inversions are exactly the
// discordant pairs.
std::uint64_t count_inversions(std::vector<double>& v) {
  std::vector<double> tmp(v.size());
  std::uint64_t swaps = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo + width < v.size(); lo += 2 * width) {
      std::size_t mid = lo + width;
      std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          swaps += mid - i;  // v[j] jumps over every remaining left element
          tmp[k++] = v[j++];
        } else {
          tmp[k++] = v[i++];
        }
      }
      while (i < mid) tmp[k++] = v[i++];
      while (j < hi) tmp[k++] = v[j++];
      std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
                tmp.begin() + static_cast<std::ptrdiff_t>(hi),
                v.begin() + static_cast<std::ptrdiff_t>(lo));
    }
  }
  return swaps;
}

// Sum of t*(t-1)/2 over runs of equal values in a sorted vector.
std::uint64_t tied_pairs(const std::vector<double>& sorted) {
  std::uint64_t total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      total += static_cast<std::uint64_t>(run) * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

}  // namespace

PairedSeries::PairedSeries(std::vector<double> preds, std::vector<double> targs)
    : predictions(std::move(preds)), targets(std::move(targs)) {
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("paired series length mismatch: " +
                                std::to_string(predictions.size()) + " vs " +
                                std::to_string(targets.size()));
  }
  if (predictions.size() < 2) {
    throw std::invalid_argument("paired series needs n >= 2, got n = " +
                                std::to_string(predictions.size()));
  }
  if (!all_finite(predictions) || !all_finite(targets)) {
    throw std::invalid_argument("paired series contains non-finite values");
  }
}

std::vector<double> fractional_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share the average 1-based rank
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const PairedSeries& s) {
  const auto& x = s.predictions;
  const auto& y = s.targets;
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelation("zero variance in pearson input");
  }
  return sxy / std::sqrt(sxx * syy);
}

double spearman(const PairedSeries& s) {
  PairedSeries ranked(fractional_ranks(s.predictions), fractional_ranks(s.targets));
  try {
    return pearson(ranked);
  } catch (const UndefinedCorrelation&) {
    throw UndefinedCorrelation("all-tied series in spearman input");
  }
}

double kendall_tau(const PairedSeries& s) {
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& x = s.predictions;
  const auto& y = s.targets;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }

  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t n1 = tied_pairs(xs);  // pairs tied on x

  // pairs tied on both x and y
  std::uint64_t n3 = 0;
  {
    std::size_t run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      if (i < n && xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
        ++run;
      } else {
        n3 += static_cast<std::uint64_t>(run) * (run - 1) / 2;
        run = 1;
      }
    }
  }

  // Discordant pairs: y-inversions in x-order (ties in x pre-sorted by y, so
  // tied-x pairs never count).
  std::vector<double> ys_mut = ys;
  const std::uint64_t discordant = count_inversions(ys_mut);

  std::sort(ys_mut.begin(), ys_mut.end());
  const std::uint64_t n2 = tied_pairs(ys_mut);  // pairs tied on y

  const double denom_x = static_cast<double>(n0 - n1);
  const double denom_y = static_cast<double>(n0 - n2);
  if (denom_x == 0.0 || denom_y == 0.0) {
    throw UndefinedCorrelation("all ties on one side in kendall_tau input");
  }

  // C + D = n0 - n1 - n2 + n3
  const double concordant_minus_discordant =
      static_cast<double>(n0 - n1 - n2 + n3) - 2.0 * static_cast<double>(discordant);
  return concordant_minus_discordant / std::sqrt(denom_x * denom_y);
}

double mse(const PairedSeries& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = s.predictions[i] - s.targets[i];
    acc += d * d;
  }
  return acc / static_cast<double>(s.size());
}

PairedSeries system_level(const std::vector<double>& predictions,
                          const std::vector<double>& targets,
                          const std::vector<std::string>& system_ids) {
  if (predictions.size() != targets.size() || predictions.size() != system_ids.size()) {
    throw std::invalid_argument("system_level input length mismatch");
  }
  struct Sums {
    double pred = 0.0;
    double targ = 0.0;
    std::size_t count = 0;
  };
  std::map<std::string, Sums> groups;  // ordered: deterministic output order
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    auto& g = groups[system_ids[i]];
    g.pred += predictions[i];
    g.targ += targets[i];
    ++g.count;
  }
  if (groups.size() < 2) {
    throw UndefinedCorrelation("system-level undefined: fewer than 2 distinct systems");
  }
  std::vector<double> preds, targs;
  preds.reserve(groups.size());
  targs.reserve(groups.size());
  for (const auto& [id, g] : groups) {
    (void)id;
    preds.push_back(g.pred / static_cast<double>(g.count));
    targs.push_back(g.targ / static_cast<double>(g.count));
  }
  return PairedSeries(std::move(preds), std::move(targs));
}

}  // namespace mospred::metrics
