#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "mospred/core.hpp"
#include "mospred/extractor.hpp"
#include "mospred/tsne.hpp"

namespace mospred {

// One evaluation result as recorded in the ledger. mse_raw is the error on
// the raw 1-5 scale (16x the normalized MSE). The timestamp documents when
// the record was appended; rendered artifacts never include it, so rendering
// stays a pure function of the metric values.
struct LedgerRecord {
  MetricReport report;
  double mse_raw = 0.0;
  std::string timestamp;
};

// Append-only evaluation log, one JSON record per line. When the same
// (extractor, dataset, split, level) is evaluated again, the newest line
// wins at rendering time.
class ResultsLedger {
 public:
  ResultsLedger() = default;

  static ResultsLedger load(const std::filesystem::path& path);
  static void append(const std::filesystem::path& path, const MetricReport& report,
                     const std::string& timestamp);

  void add(const MetricReport& report, const std::string& timestamp);
  const std::vector<LedgerRecord>& records() const { return records_; }
  std::vector<LedgerRecord> latest() const;

 private:
  std::vector<LedgerRecord> records_;
};

struct ResultsTable {
  std::string text;  // aligned table; best value per column within a family marked '*'
  std::string csv;   // plain data rows, no highlighting
};

// Per-extractor metric table for one dataset/split/level, grouped by family
// (SV, then SSL, then SL, then DUMMY), rows in registry order inside each
// group. Throws "no results" when nothing matches.
ResultsTable render_results_table(const ResultsLedger& ledger,
                                  const ExtractorRegistry& registry,
                                  const std::string& dataset_id,
                                  Split split = Split::Validation,
                                  Level level = Level::Utterance);

struct Histogram {
  std::array<std::size_t, 5> bins{};  // counts of individual scores 1..5
  std::size_t total = 0;
  std::string svg;
  std::string csv;
  std::vector<std::string> warnings;
};

// Distribution of raw rating values across the whole manifest (individual
// ratings, not per-utterance means). Empty manifests yield all-zero bins and
// a warning rather than an error.
Histogram score_histogram(const DatasetManifest& manifest);

struct RankingPlot {
  std::vector<std::string> order;  // extractor ids, ascending param_count
  std::string svg;
  std::string csv;
};

// LCC/SRCC/KTAU per extractor with the x-axis ordered by ascending parameter
// count (ties broken by extractor id). Needs at least two extractors with
// results for the dataset.
RankingPlot ranking_plot(const ResultsLedger& ledger, const ExtractorRegistry& registry,
                         const std::string& dataset_id, Split split = Split::Validation,
                         Level level = Level::Utterance);

// Scatter of a 2-D embedding projection colored by rounded MOS (fixed
// 5-color legend), plus the plotted values as CSV.
std::string projection_svg(const Projection2D& projection);
std::string projection_csv(const Projection2D& projection);

}  // namespace mospred
