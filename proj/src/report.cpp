#include "mospred/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mospred/util.hpp"

namespace mospred {

namespace {

// Fixed 5-color scale for rounded MOS 1 (red) through 5 (green).
constexpr const char* kMosColors[5] = {"#d7191c", "#fdae61", "#d4b106", "#a6d96a",
                                       "#1a9641"};

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

nlohmann::json record_json(const MetricReport& r, double mse_raw,
                           const std::string& timestamp) {
  nlohmann::json j;
  j["extractor_id"] = r.extractor_id;
  j["dataset_id"] = r.dataset_id;
  j["split"] = to_string(r.split);
  j["level"] = to_string(r.level);
  j["lcc"] = r.lcc;
  j["srcc"] = r.srcc;
  j["ktau"] = r.ktau;
  j["mse"] = r.mse;
  j["mse_raw"] = mse_raw;
  j["n"] = r.n;
  j["timestamp"] = timestamp;
  return j;
}

LedgerRecord parse_record(const nlohmann::json& j) {
  LedgerRecord rec;
  rec.report.extractor_id = j.at("extractor_id").get<std::string>();
  rec.report.dataset_id = j.at("dataset_id").get<std::string>();
  const auto split = split_from_string(j.at("split").get<std::string>());
  if (!split) throw std::runtime_error("unknown split '" + j.at("split").get<std::string>() + "'");
  rec.report.split = *split;
  const auto level = level_from_string(j.at("level").get<std::string>());
  if (!level) throw std::runtime_error("unknown level '" + j.at("level").get<std::string>() + "'");
  rec.report.level = *level;
  rec.report.lcc = j.at("lcc").get<double>();
  rec.report.srcc = j.at("srcc").get<double>();
  rec.report.ktau = j.at("ktau").get<double>();
  rec.report.mse = j.at("mse").get<double>();
  rec.report.n = j.at("n").get<std::size_t>();
  rec.mse_raw = j.value("mse_raw", rec.report.mse * 16.0);
  rec.timestamp = j.value("timestamp", std::string());
  return rec;
}

std::string ledger_key(const MetricReport& r) {
  return r.extractor_id + "\x1f" + r.dataset_id + "\x1f" + to_string(r.split) + "\x1f" +
         to_string(r.level);
}

constexpr Family kFamilyOrder[4] = {Family::SV, Family::SSL, Family::SL, Family::DUMMY};

// Latest-wins records for one (dataset, split, level), keyed by extractor.
std::map<std::string, LedgerRecord> select_records(const ResultsLedger& ledger,
                                                   const std::string& dataset_id, Split split,
                                                   Level level) {
  std::map<std::string, LedgerRecord> by_extractor;
  for (const auto& rec : ledger.latest()) {
    if (rec.report.dataset_id == dataset_id && rec.report.split == split &&
        rec.report.level == level) {
      by_extractor[rec.report.extractor_id] = rec;
    }
  }
  return by_extractor;
}

struct SvgBuilder {
  std::ostringstream out;

  SvgBuilder(int width, int height) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0) {
    out << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
        << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
        << fmt(width) << "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill) {
    out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
        << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\"/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill) {
    out << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy) << "\" r=\"" << fmt(r)
        << "\" fill=\"" << fill << "\"/>\n";
  }

  void text(double x, double y, const std::string& content, int size = 12,
            const std::string& anchor = "start", const std::string& extra = "") {
    out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-family=\"sans-serif\""
        << " font-size=\"" << size << "\" text-anchor=\"" << anchor << "\"" << extra << ">"
        << escape(content) << "</text>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& points,
                const std::string& stroke) {
    out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : points) out << fmt(x) << "," << fmt(y) << " ";
    out << "\"/>\n";
  }

  std::string finish() {
    out << "</svg>\n";
    return out.str();
  }

  static std::string fmt(double v) { return format_fixed(v, 2); }

  static std::string escape(const std::string& s) {
    std::string r;
    for (char c : s) {
      if (c == '&') r += "&amp;";
      else if (c == '<') r += "&lt;";
      else if (c == '>') r += "&gt;";
      else r += c;
    }
    return r;
  }
};

std::string human_params(std::uint64_t count) {
  if (count >= 1000000000 && count % 100000000 == 0) {
    const double b = static_cast<double>(count) / 1e9;
    return (b == std::floor(b) ? std::to_string(static_cast<std::uint64_t>(b))
                               : format_fixed(b, 1)) + "B";
  }
  if (count >= 1000000 && count % 100000 == 0) {
    const double m = static_cast<double>(count) / 1e6;
    return (m == std::floor(m) ? std::to_string(static_cast<std::uint64_t>(m))
                               : format_fixed(m, 1)) + "M";
  }
  return std::to_string(count);
}

}  // namespace

ResultsLedger ResultsLedger::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open results ledger: " + path.string());
  ResultsLedger ledger;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      ledger.records_.push_back(parse_record(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError("bad ledger record: " + std::string(e.what()), line_number);
    }
  }
  return ledger;
}

void ResultsLedger::append(const std::filesystem::path& path, const MetricReport& report,
                           const std::string& timestamp) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw UserError("cannot write results ledger: " + path.string());
  out << record_json(report, report.mse * 16.0, timestamp).dump() << "\n";
  out.flush();
  if (!out) throw UserError("cannot write results ledger: " + path.string());
}

void ResultsLedger::add(const MetricReport& report, const std::string& timestamp) {
  records_.push_back({report, report.mse * 16.0, timestamp});
}

std::vector<LedgerRecord> ResultsLedger::latest() const {
  std::map<std::string, std::size_t> last;  // key -> index of newest record
  for (std::size_t i = 0; i < records_.size(); ++i) last[ledger_key(records_[i].report)] = i;
  std::vector<std::size_t> keep;
  keep.reserve(last.size());
  for (const auto& [key, index] : last) keep.push_back(index);
  std::sort(keep.begin(), keep.end());  // preserve append order
  std::vector<LedgerRecord> out;
  out.reserve(keep.size());
  for (std::size_t index : keep) out.push_back(records_[index]);
  return out;
}

ResultsTable render_results_table(const ResultsLedger& ledger,
                                  const ExtractorRegistry& registry,
                                  const std::string& dataset_id, Split split, Level level) {
  const auto by_extractor = select_records(ledger, dataset_id, split, level);
  if (by_extractor.empty()) {
    throw UserError("no results for dataset '" + dataset_id + "' (split " +
                    to_string(split) + ", level " + to_string(level) + ")");
  }

  struct Row {
    const ExtractorSpec* spec;
    LedgerRecord rec;
    bool best[4] = {false, false, false, false};  // lcc, srcc, ktau, mse
  };
  std::vector<std::vector<Row>> groups;
  for (Family family : kFamilyOrder) {
    std::vector<Row> group;
    for (const auto& spec : registry.specs()) {
      if (spec.family != family) continue;
      const auto it = by_extractor.find(spec.extractor_id);
      if (it != by_extractor.end()) group.push_back({&spec, it->second, {}});
    }
    if (group.empty()) continue;
    // Mark the best value per metric column inside the family group.
    std::size_t best_lcc = 0, best_srcc = 0, best_ktau = 0, best_mse = 0;
    for (std::size_t i = 1; i < group.size(); ++i) {
      if (group[i].rec.report.lcc > group[best_lcc].rec.report.lcc) best_lcc = i;
      if (group[i].rec.report.srcc > group[best_srcc].rec.report.srcc) best_srcc = i;
      if (group[i].rec.report.ktau > group[best_ktau].rec.report.ktau) best_ktau = i;
      if (group[i].rec.report.mse < group[best_mse].rec.report.mse) best_mse = i;
    }
    group[best_lcc].best[0] = true;
    group[best_srcc].best[1] = true;
    group[best_ktau].best[2] = true;
    group[best_mse].best[3] = true;
    groups.push_back(std::move(group));
  }

  std::size_t matched = 0;
  for (const auto& g : groups) matched += g.size();
  if (matched < by_extractor.size()) {
    for (const auto& [id, rec] : by_extractor) {
      if (!registry.has(id)) throw UserError("extractor not in registry: " + id);
    }
  }

  std::ostringstream text;
  text << "results for " << dataset_id << " (split " << to_string(split) << ", level "
       << to_string(level) << ")\n\n";
  text << pad_right("family", 8) << pad_right("extractor", 24) << pad_left("dim", 6)
       << pad_left("params", 10) << pad_left("LCC", 10) << pad_left("SRCC", 10)
       << pad_left("KTAU", 10) << pad_left("MSE", 10) << pad_left("n", 8) << "\n";
  text << std::string(96, '-') << "\n";

  std::ostringstream csv;
  csv << "family,extractor_id,output_dim,param_count,lcc,srcc,ktau,mse,mse_raw,n\n";

  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (g > 0) text << "\n";
    for (const auto& row : groups[g]) {
      const auto& r = row.rec.report;
      const std::string cells[4] = {format_fixed(r.lcc, 4), format_fixed(r.srcc, 4),
                                    format_fixed(r.ktau, 4), format_fixed(r.mse, 4)};
      text << pad_right(to_string(row.spec->family), 8)
           << pad_right(row.spec->extractor_id, 24)
           << pad_left(std::to_string(row.spec->output_dim), 6)
           << pad_left(human_params(row.spec->param_count), 10);
      for (int c = 0; c < 4; ++c) {
        text << pad_left((row.best[c] ? "*" : "") + cells[c], 10);
      }
      text << pad_left(std::to_string(r.n), 8) << "\n";

      csv << to_string(row.spec->family) << "," << csv_escape(row.spec->extractor_id) << ","
          << row.spec->output_dim << "," << row.spec->param_count << "," << cells[0] << ","
          << cells[1] << "," << cells[2] << "," << cells[3] << ","
          << format_fixed(row.rec.mse_raw, 4) << "," << r.n << "\n";
    }
  }
  text << "\n* best value in its family group; MSE lower is better, others higher\n";

  return {text.str(), csv.str()};
}

Histogram score_histogram(const DatasetManifest& manifest) {
  Histogram h;
  for (const auto& u : manifest.utterances) {
    for (const auto& rating : u.ratings) {
      if (rating.score >= 1 && rating.score <= 5) {
        ++h.bins[static_cast<std::size_t>(rating.score - 1)];
        ++h.total;
      }
    }
  }
  if (h.total == 0) h.warnings.push_back("no ratings in manifest; histogram is empty");

  std::ostringstream csv;
  csv << "score,count\n";
  for (int s = 1; s <= 5; ++s) csv << s << "," << h.bins[static_cast<std::size_t>(s - 1)] << "\n";
  h.csv = csv.str();

  const int width = 480, height = 320;
  const double left = 50, right = 20, top = 40, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const double max_count =
      static_cast<double>(std::max<std::size_t>(*std::max_element(h.bins.begin(), h.bins.end()), 1));

  SvgBuilder svg(width, height);
  svg.text(width / 2.0, 22, "score distribution: " + manifest.dataset_id, 14, "middle");
  svg.line(left, top + plot_h, left + plot_w, top + plot_h, "black");
  svg.line(left, top, left, top + plot_h, "black");
  svg.text(left - 8, top + 4, std::to_string(static_cast<std::size_t>(max_count)), 11, "end");
  svg.text(left - 8, top + plot_h + 4, "0", 11, "end");
  const double slot = plot_w / 5.0;
  for (int s = 0; s < 5; ++s) {
    const double count = static_cast<double>(h.bins[static_cast<std::size_t>(s)]);
    const double bar_h = plot_h * count / max_count;
    const double x = left + slot * s + slot * 0.15;
    svg.rect(x, top + plot_h - bar_h, slot * 0.7, bar_h, kMosColors[s]);
    svg.text(left + slot * s + slot / 2.0, top + plot_h + 18, std::to_string(s + 1), 12,
             "middle");
    svg.text(left + slot * s + slot / 2.0, top + plot_h - bar_h - 6,
             std::to_string(h.bins[static_cast<std::size_t>(s)]), 11, "middle");
  }
  svg.text(width / 2.0, height - 12, "score", 12, "middle");
  h.svg = svg.finish();
  return h;
}

RankingPlot ranking_plot(const ResultsLedger& ledger, const ExtractorRegistry& registry,
                         const std::string& dataset_id, Split split, Level level) {
  const auto by_extractor = select_records(ledger, dataset_id, split, level);
  if (by_extractor.empty()) {
    throw UserError("no results for dataset '" + dataset_id + "'");
  }
  if (by_extractor.size() < 2) {
    throw UserError("ranking needs results from at least 2 extractors, got " +
                    std::to_string(by_extractor.size()));
  }

  struct Entry {
    const ExtractorSpec* spec;
    LedgerRecord rec;
  };
  std::vector<Entry> entries;
  for (const auto& [id, rec] : by_extractor) {
    if (!registry.has(id)) throw UserError("no parameter count for extractor: " + id);
    entries.push_back({&registry.spec(id), rec});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.spec->param_count != b.spec->param_count) {
      return a.spec->param_count < b.spec->param_count;
    }
    return a.spec->extractor_id < b.spec->extractor_id;
  });

  RankingPlot plot;
  std::ostringstream csv;
  csv << "extractor_id,param_count,lcc,srcc,ktau\n";
  for (const auto& e : entries) {
    plot.order.push_back(e.spec->extractor_id);
    csv << csv_escape(e.spec->extractor_id) << "," << e.spec->param_count << ","
        << format_fixed(e.rec.report.lcc, 4) << "," << format_fixed(e.rec.report.srcc, 4)
        << "," << format_fixed(e.rec.report.ktau, 4) << "\n";
  }
  plot.csv = csv.str();

  const int width = 640, height = 400;
  const double left = 60, right = 20, top = 50, bottom = 90;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double lo = 0.0, hi = 1.0;
  for (const auto& e : entries) {
    lo = std::min({lo, e.rec.report.lcc, e.rec.report.srcc, e.rec.report.ktau});
    hi = std::max({hi, e.rec.report.lcc, e.rec.report.srcc, e.rec.report.ktau});
  }
  const double span = hi - lo;
  const auto y_of = [&](double v) { return top + plot_h * (1.0 - (v - lo) / span); };
  const auto x_of = [&](std::size_t i) {
    return entries.size() == 1
               ? left + plot_w / 2.0
               : left + plot_w * static_cast<double>(i) / static_cast<double>(entries.size() - 1);
  };

  SvgBuilder svg(width, height);
  svg.text(width / 2.0, 24, "metrics by model size: " + dataset_id, 14, "middle");
  svg.line(left, top, left, top + plot_h, "black");
  svg.line(left, top + plot_h, left + plot_w, top + plot_h, "black");
  svg.text(left - 8, y_of(hi) + 4, format_fixed(hi, 2), 11, "end");
  svg.text(left - 8, y_of(lo) + 4, format_fixed(lo, 2), 11, "end");
  if (lo < 0.0 && hi > 0.0) svg.line(left, y_of(0.0), left + plot_w, y_of(0.0), "#cccccc");

  const char* series_color[3] = {"#1f77b4", "#ff7f0e", "#2ca02c"};
  const char* series_name[3] = {"LCC", "SRCC", "KTAU"};
  for (int s = 0; s < 3; ++s) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& r = entries[i].rec.report;
      const double v = s == 0 ? r.lcc : s == 1 ? r.srcc : r.ktau;
      pts.emplace_back(x_of(i), y_of(v));
    }
    svg.polyline(pts, series_color[s]);
    for (const auto& [x, y] : pts) svg.circle(x, y, 3, series_color[s]);
    svg.circle(left + 90.0 * s + 8, 38, 4, series_color[s]);
    svg.text(left + 90.0 * s + 16, 42, series_name[s], 11);
  }

  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string label =
        entries[i].spec->extractor_id + " (" + human_params(entries[i].spec->param_count) + ")";
    svg.text(x_of(i), top + plot_h + 14, label, 10, "end",
             " transform=\"rotate(-35 " + SvgBuilder::fmt(x_of(i)) + " " +
                 SvgBuilder::fmt(top + plot_h + 14) + ")\"");
  }
  plot.svg = svg.finish();
  return plot;
}

std::string projection_svg(const Projection2D& projection) {
  const int width = 520, height = 480;
  const double left = 30, right = 110, top = 50, bottom = 30;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double min_x = 0.0, max_x = 1.0, min_y = 0.0, max_y = 1.0;
  if (!projection.x.empty()) {
    min_x = *std::min_element(projection.x.begin(), projection.x.end());
    max_x = *std::max_element(projection.x.begin(), projection.x.end());
    min_y = *std::min_element(projection.y.begin(), projection.y.end());
    max_y = *std::max_element(projection.y.begin(), projection.y.end());
  }
  const double span_x = std::max(max_x - min_x, 1e-9);
  const double span_y = std::max(max_y - min_y, 1e-9);

  SvgBuilder svg(width, height);
  svg.text(width / 2.0, 24, "embedding map: " + projection.extractor_id, 14, "middle");
  for (std::size_t i = 0; i < projection.size(); ++i) {
    const double px = left + plot_w * (projection.x[i] - min_x) / span_x;
    const double py = top + plot_h * (1.0 - (projection.y[i] - min_y) / span_y);
    const int color = std::clamp(projection.color[i], 1, 5);
    svg.circle(px, py, 3, kMosColors[color - 1]);
  }
  for (int s = 0; s < 5; ++s) {
    svg.circle(width - right + 18, top + 20.0 * s, 4, kMosColors[s]);
    svg.text(width - right + 28, top + 20.0 * s + 4, "MOS " + std::to_string(s + 1), 11);
  }
  return svg.finish();
}

std::string projection_csv(const Projection2D& projection) {
  std::ostringstream csv;
  csv << "utterance_id,x,y,rounded_mos\n";
  for (std::size_t i = 0; i < projection.size(); ++i) {
    csv << csv_escape(projection.ids[i]) << "," << format_fixed(projection.x[i], 6) << ","
        << format_fixed(projection.y[i], 6) << "," << projection.color[i] << "\n";
  }
  return csv.str();
}

}  // namespace mospred
