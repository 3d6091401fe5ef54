#include "mospred/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mospred/prng.hpp"
#include "mospred/resample.hpp"
#include "mospred/util.hpp"
#include "mospred/wav.hpp"

namespace mospred {

namespace {

int parse_score(const std::string& field, std::size_t line_no) {
  int value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("score does not parse as integer: '" + field + "'", line_no);
  }
  return value;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

}  // namespace

DatasetManifest load_ratings(const std::filesystem::path& path, const std::string& dataset_id) {
  const std::string text = read_text_file(path);
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("empty ratings file: " + path.string(), 1);
  if (lines[0] != kRatingsHeader) {
    throw ParseError("bad header, expected '" + std::string(kRatingsHeader) + "'", 1);
  }

  DatasetManifest manifest;
  manifest.dataset_id = dataset_id.empty() ? path.stem().string() : dataset_id;

  std::map<std::string, std::size_t> index;          // utterance_id -> position
  std::set<std::pair<std::string, std::string>> seen_pairs;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    auto fields = split_string(lines[i], ',');
    if (fields.size() != 5) {
      throw ParseError("expected 5 fields, got " + std::to_string(fields.size()), line_no);
    }
    const std::string& id = fields[0];
    const std::string& audio = fields[1];
    std::string system = fields[2].empty() ? "unknown" : fields[2];
    const std::string& rater = fields[3];
    const int score = parse_score(fields[4], line_no);
    if (id.empty()) throw ParseError("empty utterance_id", line_no);

    if (!seen_pairs.insert({id, rater}).second) {
      throw UserError("duplicate rating: utterance '" + id + "' rater '" + rater +
                      "' (line " + std::to_string(line_no) + ")");
    }

    auto it = index.find(id);
    if (it == index.end()) {
      Utterance u;
      u.utterance_id = id;
      u.audio_path = audio;
      u.system_id = system;
      u.ratings.push_back({rater, score});
      index.emplace(id, manifest.utterances.size());
      manifest.utterances.push_back(std::move(u));
    } else {
      Utterance& u = manifest.utterances[it->second];
      if (u.audio_path.string() != audio || u.system_id != system) {
        throw ParseError("conflicting audio_path/system_id for utterance '" + id + "'", line_no);
      }
      u.ratings.push_back({rater, score});
    }
  }
  return manifest;
}

void write_ratings(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ostringstream out;
  out << kRatingsHeader << "\n";
  for (const auto& u : manifest.utterances) {
    for (const auto& r : u.ratings) {
      out << csv_escape(u.utterance_id) << ',' << csv_escape(u.audio_path.string()) << ','
          << csv_escape(u.system_id) << ',' << csv_escape(r.rater_id) << ',' << r.score << "\n";
    }
  }
  write_text_file(path, out.str());
}

void SplitConfig::validate() const {
  auto in_open_unit = [](double f) { return f > 0.0 && f < 1.0; };
  if (!in_open_unit(train_fraction) || !in_open_unit(test_fraction) ||
      !in_open_unit(validation_fraction)) {
    throw UserError("split fractions must each lie in (0, 1)");
  }
  const double sum = train_fraction + test_fraction + validation_fraction;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw UserError("split fractions must sum to 1, got " + format_fixed(sum, 9));
  }
}

namespace {

// Partitions one bucket of ids: floor(fraction * N) to test and validation,
// remainder to train. Ids are sorted first so the result depends only on the
// id set and the seed, then shuffled with a dedicated stream.
void split_bucket(std::vector<std::string> ids, const SplitConfig& config,
                  std::uint64_t stream, std::map<std::string, Split>& out) {
  std::sort(ids.begin(), ids.end());
  Rng rng(derive_seed(config.seed, stream));
  rng.shuffle(ids);
  const std::size_t n = ids.size();
  // The nudge keeps floor() faithful to the decimal fractions users write
  // (0.7 * 10 must floor to 7, not 6).
  const auto n_test = static_cast<std::size_t>(std::floor(config.test_fraction * n + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * n + 1e-9));
  std::size_t i = 0;
  for (; i < n_test; ++i) out[ids[i]] = Split::Test;
  for (; i < n_test + n_val; ++i) out[ids[i]] = Split::Validation;
  for (; i < n; ++i) out[ids[i]] = Split::Train;
}

}  // namespace

SplitResult assign_splits(const DatasetManifest& manifest, const SplitConfig& config) {
  config.validate();
  {
    DatasetManifest unassigned = manifest;
    unassigned.split_assignment.clear();
    require_valid(unassigned);
  }
  const std::size_t n = manifest.utterances.size();
  if (n < 3) throw UserError("dataset too small to split: " + std::to_string(n) + " utterances");

  SplitResult result;
  result.manifest = manifest;
  result.manifest.split_assignment.clear();

  if (config.stratify_by_score) {
    std::map<int, std::vector<std::string>> strata;
    for (const auto& u : manifest.utterances) {
      strata[rounded_mos(make_mos_label(u.ratings).raw)].push_back(u.utterance_id);
    }
    for (const auto& [score, ids] : strata) {
      split_bucket(ids, config, static_cast<std::uint64_t>(score),
                   result.manifest.split_assignment);
    }
  } else {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (const auto& u : manifest.utterances) ids.push_back(u.utterance_id);
    split_bucket(std::move(ids), config, 0, result.manifest.split_assignment);
  }

  std::size_t n_test = 0, n_val = 0;
  for (const auto& [id, split] : result.manifest.split_assignment) {
    (void)id;
    if (split == Split::Test) ++n_test;
    if (split == Split::Validation) ++n_val;
  }
  if (n_test == 0) result.warnings.push_back("test split is empty");
  if (n_val == 0) result.warnings.push_back("validation split is empty");
  return result;
}

void write_split_file(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ostringstream out;
  out << "utterance_id,split\n";
  for (const auto& [id, split] : manifest.split_assignment) {
    out << csv_escape(id) << ',' << to_string(split) << "\n";
  }
  write_text_file(path, out.str());
}

void load_split_file(const std::filesystem::path& path, DatasetManifest& manifest) {
  const auto lines = split_lines(read_text_file(path));
  if (lines.empty() || lines[0] != "utterance_id,split") {
    throw ParseError("bad split file header in " + path.string(), 1);
  }
  std::map<std::string, Split> assignment;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = split_string(lines[i], ',');
    if (fields.size() != 2) throw ParseError("expected 2 fields", i + 1);
    auto split = split_from_string(fields[1]);
    if (!split) throw ParseError("unknown split '" + fields[1] + "'", i + 1);
    assignment[fields[0]] = *split;
  }
  manifest.split_assignment = std::move(assignment);
  require_valid(manifest);
}

std::vector<float> load_audio(const Utterance& utterance, int target_rate) {
  WavData wav;
  try {
    wav = read_wav(utterance.audio_path);
  } catch (const UserError& e) {
    throw UserError("utterance '" + utterance.utterance_id + "': " + e.what());
  }
  if (wav.samples.empty()) {
    throw UserError("utterance '" + utterance.utterance_id + "': empty audio");
  }
  return resample(wav.samples, wav.sample_rate_hz, target_rate);
}

}  // namespace mospred
