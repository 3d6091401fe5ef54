#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mospred/core.hpp"
#include "mospred/ingest.hpp"
#include "mospred/util.hpp"

using namespace mospred;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mospred-tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path write_csv(const std::filesystem::path& dir, const std::string& body) {
  const auto path = dir / "ratings.csv";
  write_text_file(path, body);
  return path;
}

// N utterances, one rating each; score cycles 1..5 so stratification has
// something to hold on to.
DatasetManifest synthetic_manifest(std::size_t n) {
  DatasetManifest m;
  m.dataset_id = "synthetic";
  for (std::size_t i = 0; i < n; ++i) {
    Utterance u;
    u.utterance_id = "utt-" + std::to_string(1000 + i);  // fixed-width, sortable
    u.audio_path = "audio/" + u.utterance_id + ".wav";
    u.system_id = "sys-" + std::to_string(i % 3);
    u.ratings.push_back({"r0", static_cast<int>(i % 5) + 1});
    m.utterances.push_back(std::move(u));
  }
  return m;
}

std::map<Split, std::size_t> split_counts(const DatasetManifest& m) {
  std::map<Split, std::size_t> counts;
  for (const auto& [id, split] : m.split_assignment) {
    (void)id;
    ++counts[split];
  }
  return counts;
}

}  // namespace

TEST_CASE("ratings csv loads into grouped utterances") {
  const auto dir = scratch_dir("ingest-load");
  const auto path = write_csv(dir,
                              "utterance_id,audio_path,system_id,rater_id,score\n"
                              "u1,audio/u1.wav,sysA,r1,4\n"
                              "u1,audio/u1.wav,sysA,r2,5\n"
                              "u2,audio/u2.wav,,r1,2\n");
  const auto m = load_ratings(path, "demo");
  CHECK(m.dataset_id == "demo");
  REQUIRE(m.utterances.size() == 2);
  CHECK(m.utterances[0].utterance_id == "u1");
  CHECK(m.utterances[0].system_id == "sysA");
  REQUIRE(m.utterances[0].ratings.size() == 2);
  CHECK(m.utterances[0].ratings[0].rater_id == "r1");
  CHECK(m.utterances[0].ratings[0].score == 4);
  CHECK(m.utterances[0].ratings[1].score == 5);
  // Empty system_id becomes the "unknown" placeholder.
  CHECK(m.utterances[1].system_id == "unknown");
  // Default dataset_id falls back to the file stem.
  CHECK(load_ratings(path).dataset_id == "ratings");
}

TEST_CASE("ratings csv parse failures carry line numbers") {
  const auto dir = scratch_dir("ingest-parse");

  SUBCASE("bad header") {
    const auto path = write_csv(dir, "id,path,system,rater,score\nu1,a.wav,s,r,3\n");
    CHECK_THROWS_AS(load_ratings(path), ParseError);
  }
  SUBCASE("empty file") {
    CHECK_THROWS_AS(load_ratings(write_csv(dir, "")), ParseError);
  }
  SUBCASE("wrong field count") {
    const auto path = write_csv(dir,
                                "utterance_id,audio_path,system_id,rater_id,score\n"
                                "u1,a.wav,s,r\n");
    try {
      load_ratings(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("non-integer score") {
    const auto path = write_csv(dir,
                                "utterance_id,audio_path,system_id,rater_id,score\n"
                                "u1,a.wav,s,r1,3\n"
                                "u1,a.wav,s,r2,good\n");
    try {
      load_ratings(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_ratings(dir / "nope.csv"), UserError);
  }
}

TEST_CASE("ratings csv rejects duplicates and conflicting metadata") {
  const auto dir = scratch_dir("ingest-dupes");
  const auto dup = write_csv(dir,
                             "utterance_id,audio_path,system_id,rater_id,score\n"
                             "u1,a.wav,s,r1,3\n"
                             "u1,a.wav,s,r1,4\n");
  CHECK_THROWS_AS(load_ratings(dup), UserError);

  const auto conflict = write_csv(dir,
                                  "utterance_id,audio_path,system_id,rater_id,score\n"
                                  "u1,a.wav,s,r1,3\n"
                                  "u1,other.wav,s,r2,4\n");
  CHECK_THROWS_AS(load_ratings(conflict), ParseError);
}

TEST_CASE("ratings write/load round-trip is exact") {
  const auto dir = scratch_dir("ingest-roundtrip");
  auto m = synthetic_manifest(7);
  m.utterances[2].ratings.push_back({"r1", 5});

  const auto path = dir / "out.csv";
  write_ratings(path, m);
  const auto back = load_ratings(path, m.dataset_id);

  REQUIRE(back.utterances.size() == m.utterances.size());
  for (std::size_t i = 0; i < m.utterances.size(); ++i) {
    CHECK(back.utterances[i].utterance_id == m.utterances[i].utterance_id);
    CHECK(back.utterances[i].audio_path == m.utterances[i].audio_path);
    CHECK(back.utterances[i].system_id == m.utterances[i].system_id);
    REQUIRE(back.utterances[i].ratings.size() == m.utterances[i].ratings.size());
    for (std::size_t r = 0; r < m.utterances[i].ratings.size(); ++r) {
      CHECK(back.utterances[i].ratings[r].rater_id == m.utterances[i].ratings[r].rater_id);
      CHECK(back.utterances[i].ratings[r].score == m.utterances[i].ratings[r].score);
    }
  }

  // A second write of the loaded manifest is byte-identical.
  const auto again = dir / "again.csv";
  write_ratings(again, back);
  CHECK(read_text_file(again) == read_text_file(path));
}

TEST_CASE("split config validates fractions") {
  SplitConfig c;
  CHECK_NOTHROW(c.validate());
  c = {0.5, 0.25, 0.25, 0, true};
  CHECK_NOTHROW(c.validate());
  c = {0.9, 0.2, 0.1, 0, true};  // sums to 1.2
  CHECK_THROWS_AS(c.validate(), UserError);
  c = {1.0, 0.0, 0.0, 0, true};  // zero fractions not allowed
  CHECK_THROWS_AS(c.validate(), UserError);
  c = {-0.2, 0.6, 0.6, 0, true};
  CHECK_THROWS_AS(c.validate(), UserError);
}

TEST_CASE("split sizes follow floor arithmetic with the remainder to train") {
  auto m = synthetic_manifest(10);
  SplitConfig c{0.7, 0.15, 0.15, 3, false};
  const auto result = assign_splits(m, c);
  const auto counts = split_counts(result.manifest);
  // floor(0.15 * 10) = 1 to test and validation, the other 8 to train.
  CHECK(counts.at(Split::Train) == 8);
  CHECK(counts.at(Split::Test) == 1);
  CHECK(counts.at(Split::Validation) == 1);
  CHECK(result.warnings.empty());
  CHECK(result.manifest.split_assignment.size() == 10);
}

TEST_CASE("split sizes at corpus scale") {
  // 28,292 utterances at 80/10/10: 2,829 each to test and validation,
  // 22,634 to train.
  auto m = synthetic_manifest(28292);
  SplitConfig c{0.8, 0.1, 0.1, 17, false};
  const auto counts = split_counts(assign_splits(m, c).manifest);
  CHECK(counts.at(Split::Train) == 22634);
  CHECK(counts.at(Split::Test) == 2829);
  CHECK(counts.at(Split::Validation) == 2829);
}

TEST_CASE("tiny datasets split with empty-split warnings, below 3 they refuse") {
  auto m = synthetic_manifest(5);
  // All five utterances land in one stratum bucket of size <= 1 each under
  // stratification (scores 1..5 distinct), so test/validation floor to zero.
  SplitConfig c{0.8, 0.1, 0.1, 0, true};
  const auto result = assign_splits(m, c);
  const auto counts = split_counts(result.manifest);
  CHECK(counts.at(Split::Train) == 5);
  REQUIRE(result.warnings.size() == 2);
  CHECK(result.warnings[0] == "test split is empty");
  CHECK(result.warnings[1] == "validation split is empty");

  CHECK_THROWS_AS(assign_splits(synthetic_manifest(2), c), UserError);
}

TEST_CASE("splits are deterministic and depend only on the id set and seed") {
  auto m = synthetic_manifest(60);
  SplitConfig c{0.7, 0.15, 0.15, 11, true};
  const auto a = assign_splits(m, c);
  const auto b = assign_splits(m, c);
  CHECK(a.manifest.split_assignment == b.manifest.split_assignment);

  // Reversing the manifest row order changes nothing.
  auto reversed = m;
  std::reverse(reversed.utterances.begin(), reversed.utterances.end());
  CHECK(assign_splits(reversed, c).manifest.split_assignment ==
        a.manifest.split_assignment);

  // A different seed produces a different partition of 60 utterances.
  SplitConfig other = c;
  other.seed = 12;
  CHECK(assign_splits(m, other).manifest.split_assignment !=
        a.manifest.split_assignment);
}

TEST_CASE("stratified splitting balances every score stratum") {
  // 100 utterances, 20 per rounded score; 60/20/20 must hold inside each
  // stratum exactly: 12 train, 4 test, 4 validation per score.
  DatasetManifest m;
  m.dataset_id = "strata";
  for (int score = 1; score <= 5; ++score) {
    for (int i = 0; i < 20; ++i) {
      Utterance u;
      u.utterance_id = "s" + std::to_string(score) + "-" + std::to_string(i);
      u.audio_path = u.utterance_id + ".wav";
      u.ratings.push_back({"r0", score});
      m.utterances.push_back(std::move(u));
    }
  }
  SplitConfig c{0.6, 0.2, 0.2, 5, true};
  const auto result = assign_splits(m, c);

  std::map<int, std::map<Split, int>> per_stratum;
  for (const auto& u : result.manifest.utterances) {
    const int score = u.ratings.front().score;
    ++per_stratum[score][result.manifest.split_assignment.at(u.utterance_id)];
  }
  for (int score = 1; score <= 5; ++score) {
    CHECK(per_stratum[score][Split::Train] == 12);
    CHECK(per_stratum[score][Split::Test] == 4);
    CHECK(per_stratum[score][Split::Validation] == 4);
  }
}

TEST_CASE("split file write/load round-trips and validates coverage") {
  const auto dir = scratch_dir("ingest-splitfile");
  auto m = synthetic_manifest(12);
  auto assigned = assign_splits(m, {0.7, 0.15, 0.15, 2, false}).manifest;

  const auto path = dir / "splits.csv";
  write_split_file(path, assigned);

  auto fresh = synthetic_manifest(12);
  CHECK(fresh.split_assignment.empty());
  load_split_file(path, fresh);
  CHECK(fresh.split_assignment == assigned.split_assignment);

  SUBCASE("header is checked") {
    write_text_file(path, "id,split\nu1,train\n");
    CHECK_THROWS_AS(load_split_file(path, fresh), ParseError);
  }
  SUBCASE("unknown split names are rejected") {
    write_text_file(path, "utterance_id,split\nutt-1000,dev\n");
    CHECK_THROWS_AS(load_split_file(path, fresh), ParseError);
  }
  SUBCASE("assignments must cover the manifest") {
    write_text_file(path, "utterance_id,split\nutt-1000,train\n");
    CHECK_THROWS_AS(load_split_file(path, fresh), UserError);
  }
}

TEST_CASE("load_audio decorates errors with the utterance id") {
  Utterance u;
  u.utterance_id = "broken-utt";
  u.audio_path = scratch_dir("ingest-audio") / "missing.wav";
  try {
    load_audio(u);
    FAIL("expected UserError");
  } catch (const UserError& e) {
    CHECK(std::string(e.what()).find("broken-utt") != std::string::npos);
  }
}
