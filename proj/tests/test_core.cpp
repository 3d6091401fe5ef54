#include <doctest.h>

#include <stdexcept>
#include <string>
#include <vector>

#include "mospred/core.hpp"

using namespace mospred;

namespace {

Utterance make_utterance(const std::string& id, std::vector<int> scores) {
  Utterance u;
  u.utterance_id = id;
  u.audio_path = "audio/" + id + ".wav";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    u.ratings.push_back({"rater-" + std::to_string(i), scores[i]});
  }
  return u;
}

}  // namespace

TEST_CASE("mos label averages ratings and rescales to the unit interval") {
  auto label = make_mos_label({{"a", 4}, {"b", 4}, {"c", 5}});
  CHECK(label.raw == doctest::Approx(13.0 / 3.0).epsilon(1e-15));
  CHECK(label.normalized == doctest::Approx((13.0 / 3.0 - 1.0) / 4.0).epsilon(1e-15));

  CHECK(make_mos_label({{"a", 1}}).normalized == 0.0);
  CHECK(make_mos_label({{"a", 5}}).normalized == 1.0);
  CHECK(make_mos_label({{"a", 3}}).normalized == 0.5);
}

TEST_CASE("mos label rejects empty and out-of-range ratings") {
  CHECK_THROWS_AS(make_mos_label({}), std::invalid_argument);
  CHECK_THROWS_AS(make_mos_label({{"a", 0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_mos_label({{"a", 6}}), std::invalid_argument);
  CHECK_THROWS_AS(make_mos_label({{"a", 3}, {"b", -2}}), std::invalid_argument);
}

TEST_CASE("normalize and denormalize are inverse maps") {
  for (double raw : {1.0, 1.25, 2.0, 3.0, 4.75, 5.0}) {
    CHECK(denormalize_mos(normalize_mos(raw)) == doctest::Approx(raw).epsilon(1e-15));
  }
  CHECK(normalize_mos(1.0) == 0.0);
  CHECK(normalize_mos(5.0) == 1.0);
  CHECK(denormalize_mos(0.5) == 3.0);
}

TEST_CASE("rounded mos rounds half up and clamps to the scale") {
  CHECK(rounded_mos(1.0) == 1);
  CHECK(rounded_mos(1.49) == 1);
  CHECK(rounded_mos(1.5) == 2);
  CHECK(rounded_mos(2.5) == 3);  // half-up, not banker's rounding
  CHECK(rounded_mos(3.5) == 4);
  CHECK(rounded_mos(4.49) == 4);
  CHECK(rounded_mos(4.5) == 5);
  CHECK(rounded_mos(5.0) == 5);
  CHECK(rounded_mos(0.2) == 1);   // clamped below
  CHECK(rounded_mos(-3.0) == 1);  // clamped below
  CHECK(rounded_mos(5.9) == 5);   // clamped above
}

TEST_CASE("enum names round-trip and unknown names are rejected") {
  for (Split s : {Split::Train, Split::Test, Split::Validation}) {
    CHECK(split_from_string(to_string(s)) == s);
  }
  for (Family f : {Family::SV, Family::SSL, Family::SL, Family::DUMMY}) {
    CHECK(family_from_string(to_string(f)) == f);
  }
  for (Level l : {Level::Utterance, Level::System}) {
    CHECK(level_from_string(to_string(l)) == l);
  }
  CHECK_FALSE(split_from_string("dev").has_value());
  CHECK_FALSE(split_from_string("Train").has_value());  // names are lowercase
  CHECK_FALSE(family_from_string("ssl").has_value());   // families are uppercase
  CHECK_FALSE(level_from_string("corpus").has_value());
}

TEST_CASE("manifest lookup finds utterances and filters by split") {
  DatasetManifest m;
  m.dataset_id = "demo";
  m.utterances.push_back(make_utterance("u1", {3}));
  m.utterances.push_back(make_utterance("u2", {4}));
  m.utterances.push_back(make_utterance("u3", {5}));
  m.split_assignment = {{"u1", Split::Train}, {"u2", Split::Test}, {"u3", Split::Train}};

  REQUIRE(m.find("u2") != nullptr);
  CHECK(m.find("u2")->ratings.front().score == 4);
  CHECK(m.find("missing") == nullptr);

  auto train = m.in_split(Split::Train);
  REQUIRE(train.size() == 2);
  CHECK(train[0]->utterance_id == "u1");
  CHECK(train[1]->utterance_id == "u3");
  CHECK(m.in_split(Split::Validation).empty());
}

TEST_CASE("validate accepts a clean manifest") {
  DatasetManifest m;
  m.utterances.push_back(make_utterance("u1", {3, 4}));
  m.utterances.push_back(make_utterance("u2", {5}));
  CHECK(validate_manifest(m).empty());
  CHECK_NOTHROW(require_valid(m));

  m.split_assignment = {{"u1", Split::Train}, {"u2", Split::Test}};
  CHECK(validate_manifest(m).empty());
}

TEST_CASE("validate reports duplicate ids") {
  DatasetManifest m;
  m.utterances.push_back(make_utterance("u1", {3}));
  m.utterances.push_back(make_utterance("u1", {4}));
  auto v = validate_manifest(m);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule == "duplicate id");
  CHECK(v[0].utterance_id == "u1");
}

TEST_CASE("validate reports rating problems") {
  DatasetManifest m;
  m.utterances.push_back(make_utterance("empty", {}));
  m.utterances.push_back(make_utterance("bad-score", {3, 9}));
  auto v = validate_manifest(m);
  REQUIRE(v.size() == 2);
  CHECK(v[0].rule == "no ratings");
  CHECK(v[1].rule == "invalid score");
  CHECK(v[1].utterance_id == "bad-score");
}

TEST_CASE("validate reports a bad sample rate") {
  DatasetManifest m;
  auto u = make_utterance("u1", {3});
  u.sample_rate_hz = 0;
  m.utterances.push_back(u);
  auto v = validate_manifest(m);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule == "invalid sample rate");
}

TEST_CASE("validate cross-checks split assignment coverage both ways") {
  DatasetManifest m;
  m.utterances.push_back(make_utterance("u1", {3}));
  m.utterances.push_back(make_utterance("u2", {4}));

  SUBCASE("empty assignment is fine (splits not assigned yet)") {
    CHECK(validate_manifest(m).empty());
  }
  SUBCASE("assignment naming an unknown utterance") {
    m.split_assignment = {{"u1", Split::Train}, {"u2", Split::Test}, {"ghost", Split::Train}};
    auto v = validate_manifest(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule == "unknown id in split");
    CHECK(v[0].utterance_id == "ghost");
  }
  SUBCASE("utterance missing from the assignment") {
    m.split_assignment = {{"u1", Split::Train}};
    auto v = validate_manifest(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule == "missing split");
    CHECK(v[0].utterance_id == "u2");
  }
}

TEST_CASE("require_valid throws a summary naming the rules") {
  DatasetManifest m;
  m.dataset_id = "broken";
  m.utterances.push_back(make_utterance("u1", {}));
  try {
    require_valid(m);
    FAIL("expected UserError");
  } catch (const UserError& e) {
    const std::string what = e.what();
    CHECK(what.find("broken") != std::string::npos);
    CHECK(what.find("no ratings") != std::string::npos);
    CHECK(what.find("u1") != std::string::npos);
  }
}
