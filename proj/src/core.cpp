#include "mospred/core.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mospred {

const char* to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    case Split::Validation: return "validation";
  }
  return "train";
}

std::optional<Split> split_from_string(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "test") return Split::Test;
  if (name == "validation") return Split::Validation;
  return std::nullopt;
}

const char* to_string(Family family) {
  switch (family) {
    case Family::SV: return "SV";
    case Family::SSL: return "SSL";
    case Family::SL: return "SL";
    case Family::DUMMY: return "DUMMY";
  }
  return "DUMMY";
}

std::optional<Family> family_from_string(const std::string& name) {
  if (name == "SV") return Family::SV;
  if (name == "SSL") return Family::SSL;
  if (name == "SL") return Family::SL;
  if (name == "DUMMY") return Family::DUMMY;
  return std::nullopt;
}

const char* to_string(Level level) {
  return level == Level::Utterance ? "utterance" : "system";
}

std::optional<Level> level_from_string(const std::string& name) {
  if (name == "utterance") return Level::Utterance;
  if (name == "system") return Level::System;
  return std::nullopt;
}

MOSLabel make_mos_label(const std::vector<RatingRecord>& ratings) {
  if (ratings.empty()) throw std::invalid_argument("no ratings");
  double sum = 0.0;
  for (const auto& r : ratings) {
    if (r.score < kMinScore || r.score > kMaxScore) {
      throw std::invalid_argument("invalid score: " + std::to_string(r.score));
    }
    sum += static_cast<double>(r.score);
  }
  MOSLabel label;
  label.raw = sum / static_cast<double>(ratings.size());
  label.normalized = normalize_mos(label.raw);
  return label;
}

int rounded_mos(double raw) {
  int r = static_cast<int>(std::floor(raw + 0.5));
  if (r < kMinScore) r = kMinScore;
  if (r > kMaxScore) r = kMaxScore;
  return r;
}

const Utterance* DatasetManifest::find(const std::string& utterance_id) const {
  for (const auto& u : utterances) {
    if (u.utterance_id == utterance_id) return &u;
  }
  return nullptr;
}

std::vector<const Utterance*> DatasetManifest::in_split(Split split) const {
  std::vector<const Utterance*> out;
  for (const auto& u : utterances) {
    auto it = split_assignment.find(u.utterance_id);
    if (it != split_assignment.end() && it->second == split) out.push_back(&u);
  }
  return out;
}

std::vector<Violation> validate_manifest(const DatasetManifest& manifest) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (const auto& u : manifest.utterances) {
    if (!seen.insert(u.utterance_id).second) {
      out.push_back({u.utterance_id, "duplicate id", "utterance_id appears more than once"});
    }
    if (u.ratings.empty()) {
      out.push_back({u.utterance_id, "no ratings", "utterance has no rating records"});
    }
    for (const auto& r : u.ratings) {
      if (r.score < kMinScore || r.score > kMaxScore) {
        out.push_back({u.utterance_id, "invalid score",
                       "rater " + r.rater_id + " score " + std::to_string(r.score)});
      }
    }
    if (u.sample_rate_hz <= 0) {
      out.push_back({u.utterance_id, "invalid sample rate",
                     std::to_string(u.sample_rate_hz) + " Hz"});
    }
  }
  if (!manifest.split_assignment.empty()) {
    for (const auto& [id, split] : manifest.split_assignment) {
      (void)split;
      if (seen.find(id) == seen.end()) {
        out.push_back({id, "unknown id in split", "split assignment for unlisted utterance"});
      }
    }
    for (const auto& u : manifest.utterances) {
      if (manifest.split_assignment.find(u.utterance_id) == manifest.split_assignment.end()) {
        out.push_back({u.utterance_id, "missing split", "utterance not covered by split assignment"});
      }
    }
  }
  return out;
}

void require_valid(const DatasetManifest& manifest) {
  auto violations = validate_manifest(manifest);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "manifest '" << manifest.dataset_id << "' has " << violations.size()
      << " violation(s):";
  std::size_t shown = 0;
  for (const auto& v : violations) {
    if (shown++ == 5) {
      msg << " ...";
      break;
    }
    msg << " [" << v.rule << " @ " << v.utterance_id << "]";
  }
  throw UserError(msg.str());
}

}  // namespace mospred
