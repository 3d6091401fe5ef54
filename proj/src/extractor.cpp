#include "mospred/extractor.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mospred/prng.hpp"
#include "mospred/util.hpp"

namespace mospred {

namespace {

constexpr std::size_t kFrameLen = 400;  // 25 ms at 16 kHz
constexpr std::size_t kFrameHop = 160;  // 10 ms

double rms_of(const float* data, std::size_t len) {
  if (len == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    acc += static_cast<double>(data[i]) * static_cast<double>(data[i]);
  }
  return std::sqrt(acc / static_cast<double>(len));
}

}  // namespace

DummyExtractor::DummyExtractor(std::uint64_t seed, std::uint32_t dim, bool time_varying)
    : seed_(seed) {
  spec_.extractor_id = "dummy";
  spec_.family = Family::DUMMY;
  spec_.version_label = time_varying ? "tv" : "-";
  spec_.output_dim = dim;
  spec_.time_varying = time_varying;
  spec_.param_count = 0;
}

EmbeddingMatrix DummyExtractor::extract(const std::vector<float>& waveform) const {
  return dummy_extract(seed_, waveform, spec_.output_dim, spec_.time_varying);
}

EmbeddingMatrix dummy_extract(std::uint64_t seed, const std::vector<float>& waveform,
                              std::uint32_t dim, bool time_varying) {
  const std::uint64_t content =
      fnv1a64(waveform.data(), waveform.size() * sizeof(float));

  EmbeddingMatrix out;
  out.extractor_id = "dummy";
  out.dim = dim;

  std::uint32_t frames = 1;
  if (time_varying && waveform.size() > kFrameLen) {
    frames = static_cast<std::uint32_t>(1 + (waveform.size() - kFrameLen) / kFrameHop);
  }
  out.frames = frames;
  out.values.assign(static_cast<std::size_t>(dim) * frames, 0.0f);

  for (std::uint32_t t = 0; t < frames; ++t) {
    const float* start = waveform.data();
    std::size_t len = waveform.size();
    if (time_varying && frames > 1) {
      start = waveform.data() + static_cast<std::size_t>(t) * kFrameHop;
      len = kFrameLen;
    }
    out.at(0, t) = static_cast<float>(rms_of(start, len));
    Rng rng(derive_seed(seed ^ content, t));
    for (std::uint32_t d = 1; d < dim; ++d) {
      out.at(d, t) = static_cast<float>(rng.uniform(-0.5, 0.5));
    }
  }
  return out;
}

ExtractorRegistry ExtractorRegistry::builtin() {
  ExtractorRegistry reg;
  auto add = [&reg](const char* id, Family family, const char* version, std::uint32_t dim,
                    bool tv, std::uint64_t params) {
    reg.add_spec({id, family, version, dim, tv, params});
  };
  // Speaker-verification family: fixed-size embeddings.
  add("titanet-large", Family::SV, "Large", 192, false, 25'300'000);
  add("speakernet-medium", Family::SV, "Medium", 256, false, 5'000'000);
  add("ge2e", Family::SV, "-", 256, false, 1'400'000);
  add("clova-hasp", Family::SV, "H/ASP", 512, false, 8'000'000);
  // Self-supervised family: time-varying embeddings.
  add("wav2vec2-xls-r-300m", Family::SSL, "xls-r-300m", 1024, true, 300'000'000);
  add("wav2vec2-xls-r-1b", Family::SSL, "xls-r-1b", 1280, true, 1'000'000'000);
  add("wav2vec2-xls-r-2b", Family::SSL, "xls-r-2b", 1920, true, 2'000'000'000);
  add("wavlm-base-plus", Family::SSL, "Base-Plus", 768, true, 94'000'000);
  add("wavlm-large", Family::SSL, "Large", 1024, true, 316'000'000);
  add("hubert-large", Family::SSL, "Large", 768, true, 300'000'000);
  add("hubert-xlarge", Family::SSL, "xLarge", 1024, true, 1'000'000'000);
  // Supervised family (Whisper encoder states).
  add("whisper-tiny", Family::SL, "Tiny", 384, true, 39'000'000);
  add("whisper-base", Family::SL, "Base", 512, true, 74'000'000);
  add("whisper-small", Family::SL, "Small", 768, true, 244'000'000);
  add("whisper-medium", Family::SL, "Medium", 1024, true, 769'000'000);
  add("whisper-large", Family::SL, "Large", 1280, true, 1'500'000'000);

  add("dummy", Family::DUMMY, "-", 64, false, 0);
  reg.register_backend("dummy", [](const ExtractorSpec& spec) -> std::unique_ptr<Extractor> {
    return std::make_unique<DummyExtractor>(0, spec.output_dim, spec.time_varying);
  });
  return reg;
}

void ExtractorRegistry::add_spec(const ExtractorSpec& spec) {
  if (index_.count(spec.extractor_id)) {
    throw UserError("duplicate extractor id: " + spec.extractor_id);
  }
  if (spec.output_dim == 0) throw UserError("extractor output_dim must be positive");
  if (spec.family == Family::SV && spec.time_varying) {
    throw UserError("SV extractors are fixed-size: " + spec.extractor_id);
  }
  if ((spec.family == Family::SSL || spec.family == Family::SL) && !spec.time_varying) {
    throw UserError("SSL/SL extractors are time-varying: " + spec.extractor_id);
  }
  index_[spec.extractor_id] = specs_.size();
  specs_.push_back(spec);
}

void ExtractorRegistry::register_backend(const std::string& extractor_id,
                                         ExtractorFactory factory) {
  if (!has(extractor_id)) throw UserError("unknown extractor: " + extractor_id);
  factories_[extractor_id] = std::move(factory);
}

bool ExtractorRegistry::has(const std::string& extractor_id) const {
  return index_.count(extractor_id) > 0;
}

const ExtractorSpec& ExtractorRegistry::spec(const std::string& extractor_id) const {
  auto it = index_.find(extractor_id);
  if (it == index_.end()) throw UserError("unknown extractor: " + extractor_id);
  return specs_[it->second];
}

bool ExtractorRegistry::backend_available(const std::string& extractor_id) const {
  return factories_.count(extractor_id) > 0;
}

std::unique_ptr<Extractor> ExtractorRegistry::create(const std::string& extractor_id) const {
  const ExtractorSpec& s = spec(extractor_id);
  auto it = factories_.find(extractor_id);
  if (it == factories_.end()) {
    throw UserError("backend unavailable: " + extractor_id);
  }
  return it->second(s);
}

void write_registry_manifest(const std::filesystem::path& path,
                             const ExtractorRegistry& registry) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& s : registry.specs()) {
    entries.push_back({{"extractor_id", s.extractor_id},
                       {"family", to_string(s.family)},
                       {"version_label", s.version_label},
                       {"output_dim", s.output_dim},
                       {"time_varying", s.time_varying},
                       {"param_count", s.param_count}});
  }
  write_text_file(path, nlohmann::json{{"extractors", entries}}.dump(2) + "\n");
}

ExtractorRegistry load_registry_manifest(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw UserError("bad registry manifest " + path.string() + ": " + e.what());
  }
  ExtractorRegistry reg;
  for (const auto& entry : doc.at("extractors")) {
    ExtractorSpec s;
    s.extractor_id = entry.at("extractor_id").get<std::string>();
    auto family = family_from_string(entry.at("family").get<std::string>());
    if (!family) throw UserError("bad family in registry manifest: " + s.extractor_id);
    s.family = *family;
    s.version_label = entry.value("version_label", std::string("-"));
    s.output_dim = entry.at("output_dim").get<std::uint32_t>();
    s.time_varying = entry.at("time_varying").get<bool>();
    s.param_count = entry.at("param_count").get<std::uint64_t>();
    reg.add_spec(s);
  }
  if (reg.has("dummy")) {
    reg.register_backend("dummy", [](const ExtractorSpec& spec) -> std::unique_ptr<Extractor> {
      return std::make_unique<DummyExtractor>(0, spec.output_dim, spec.time_varying);
    });
  }
  return reg;
}

EmbeddingMatrix run_extractor(const Extractor& extractor, const std::vector<float>& waveform) {
  if (waveform.empty()) throw UserError("empty waveform passed to extractor");
  EmbeddingMatrix out = extractor.extract(waveform);
  const ExtractorSpec& s = extractor.spec();
  if (out.dim != s.output_dim || out.frames == 0 ||
      out.values.size() != static_cast<std::size_t>(out.dim) * out.frames) {
    throw std::runtime_error("extractor '" + s.extractor_id + "' produced shape (" +
                             std::to_string(out.dim) + ", " + std::to_string(out.frames) +
                             "), expected dim " + std::to_string(s.output_dim));
  }
  if (!s.time_varying && out.frames != 1) {
    throw std::runtime_error("fixed-size extractor '" + s.extractor_id +
                             "' produced T = " + std::to_string(out.frames));
  }
  for (float v : out.values) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("extractor produced non-finite values: " + s.extractor_id);
    }
  }
  out.extractor_id = s.extractor_id;
  return out;
}

PooledFeature pool(const EmbeddingMatrix& embedding, Pooling mode) {
  if (embedding.dim == 0 || embedding.frames == 0) {
    throw std::invalid_argument("cannot pool an empty embedding");
  }
  if (mode == Pooling::Identity && embedding.frames != 1) {
    throw UserError("pooling required: identity pooling needs T = 1, got T = " +
                    std::to_string(embedding.frames));
  }
  PooledFeature out;
  out.extractor_id = embedding.extractor_id;
  out.pooling = mode;
  out.values.resize(embedding.dim);
  for (std::uint32_t d = 0; d < embedding.dim; ++d) {
    double acc = 0.0;
    for (std::uint32_t t = 0; t < embedding.frames; ++t) {
      acc += static_cast<double>(embedding.at(d, t));
    }
    out.values[d] = acc / static_cast<double>(embedding.frames);
  }
  return out;
}

}  // namespace mospred
