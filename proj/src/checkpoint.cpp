#include "mospred/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "mospred/util.hpp"

namespace mospred {

namespace {

constexpr char kMagic[4] = {'M', 'O', 'S', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_block(std::string& out, const double* values, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
  }
}

void read_block(const unsigned char*& p, const unsigned char* end, double* values,
                std::size_t n, const std::filesystem::path& path) {
  if (static_cast<std::size_t>(end - p) < 4 * n) {
    throw UserError("corrupt checkpoint (truncated parameters): " + path.string());
  }
  for (std::size_t i = 0; i < n; ++i, p += 4) {
    values[i] = static_cast<double>(std::bit_cast<float>(read_u32(p)));
  }
}

nlohmann::json header_json(const Checkpoint& c) {
  nlohmann::json j;
  j["extractor_id"] = c.extractor_id;
  j["head_config"] = {{"input_dim", c.head_config.input_dim},
                      {"hidden_dim", c.head_config.hidden_dim},
                      {"dropout_rate", c.head_config.dropout_rate}};
  j["init_seed"] = c.params.init_seed;
  j["train_config"] = {{"batch_size", c.train_config.batch_size},
                       {"learning_rate", c.train_config.learning_rate},
                       {"max_epochs", c.train_config.max_epochs},
                       {"patience_epochs", c.train_config.patience_epochs},
                       {"seed", c.train_config.seed}};
  j["lineage"] = nlohmann::json::array();
  for (const auto& entry : c.lineage) {
    j["lineage"].push_back({{"dataset_id", entry.dataset_id}, {"phase", entry.phase}});
  }
  j["best_epoch"] = c.best_epoch;
  j["history"] = nlohmann::json::array();
  for (const auto& stats : c.history) {
    nlohmann::json row;
    row["train_loss"] = stats.train_loss;
    if (std::isnan(stats.test_srcc)) {
      row["test_srcc"] = nullptr;  // JSON has no NaN
    } else {
      row["test_srcc"] = stats.test_srcc;
    }
    j["history"].push_back(std::move(row));
  }
  return j;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string header = header_json(checkpoint).dump();

  std::string blob;
  blob.append(kMagic, 4);
  put_u32(blob, kVersion);
  put_u32(blob, static_cast<std::uint32_t>(header.size()));
  blob += header;
  put_block(blob, checkpoint.params.w1.data(), checkpoint.params.w1.size());
  put_block(blob, checkpoint.params.b1.data(), checkpoint.params.b1.size());
  put_block(blob, checkpoint.params.w2.data(), checkpoint.params.w2.size());
  put_block(blob, &checkpoint.params.b2, 1);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UserError("cannot write checkpoint: " + path.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  out.flush();
  if (!out) throw UserError("cannot write checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open checkpoint: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw UserError("not a checkpoint file: " + path.string());
  }
  const std::uint32_t version = read_u32(bytes.data() + 4);
  if (version != kVersion) {
    throw UserError("unsupported checkpoint version " + std::to_string(version) + ": " +
                    path.string());
  }
  const std::uint32_t header_size = read_u32(bytes.data() + 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(header_size)) {
    throw UserError("corrupt checkpoint (truncated header): " + path.string());
  }

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_size);
  } catch (const nlohmann::json::exception& e) {
    throw UserError("corrupt checkpoint header: " + path.string() + " (" + e.what() + ")");
  }

  Checkpoint c;
  try {
    c.extractor_id = j.at("extractor_id").get<std::string>();
    c.head_config.input_dim = j.at("head_config").at("input_dim").get<std::uint32_t>();
    c.head_config.hidden_dim = j.at("head_config").at("hidden_dim").get<std::uint32_t>();
    c.head_config.dropout_rate = j.at("head_config").at("dropout_rate").get<double>();
    c.params.init_seed = j.at("init_seed").get<std::uint64_t>();
    c.train_config.batch_size = j.at("train_config").at("batch_size").get<std::size_t>();
    c.train_config.learning_rate = j.at("train_config").at("learning_rate").get<double>();
    c.train_config.max_epochs = j.at("train_config").at("max_epochs").get<std::size_t>();
    c.train_config.patience_epochs =
        j.at("train_config").at("patience_epochs").get<std::size_t>();
    c.train_config.seed = j.at("train_config").at("seed").get<std::uint64_t>();
    for (const auto& entry : j.at("lineage")) {
      c.lineage.push_back({entry.at("dataset_id").get<std::string>(),
                           entry.at("phase").get<std::string>()});
    }
    c.best_epoch = j.at("best_epoch").get<std::size_t>();
    for (const auto& row : j.at("history")) {
      EpochStats stats;
      stats.train_loss = row.at("train_loss").get<double>();
      stats.test_srcc = row.at("test_srcc").is_null()
                            ? std::numeric_limits<double>::quiet_NaN()
                            : row.at("test_srcc").get<double>();
      c.history.push_back(stats);
    }
  } catch (const nlohmann::json::exception& e) {
    throw UserError("corrupt checkpoint header: " + path.string() + " (" + e.what() + ")");
  }

  c.head_config.validate();
  const std::size_t d = c.head_config.input_dim;
  const std::size_t h = c.head_config.hidden_dim;
  c.params.w1.resize(h * d);
  c.params.b1.resize(h);
  c.params.w2.resize(h);

  const unsigned char* p = bytes.data() + 12 + header_size;
  const unsigned char* end = bytes.data() + bytes.size();
  read_block(p, end, c.params.w1.data(), c.params.w1.size(), path);
  read_block(p, end, c.params.b1.data(), c.params.b1.size(), path);
  read_block(p, end, c.params.w2.data(), c.params.w2.size(), path);
  read_block(p, end, &c.params.b2, 1, path);
  if (p != end) {
    throw UserError("corrupt checkpoint (trailing bytes): " + path.string());
  }
  return c;
}

}  // namespace mospred
