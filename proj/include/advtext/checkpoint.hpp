/**
 * @file checkpoint.hpp
 * @brief Binary parameter checkpoints plus JSON metadata sidecars.
 *
 * The binary file stores each named parameter matrix verbatim; the sidecar
 * records the model configuration, the vocabulary file hash, and the
 * training seed so that later commands can refuse incompatible artifacts.
 */
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "advtext/autodiff.hpp"
#include "advtext/common.hpp"
#include "advtext/config.hpp"

namespace advtext {

struct CheckpointMeta {
  int format_version = 1;
  std::string model_kind;  // "target", "autoencoder", or "latent"
  ModelConfig model_config;
  std::string vocab_hash;
  std::uint64_t train_seed = 0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"format_version", format_version},
                          {"model_kind", model_kind},
                          {"model_config", nlohmann::json(model_config)},
                          {"vocab_hash", vocab_hash},
                          {"train_seed", train_seed}};
  }

  static CheckpointMeta from_json(const nlohmann::json& j) {
    CheckpointMeta m;
    m.format_version = j.at("format_version").get<int>();
    m.model_kind = j.at("model_kind").get<std::string>();
    m.model_config = j.at("model_config").get<ModelConfig>();
    m.vocab_hash = j.at("vocab_hash").get<std::string>();
    m.train_seed = j.at("train_seed").get<std::uint64_t>();
    return m;
  }
};

namespace detail {

constexpr char kCheckpointMagic[8] = {'A', 'D', 'V', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_u32(std::ofstream& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.write(b, 4);
}

inline std::uint32_t read_u32(std::ifstream& in) {
  char b[4];
  in.read(b, 4);
  std::uint32_t v = 0;
  std::memcpy(&v, b, 4);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const std::vector<nn::Parameter*>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);
  out.write(detail::kCheckpointMagic, 8);
  detail::write_u32(out, detail::kCheckpointVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const nn::Parameter* p : params) {
    detail::write_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    detail::write_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    detail::write_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p->value.size())));
  }
  if (!out) throw ConfigError("failed writing checkpoint: " + path);
}

/// Loads values into the given parameters, matched by name; the file must
/// contain exactly the expected parameter set with matching shapes.
inline void load_checkpoint(const std::string& path, const std::vector<nn::Parameter*>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
    throw ConfigError("not a checkpoint file: " + path);
  if (detail::read_u32(in) != detail::kCheckpointVersion)
    throw ConfigError("unsupported checkpoint version in " + path);
  const std::uint32_t count = detail::read_u32(in);
  std::map<std::string, Matrix> stored;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = detail::read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rows = detail::read_u32(in);
    const std::uint32_t cols = detail::read_u32(in);
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!in) throw ConfigError("truncated checkpoint: " + path);
    stored.emplace(std::move(name), std::move(m));
  }
  if (stored.size() != params.size())
    throw ConfigError("checkpoint " + path + " holds " + std::to_string(stored.size()) +
                      " parameters, expected " + std::to_string(params.size()));
  for (nn::Parameter* p : params) {
    auto it = stored.find(p->name);
    if (it == stored.end())
      throw ConfigError("checkpoint " + path + " is missing parameter " + p->name);
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols())
      throw ConfigError("checkpoint parameter " + p->name + " has shape " +
                        std::to_string(it->second.rows()) + "x" + std::to_string(it->second.cols()) +
                        ", expected " + std::to_string(p->value.rows()) + "x" +
                        std::to_string(p->value.cols()));
    p->value = it->second;
  }
}

inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file for hashing: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return to_hex(fnv1a64(bytes));
}

inline void save_checkpoint_meta(const std::string& path, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open metadata for writing: " + path);
  out << meta.to_json().dump(2) << "\n";
}

inline CheckpointMeta load_checkpoint_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open metadata: " + path);
  try {
    nlohmann::json j;
    in >> j;
    return CheckpointMeta::from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint metadata " + path + ": " + e.what());
  }
}

}  // namespace advtext
