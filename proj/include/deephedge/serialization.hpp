#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "deephedge/hedging.hpp"
#include "deephedge/mlp.hpp"

namespace deephedge {

/// Git blob object id: SHA-1 over "blob <size>\0" followed by the content.
inline std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("git_blob_hash: cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("git_blob_hash: digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

/// Parameters as consecutive little-endian IEEE-754 doubles in MlpParams order.
inline std::string encode_parameters(std::span<const double> values) {
  std::string out(values.size() * 8, '\0');
  for (std::size_t j = 0; j < values.size(); ++j) {
    auto bits = std::bit_cast<std::uint64_t>(values[j]);
    for (int b = 0; b < 8; ++b) out[j * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  return out;
}

inline std::vector<double> decode_parameters(std::string_view bytes) {
  if (bytes.size() % 8 != 0) throw std::runtime_error("parameter blob size is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t j = 0; j < out.size(); ++j) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[j * 8 + b])) << (8 * b);
    out[j] = std::bit_cast<double>(bits);
  }
  return out;
}

namespace detail {
inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline MlpParams params_from(const std::vector<std::size_t>& sizes, std::vector<double> values) {
  MlpParams p(sizes);
  if (values.size() != p.size())
    throw std::runtime_error("parameter blob holds " + std::to_string(values.size()) + " values, expected " +
                             std::to_string(p.size()));
  std::copy(values.begin(), values.end(), p.values().begin());
  return p;
}
}  // namespace detail

inline const char* kPreprocessing = "x = ln(spot / reference_spot)";

/// Writes `<base>.bin` (flat parameters) and `<base>.json` (layer sizes, layout,
/// preprocessing convention, content hash).
inline void save_mlp(const MlpParams& params, const std::filesystem::path& base, double reference_spot) {
  const std::string blob = encode_parameters(params.values());
  auto bin = base;
  bin += ".bin";
  auto sidecar = base;
  sidecar += ".json";
  detail::write_file(bin, blob);
  nlohmann::json j{{"layer_sizes", params.sizes()},
                   {"layout", "layer-major; row-major weights (out x in) then biases; float64 little-endian"},
                   {"hidden_activation", "relu"},
                   {"output_activation", "identity"},
                   {"preprocessing", kPreprocessing},
                   {"reference_spot", reference_spot},
                   {"blob", bin.filename().string()},
                   {"hash", git_blob_hash(blob)}};
  detail::write_file(sidecar, j.dump(2) + "\n");
}

inline MlpParams load_mlp(const std::filesystem::path& base) {
  auto sidecar = base;
  sidecar += ".json";
  const auto j = nlohmann::json::parse(detail::read_file(sidecar));
  const std::string blob = detail::read_file(base.parent_path() / j.at("blob").get<std::string>());
  if (git_blob_hash(blob) != j.at("hash").get<std::string>())
    throw std::runtime_error("parameter blob hash mismatch for " + base.string());
  return detail::params_from(j.at("layer_sizes").get<std::vector<std::size_t>>(), decode_parameters(blob));
}

/// Saves one blob per step network plus manifest.json. `extra` is merged into the
/// manifest (market, hedge config, seeds).
inline std::string save_strategy(const StrategyStack& strategy, const std::filesystem::path& dir,
                                 const nlohmann::json& extra = nlohmann::json::object()) {
  std::filesystem::create_directories(dir);
  nlohmann::json blobs = nlohmann::json::array();
  std::string all;
  char name[32];
  for (std::size_t k = 0; k < strategy.networks.size(); ++k) {
    const std::string blob = encode_parameters(strategy.networks[k].values());
    std::snprintf(name, sizeof name, "net_%03zu.bin", k);
    detail::write_file(dir / name, blob);
    blobs.push_back({{"step", k}, {"file", name}, {"hash", git_blob_hash(blob)}});
    all += blob;
  }
  const std::string content_hash = git_blob_hash(all);
  nlohmann::json manifest = extra;
  manifest["format"] = "deephedge-strategy/1";
  manifest["layer_sizes"] = kHedgeLayerSizes;
  manifest["layout"] = "layer-major; row-major weights (out x in) then biases; float64 little-endian";
  manifest["hidden_activation"] = "relu";
  manifest["output_activation"] = "identity";
  manifest["preprocessing"] = kPreprocessing;
  manifest["reference_spot"] = strategy.reference_spot;
  manifest["n_networks"] = strategy.networks.size();
  manifest["networks"] = blobs;
  manifest["content_hash"] = content_hash;
  detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return content_hash;
}

struct LoadedStrategy {
  StrategyStack strategy;
  nlohmann::json manifest;
};

inline LoadedStrategy load_strategy(const std::filesystem::path& dir) {
  LoadedStrategy out;
  out.manifest = nlohmann::json::parse(detail::read_file(dir / "manifest.json"));
  const auto& m = out.manifest;
  if (m.value("format", "") != "deephedge-strategy/1")
    throw std::runtime_error("unsupported strategy format in " + dir.string());
  const auto sizes = m.at("layer_sizes").get<std::vector<std::size_t>>();
  out.strategy.reference_spot = m.at("reference_spot").get<double>();
  std::string all;
  for (const auto& entry : m.at("networks")) {
    const std::string blob = detail::read_file(dir / entry.at("file").get<std::string>());
    if (git_blob_hash(blob) != entry.at("hash").get<std::string>())
      throw std::runtime_error("hash mismatch for " + entry.at("file").get<std::string>());
    out.strategy.networks.push_back(detail::params_from(sizes, decode_parameters(blob)));
    all += blob;
  }
  if (git_blob_hash(all) != m.at("content_hash").get<std::string>())
    throw std::runtime_error("strategy content hash mismatch in " + dir.string());
  return out;
}

}  // namespace deephedge
