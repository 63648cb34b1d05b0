#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "prk/losses.hpp"
#include "prk/model.hpp"
#include "prk/scenegen.hpp"
#include "prk/tiling.hpp"

namespace prk {

struct DataConfig {
  std::string root = "data";
  int n_synth_train = 160;
  int n_synth_val = 24;
  int n_real_train = 160;
  int n_real_val = 24;
  SceneConfig scene;
  DegradeConfig degrade{3, 0.7, 1.5, 0.5, 0};
};

struct TrainConfig {
  int epochs_coarse = 20;
  int epochs_refiner = 16;
  int epochs_silog = 16;
  int epochs_dsd = 4;
  double lr = 3e-3;
  int batch_size = 4;
  // Mixes synthetic patches with pseudo-label supervision into student batches.
  bool mix = false;
  bool hflip = false;
};

struct TilingConfig {
  TileMode mode = TileMode::grid16;
  int patch_h = 32;
  int patch_w = 64;
  int random_n = 128;
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  LossWeights loss;
  TilingConfig tiling;

  void validate() const;
};

using Json = nlohmann::ordered_json;

/// Fixed key order, every field present.
Json to_json(const RunConfig& cfg);
/// Starts from defaults; unknown keys or wrong types throw ConfigError.
RunConfig config_from_json(const Json& j);

/// Applies "a.b.c=value" overrides. Values parse as JSON when they can, else as strings.
void apply_override(Json& j, const std::string& assignment);

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

/// Canonical echo text and its FNV-1a hash.
std::string config_echo(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);
std::string hex64(std::uint64_t v);

}  // namespace prk
