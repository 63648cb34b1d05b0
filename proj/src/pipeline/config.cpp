#include "prk/config.hpp"

#include <cstdio>

#include "prk/errors.hpp"
#include "prk/formats.hpp"

namespace prk {

void RunConfig::validate() const {
  model.validate();
  loss.validate();
  auto positive = [](bool ok, const char* key) {
    if (!ok) throw ConfigError(std::string(key) + " is out of range");
  };
  positive(data.n_synth_train >= 0 && data.n_synth_val >= 0 && data.n_real_train >= 0 && data.n_real_val >= 0,
           "data.n_*");
  positive(data.scene.height >= 32 && data.scene.width >= 32, "data.scene.height/width");
  positive(data.scene.n_objects >= 1, "data.scene.n_objects");
  positive(data.scene.d_min > 0.0 && data.scene.d_min < data.scene.d_max, "data.scene.d_min/d_max");
  positive(data.scene.image_noise >= 0.0, "data.scene.image_noise");
  positive(data.degrade.band >= 0, "data.degrade.band");
  positive(data.degrade.drop_rate >= 0.0 && data.degrade.drop_rate <= 1.0, "data.degrade.drop_rate");
  positive(data.degrade.warp_a > 0.0, "data.degrade.warp_a");
  positive(train.epochs_coarse >= 0 && train.epochs_refiner >= 0 && train.epochs_silog >= 0 && train.epochs_dsd >= 0,
           "train.epochs_*");
  positive(train.lr > 0.0, "train.lr");
  positive(train.batch_size >= 1, "train.batch_size");
  positive(tiling.patch_h >= 1 && tiling.patch_w >= 1 && tiling.random_n >= 1, "tiling.patch_h/patch_w/random_n");
  if (data.scene.height % model.coarse_downsample || data.scene.width % model.coarse_downsample)
    throw ConfigError("data.scene size must be divisible by model.coarse_downsample");
  const int m = model.stride_multiple();
  if ((data.scene.height / model.coarse_downsample) % m || (data.scene.width / model.coarse_downsample) % m)
    throw ConfigError("coarse working resolution must be a multiple of " + std::to_string(m));
  if (tiling.patch_h % m || tiling.patch_w % m)
    throw ConfigError("tiling patch size must be a multiple of " + std::to_string(m));
}

Json to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  const SceneConfig& s = c.data.scene;
  const DegradeConfig& d = c.data.degrade;
  j["data"] = {{"root", c.data.root},
               {"n_synth_train", c.data.n_synth_train},
               {"n_synth_val", c.data.n_synth_val},
               {"n_real_train", c.data.n_real_train},
               {"n_real_val", c.data.n_real_val},
               {"scene",
                {{"height", s.height},
                 {"width", s.width},
                 {"n_objects", s.n_objects},
                 {"d_min", s.d_min},
                 {"d_max", s.d_max},
                 {"image_noise", s.image_noise}}},
               {"degrade",
                {{"band", d.band}, {"drop_rate", d.drop_rate}, {"warp_a", d.warp_a}, {"warp_b", d.warp_b},
                 {"seed", d.seed}}}};
  j["model"] = {{"levels", c.model.levels},
                {"widths", c.model.widths},
                {"output_scale", c.model.output_scale},
                {"fused_levels", c.model.fused_levels},
                {"coarse_downsample", c.model.coarse_downsample},
                {"d_min_clamp", c.model.d_min_clamp}};
  const TrainConfig& t = c.train;
  j["train"] = {{"epochs_coarse", t.epochs_coarse},
                {"epochs_refiner", t.epochs_refiner},
                {"epochs_silog", t.epochs_silog},
                {"epochs_dsd", t.epochs_dsd},
                {"lr", t.lr},
                {"batch_size", t.batch_size},
                {"mix", t.mix},
                {"hflip", t.hflip}};
  j["loss"] = {{"lambda1", c.loss.lambda1},
               {"lambda2", c.loss.lambda2},
               {"tau", c.loss.tau},
               {"pairs_n", c.loss.pairs_n},
               {"edge_bias", c.loss.edge_bias},
               {"silog_alpha", c.loss.silog_alpha},
               {"silog_beta", c.loss.silog_beta}};
  j["tiling"] = {{"mode", to_string(c.tiling.mode)},
                 {"patch_h", c.tiling.patch_h},
                 {"patch_w", c.tiling.patch_w},
                 {"random_n", c.tiling.random_n},
                 {"seed", c.tiling.seed}};
  return j;
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Overlays `in` onto `base`, rejecting keys or types the defaults do not have.
void merge_checked(Json& base, const Json& in, const std::string& path) {
  if (!in.is_object()) throw ConfigError("config key '" + (path.empty() ? "<root>" : path) + "' must be an object");
  for (auto it = in.begin(); it != in.end(); ++it) {
    const std::string key = join(path, it.key());
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    Json& slot = base[it.key()];
    const Json& v = it.value();
    if (slot.is_object()) {
      merge_checked(slot, v, key);
      continue;
    }
    bool ok = false;
    if (slot.is_boolean()) ok = v.is_boolean();
    else if (slot.is_number_unsigned()) ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    else if (slot.is_number_integer()) ok = v.is_number_integer();
    else if (slot.is_number()) ok = v.is_number();
    else if (slot.is_string()) ok = v.is_string();
    else if (slot.is_array()) {
      ok = v.is_array();
      for (const auto& e : v) ok = ok && e.is_number_integer();
    }
    if (!ok) throw ConfigError("config key '" + key + "' has the wrong type (got " + v.dump() + ")");
    slot = v;
  }
}

}  // namespace

RunConfig config_from_json(const Json& in) {
  Json j = to_json(RunConfig{});
  merge_checked(j, in, "");
  RunConfig c;
  c.seed = j["seed"].get<std::uint64_t>();
  const Json& d = j["data"];
  c.data.root = d["root"].get<std::string>();
  c.data.n_synth_train = d["n_synth_train"].get<int>();
  c.data.n_synth_val = d["n_synth_val"].get<int>();
  c.data.n_real_train = d["n_real_train"].get<int>();
  c.data.n_real_val = d["n_real_val"].get<int>();
  const Json& s = d["scene"];
  c.data.scene = {s["height"].get<int>(),    s["width"].get<int>(),    s["n_objects"].get<int>(),
                  s["d_min"].get<double>(), s["d_max"].get<double>(), s["image_noise"].get<double>()};
  const Json& g = d["degrade"];
  c.data.degrade = {g["band"].get<int>(), g["drop_rate"].get<double>(), g["warp_a"].get<double>(),
                    g["warp_b"].get<double>(), g["seed"].get<std::uint64_t>()};
  const Json& m = j["model"];
  c.model.levels = m["levels"].get<int>();
  c.model.widths = m["widths"].get<std::vector<int>>();
  c.model.output_scale = m["output_scale"].get<double>();
  c.model.fused_levels = m["fused_levels"].get<int>();
  c.model.coarse_downsample = m["coarse_downsample"].get<int>();
  c.model.d_min_clamp = m["d_min_clamp"].get<double>();
  const Json& t = j["train"];
  c.train.epochs_coarse = t["epochs_coarse"].get<int>();
  c.train.epochs_refiner = t["epochs_refiner"].get<int>();
  c.train.epochs_silog = t["epochs_silog"].get<int>();
  c.train.epochs_dsd = t["epochs_dsd"].get<int>();
  c.train.lr = t["lr"].get<double>();
  c.train.batch_size = t["batch_size"].get<int>();
  c.train.mix = t["mix"].get<bool>();
  c.train.hflip = t["hflip"].get<bool>();
  const Json& l = j["loss"];
  c.loss.lambda1 = l["lambda1"].get<double>();
  c.loss.lambda2 = l["lambda2"].get<double>();
  c.loss.tau = l["tau"].get<double>();
  c.loss.pairs_n = l["pairs_n"].get<int>();
  c.loss.edge_bias = l["edge_bias"].get<double>();
  c.loss.silog_alpha = l["silog_alpha"].get<double>();
  c.loss.silog_beta = l["silog_beta"].get<double>();
  const Json& ti = j["tiling"];
  c.tiling.mode = parse_tile_mode(ti["mode"].get<std::string>());
  c.tiling.patch_h = ti["patch_h"].get<int>();
  c.tiling.patch_w = ti["patch_w"].get<int>();
  c.tiling.random_n = ti["random_n"].get<int>();
  c.tiling.seed = ti["seed"].get<std::uint64_t>();
  c.validate();
  return c;
}

void apply_override(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' is malformed");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = Json::object();
    node = &(*node)[part];
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    start = dot + 1;
  }
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Json j = Json::object();
  if (!path.empty()) {
    const std::string text = read_file(path);
    try {
      j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("cannot parse " + path + " at byte offset " + std::to_string(e.byte) + ": " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j);
}

std::string config_echo(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string s = config_echo(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace prk
