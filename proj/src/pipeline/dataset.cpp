#include "prk/dataset.hpp"

#include <cstdio>
#include <filesystem>

#include "prk/errors.hpp"
#include "prk/formats.hpp"
#include "prk/parallel.hpp"
#include "prk/rng.hpp"
#include "prk/scenegen.hpp"

namespace prk {

std::string to_string(Split s) {
  switch (s) {
    case Split::synth_train: return "synth_train";
    case Split::synth_val: return "synth_val";
    case Split::real_train: return "real_train";
    case Split::real_val: return "real_val";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  for (Split v : {Split::synth_train, Split::synth_val, Split::real_train, Split::real_val})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown split '" + s + "'");
}

bool is_real(Split s) { return s == Split::real_train || s == Split::real_val; }

namespace {

int split_size(const DataConfig& d, Split s) {
  switch (s) {
    case Split::synth_train: return d.n_synth_train;
    case Split::synth_val: return d.n_synth_val;
    case Split::real_train: return d.n_real_train;
    case Split::real_val: return d.n_real_val;
  }
  return 0;
}

}  // namespace

Dataset make_split(const RunConfig& cfg, Split split) {
  const int n = split_size(cfg.data, split);
  Dataset out(static_cast<std::size_t>(n));
  const std::uint64_t stream = Rng::derive(cfg.seed, 0xDA7A + static_cast<std::uint64_t>(split));
  parallel_for(out.size(), [&](std::size_t i) {
    Sample& s = out[i];
    s.index = static_cast<int>(i);
    Scene scene = generate_scene(Rng::derive(stream, i), cfg.data.scene);
    if (is_real(split)) {
      DegradedScene d = degrade_to_real(scene, cfg.data.degrade);
      for (double& v : d.sparse_depth.depth.values()) v = static_cast<double>(static_cast<float>(v));
      s.depth = std::move(d.sparse_depth);
    } else {
      s.depth = std::move(scene.depth);
    }
    s.image = std::move(scene.image);
    s.seg = std::move(scene.seg);
  });
  return out;
}

std::string sample_path(const std::string& root, Split split, int index, const std::string& kind) {
  char name[32];
  std::snprintf(name, sizeof name, "%05d", index);
  return (std::filesystem::path(root) / to_string(split) / (std::string(name) + "_" + kind)).string();
}

void write_split(const std::string& root, Split split, const Dataset& data) {
  for (const Sample& s : data) {
    write_ppm(sample_path(root, split, s.index, "image.ppm"), s.image);
    write_depth(sample_path(root, split, s.index, "depth.pfm"), s.depth);
    write_labels(sample_path(root, split, s.index, "seg.pgm"), s.seg);
    if (is_real(split)) write_mask(sample_path(root, split, s.index, "mask.pgm"), s.depth.valid);
  }
}

Dataset read_split(const std::string& root, Split split, bool with_pseudo) {
  Dataset out;
  for (int i = 0;; ++i) {
    const std::string image = sample_path(root, split, i, "image.ppm");
    if (!std::filesystem::exists(image)) break;
    Sample s;
    s.index = i;
    s.image = read_ppm(image);
    const std::string mask = sample_path(root, split, i, "mask.pgm");
    s.depth = read_depth(sample_path(root, split, i, "depth.pfm"), std::filesystem::exists(mask) ? mask : "");
    s.seg = read_labels(sample_path(root, split, i, "seg.pgm"));
    if (with_pseudo) {
      const std::string p = sample_path(root, split, i, "pseudo.pfm");
      if (!std::filesystem::exists(p)) throw IoError("missing pseudo label " + p);
      s.pseudo = read_depth(p);
    }
    out.push_back(std::move(s));
  }
  if (out.empty())
    throw IoError("no samples under " + (std::filesystem::path(root) / to_string(split)).string());
  return out;
}

void write_pseudo(const std::string& root, Split split, const Dataset& data) {
  for (const Sample& s : data) {
    require(s.has_pseudo(), "write_pseudo: sample without pseudo label");
    write_depth(sample_path(root, split, s.index, "pseudo.pfm"), s.pseudo);
  }
}

void require_dense(const Dataset& data, const std::string& what) {
  for (const Sample& s : data)
    if (count_set(s.depth.valid) != s.depth.valid.size())
      throw ConfigError(what + ": sample " + std::to_string(s.index) +
                        " has missing ground truth; teacher training needs dense depth");
}

}  // namespace prk
