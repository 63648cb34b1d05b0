#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prk/config.hpp"
#include "prk/grid.hpp"
#include "prk/tensor.hpp"

namespace prk {

enum class Split { synth_train, synth_val, real_train, real_val };

std::string to_string(Split s);
Split parse_split(const std::string& s);
bool is_real(Split s);

struct Sample {
  int index = 0;
  Tensor image;     // [3,H,W]
  DepthMap depth;   // dense for synthetic splits, holey for real ones
  LabelMap seg;
  DepthMap pseudo;  // empty until pseudo labels exist
  bool has_pseudo() const { return pseudo.rows() > 0; }
};

using Dataset = std::vector<Sample>;

/// Procedural split, a pure function of (cfg.seed, split). Real splits use the
/// degradation and depth warp of cfg.data.degrade, rounded through float so the
/// in-memory copy equals what the PFM files hold.
Dataset make_split(const RunConfig& cfg, Split split);

/// Layout: {root}/{split}/{index:05}_{image.ppm,depth.pfm,seg.pgm,mask.pgm,pseudo.pfm}.
std::string sample_path(const std::string& root, Split split, int index, const std::string& kind);
void write_split(const std::string& root, Split split, const Dataset& data);
Dataset read_split(const std::string& root, Split split, bool with_pseudo = false);
void write_pseudo(const std::string& root, Split split, const Dataset& data);

/// Rejects datasets with any invalid ground-truth pixel.
void require_dense(const Dataset& data, const std::string& what);

}  // namespace prk
