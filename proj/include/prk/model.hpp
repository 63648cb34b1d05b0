#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "prk/graph.hpp"
#include "prk/grid.hpp"

namespace prk {

struct ModelConfig {
  int levels = 6;
  // Channel widths from full resolution down to the coarsest level.
  std::vector<int> widths{8, 16, 24, 32, 48, 64};
  // Depth heads emit output_scale * softplus(.) and output_scale * linear(.).
  double output_scale = 10.0;
  // Number of highest-resolution levels fed to the refiner decoder.
  int fused_levels = 6;
  int coarse_downsample = 4;
  double d_min_clamp = 0.01;

  void validate() const;
  // Input sides must be multiples of this.
  int stride_multiple() const { return 1 << (levels - 1); }
};

/// Named parameter tensors in a fixed order.
class ParamSet {
 public:
  int add(std::string name, Tensor value);
  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& value(std::size_t i) { return values_[i]; }
  const Tensor& value(std::size_t i) const { return values_[i]; }
  int index(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::vector<Shape> shapes() const;
  std::size_t scalar_count() const;
  /// FNV-1a over names, shapes and raw bytes.
  std::uint64_t hash() const;
  bool operator==(const ParamSet& o) const { return names_ == o.names_ && values_ == o.values_; }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, int> index_;
};

/// Graph leaves for every parameter of a set.
struct Bound {
  std::vector<Var> vars;
  Var operator[](int i) const { return vars[static_cast<std::size_t>(i)]; }
};

Bound bind(Graph& g, const ParamSet& p, bool trainable);
std::vector<Tensor> gradients(const Graph& g, const Bound& b);

/// Encoder-decoder shared by the coarse network and the refiner base.
/// Features are ordered from the coarsest level to full resolution.
struct UnetOutput {
  std::vector<Var> features;
  Var depth;  // output_scale * softplus(head)
};

class Unet {
 public:
  Unet() = default;
  Unet(ParamSet& params, const ModelConfig& cfg, const std::string& prefix, std::uint64_t seed);
  UnetOutput forward(Graph& g, const Bound& b, Var image) const;
  const std::vector<int>& param_indices() const { return indices_; }

 private:
  ModelConfig cfg_;
  std::vector<int> enc_w_, enc_b_, dec_w_, dec_b_;
  int head_w_ = -1, head_b_ = -1;
  std::vector<int> indices_;
};

/// Frozen coarse outputs reused across patches.
struct CoarseCache {
  Tensor depth;                 // [1,h,w] at coarse resolution
  std::vector<Tensor> features; // coarsest first
};

class CoarseNet {
 public:
  CoarseNet(const ModelConfig& cfg, std::uint64_t seed);

  UnetOutput forward(Graph& g, const Bound& b, Var image_low) const;
  /// Forward pass on constants, without gradients.
  CoarseCache run(const Tensor& image_low) const;
  /// Full image -> coarse working resolution.
  Tensor downsample(const Tensor& image) const;

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const ModelConfig& config() const { return cfg_; }
  void zero_head();
  void set_head_bias(double b);

 private:
  ModelConfig cfg_;
  ParamSet params_;
  Unet net_;
};

Var fuse_features(Var f_d, Var f_c_roi, Var weight, Var bias);

struct RefineOutput {
  Var depth;     // clamp(roi(D_c) + D_r)
  Var residual;  // D_r
  Var coarse;    // roi(D_c)
};

class RefinerNet {
 public:
  RefinerNet(const ModelConfig& cfg, std::uint64_t seed);

  /// `roi` locates the patch inside an image_h x image_w image.
  RefineOutput forward(Graph& g, const Bound& b, Var image_patch, const CoarseCache& coarse, const PatchRoi& roi,
                       int image_h, int image_w) const;

  /// Copies N_c parameters into the base network N_d.
  void init_base_from(const CoarseNet& coarse);
  void zero_residual_head();

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const ModelConfig& config() const { return cfg_; }
  /// Shapes of the base network only, in the same order as the coarse network.
  std::vector<Shape> base_shapes() const;

 private:
  ModelConfig cfg_;
  ParamSet params_;
  Unet base_;
  std::vector<int> fuse_w_, fuse_b_, dec_w_, dec_b_;
  int head_w_ = -1, head_b_ = -1;
};

/// Non-differentiable patch inference: returns (D, D_r).
std::pair<DepthMap, DepthMap> refine_patch(const RefinerNet& net, const Tensor& image_patch, const CoarseCache& coarse,
                                           const PatchRoi& roi, int image_h, int image_w);

}  // namespace prk
