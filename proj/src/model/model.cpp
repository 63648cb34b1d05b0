#include "prk/model.hpp"

#include <cmath>
#include <cstring>

#include "prk/errors.hpp"
#include "prk/ops.hpp"
#include "prk/rng.hpp"

namespace prk {

namespace {

Tensor he_kernel(int c_out, int c_in, int k, Rng& rng) {
  Tensor t({c_out, c_in, k, k});
  const double bound = std::sqrt(6.0 / static_cast<double>(c_in * k * k));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

int add_conv(ParamSet& p, const std::string& name, int c_out, int c_in, int k, Rng& rng, int& bias_idx) {
  const int w = p.add(name + ".w", he_kernel(c_out, c_in, k, rng));
  bias_idx = p.add(name + ".b", Tensor({c_out}, 0.0));
  return w;
}

Var conv_bias(Var x, Var w, Var b, int stride) {
  const int k = w.shape()[2];
  return add_channel_bias(conv2d(x, w, stride, k / 2), b);
}

}  // namespace

void ModelConfig::validate() const {
  if (levels < 1) throw ConfigError("model.levels must be >= 1");
  if (static_cast<int>(widths.size()) != levels) throw ConfigError("model.widths must list one width per level");
  for (int w : widths)
    if (w < 1) throw ConfigError("model.widths must be positive");
  if (fused_levels < 1 || fused_levels > levels) throw ConfigError("model.fused_levels must lie in [1, levels]");
  if (coarse_downsample < 1) throw ConfigError("model.coarse_downsample must be >= 1");
  if (!(output_scale > 0.0)) throw ConfigError("model.output_scale must be positive");
  if (!(d_min_clamp > 0.0)) throw ConfigError("model.d_min_clamp must be positive");
}

int ParamSet::add(std::string name, Tensor value) {
  require(!contains(name), "duplicate parameter " + name);
  const int i = static_cast<int>(names_.size());
  index_.emplace(name, i);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return i;
}

int ParamSet::index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("unknown parameter " + name);
  return it->second;
}

std::vector<Shape> ParamSet::shapes() const {
  std::vector<Shape> out;
  for (const auto& v : values_) out.push_back(v.shape());
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

std::uint64_t ParamSet::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (std::size_t i = 0; i < names_.size(); ++i) {
    mix(names_[i].data(), names_[i].size());
    for (int d : values_[i].shape()) mix(&d, sizeof d);
    mix(values_[i].ptr(), values_[i].size() * sizeof(double));
  }
  return h;
}

Bound bind(Graph& g, const ParamSet& p, bool trainable) {
  Bound b;
  b.vars.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) b.vars.push_back(g.leaf(p.value(i), trainable));
  return b;
}

std::vector<Tensor> gradients(const Graph& g, const Bound& b) {
  std::vector<Tensor> out;
  out.reserve(b.vars.size());
  for (Var v : b.vars) out.push_back(g.grad(v));
  return out;
}

Unet::Unet(ParamSet& params, const ModelConfig& cfg, const std::string& prefix, std::uint64_t seed) : cfg_(cfg) {
  cfg.validate();
  Rng rng(seed);
  const int L = cfg.levels;
  const std::size_t first = params.size();
  enc_w_.resize(L);
  enc_b_.resize(L);
  for (int i = 0; i < L; ++i) {
    const int c_in = i == 0 ? 3 : cfg.widths[i - 1];
    enc_w_[i] = add_conv(params, prefix + "enc" + std::to_string(i), cfg.widths[i], c_in, 3, rng, enc_b_[i]);
  }
  dec_w_.resize(L > 1 ? L - 1 : 0);
  dec_b_.resize(dec_w_.size());
  for (int i = L - 2; i >= 0; --i)
    dec_w_[i] = add_conv(params, prefix + "dec" + std::to_string(i), cfg.widths[i], cfg.widths[i + 1] + cfg.widths[i],
                         3, rng, dec_b_[i]);
  head_w_ = add_conv(params, prefix + "head", 1, cfg.widths[0], 3, rng, head_b_);
  for (std::size_t i = first; i < params.size(); ++i) indices_.push_back(static_cast<int>(i));
}

UnetOutput Unet::forward(Graph&, const Bound& b, Var image) const {
  const int L = cfg_.levels;
  const Shape& s = image.shape();
  require(s.size() == 3 && s[0] == 3, "network input must be [3,H,W], got " + shape_str(s));
  const int m = cfg_.stride_multiple();
  if (s[1] < 1 || s[2] < 1) throw ShapeError("non-positive working resolution");
  require(s[1] % m == 0 && s[2] % m == 0,
          "input " + shape_str(s) + " is not a multiple of " + std::to_string(m) + " in both spatial dimensions");
  std::vector<Var> enc(L);
  // Inputs are centred on mid-grey.
  Var x = add_scalar(image, -0.5);
  for (int i = 0; i < L; ++i) {
    x = leaky_relu(conv_bias(x, b[enc_w_[i]], b[enc_b_[i]], i == 0 ? 1 : 2));
    enc[i] = x;
  }
  UnetOutput out;
  out.features.push_back(enc[L - 1]);
  Var d = enc[L - 1];
  for (int i = L - 2; i >= 0; --i) {
    d = leaky_relu(conv_bias(concat_channels(upsample2x(d), enc[i]), b[dec_w_[i]], b[dec_b_[i]], 1));
    out.features.push_back(d);
  }
  out.depth = scale(softplus(conv_bias(d, b[head_w_], b[head_b_], 1)), cfg_.output_scale);
  return out;
}

CoarseNet::CoarseNet(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), net_(params_, cfg, "", seed) {}

UnetOutput CoarseNet::forward(Graph& g, const Bound& b, Var image_low) const { return net_.forward(g, b, image_low); }

CoarseCache CoarseNet::run(const Tensor& image_low) const {
  Graph g;
  const Bound b = bind(g, params_, false);
  const UnetOutput o = forward(g, b, g.constant(image_low));
  CoarseCache c;
  c.depth = o.depth.value();
  for (Var f : o.features) c.features.push_back(f.value());
  return c;
}

Tensor CoarseNet::downsample(const Tensor& image) const { return downsample_area(image, cfg_.coarse_downsample); }

void CoarseNet::zero_head() {
  params_.value(params_.index("head.w")).fill(0.0);
  params_.value(params_.index("head.b")).fill(0.0);
}

void CoarseNet::set_head_bias(double v) { params_.value(params_.index("head.b")).fill(v); }

Var fuse_features(Var f_d, Var f_c_roi, Var weight, Var bias) {
  const Shape& a = f_d.shape();
  const Shape& c = f_c_roi.shape();
  require(a.size() == 3 && c.size() == 3 && a[1] == c[1] && a[2] == c[2],
          "fuse_features: spatial mismatch " + shape_str(a) + " vs " + shape_str(c));
  return conv_bias(concat_channels(f_d, f_c_roi), weight, bias, 1);
}

RefinerNet::RefinerNet(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), base_(params_, cfg, "base.", seed) {
  Rng rng(Rng::derive(seed, 17));
  const int L = cfg.levels;
  const int first = L - cfg.fused_levels;  // first fused feature index, coarsest first
  auto width_at = [&](int k) { return cfg.widths[static_cast<std::size_t>(L - 1 - k)]; };
  fuse_w_.assign(L, -1);
  fuse_b_.assign(L, -1);
  dec_w_.assign(L, -1);
  dec_b_.assign(L, -1);
  for (int k = first; k < L; ++k) {
    const int c = width_at(k);
    fuse_w_[k] = add_conv(params_, "fuse" + std::to_string(k), c, 2 * c, 3, rng, fuse_b_[k]);
  }
  for (int k = first + 1; k < L; ++k)
    dec_w_[k] = add_conv(params_, "rdec" + std::to_string(k), width_at(k), width_at(k - 1) + width_at(k), 3, rng,
                         dec_b_[k]);
  head_w_ = add_conv(params_, "rhead", 1, width_at(L - 1), 3, rng, head_b_);
  zero_residual_head();
}

RefineOutput RefinerNet::forward(Graph& g, const Bound& b, Var image_patch, const CoarseCache& coarse,
                                 const PatchRoi& roi, int image_h, int image_w) const {
  const NormRoi nroi = NormRoi::from_patch(roi, image_h, image_w);
  const Shape& s = image_patch.shape();
  require(s.size() == 3 && s[1] == roi.height && s[2] == roi.width,
          "refine: patch " + shape_str(s) + " does not match roi size");
  const int L = cfg_.levels;
  require(static_cast<int>(coarse.features.size()) == L, "refine: coarse cache has the wrong number of levels");
  const UnetOutput base = base_.forward(g, b, image_patch);
  const int first = L - cfg_.fused_levels;
  std::vector<Var> fused(L);
  for (int k = first; k < L; ++k) {
    const Shape& fs = base.features[k].shape();
    const Var fc = bilinear_resample(g.constant(coarse.features[k]), nroi, fs[1], fs[2]);
    fused[k] = fuse_features(base.features[k], fc, b[fuse_w_[k]], b[fuse_b_[k]]);
  }
  Var r = fused[first];
  for (int k = first + 1; k < L; ++k)
    r = leaky_relu(conv_bias(concat_channels(upsample2x(r), fused[k]), b[dec_w_[k]], b[dec_b_[k]], 1));
  RefineOutput out;
  out.residual = scale(conv_bias(r, b[head_w_], b[head_b_], 1), cfg_.output_scale);
  out.coarse = bilinear_resample(g.constant(coarse.depth), nroi, roi.height, roi.width);
  out.depth = clamp_min(add(out.coarse, out.residual), cfg_.d_min_clamp);
  return out;
}

void RefinerNet::init_base_from(const CoarseNet& coarse) {
  const ParamSet& src = coarse.params();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const int j = params_.index("base." + src.name(i));
    require(params_.value(j).shape() == src.value(i).shape(), "architecture mismatch at " + src.name(i));
    params_.value(j) = src.value(i);
  }
}

void RefinerNet::zero_residual_head() {
  params_.value(head_w_).fill(0.0);
  params_.value(head_b_).fill(0.0);
}

std::vector<Shape> RefinerNet::base_shapes() const {
  std::vector<Shape> out;
  for (int i : base_.param_indices()) out.push_back(params_.value(i).shape());
  return out;
}

std::pair<DepthMap, DepthMap> refine_patch(const RefinerNet& net, const Tensor& image_patch, const CoarseCache& coarse,
                                           const PatchRoi& roi, int image_h, int image_w) {
  Graph g;
  const Bound b = bind(g, net.params(), false);
  const RefineOutput o = net.forward(g, b, g.constant(image_patch), coarse, roi, image_h, image_w);
  return {DepthMap(to_field(o.depth.value())), DepthMap(to_field(o.residual.value()))};
}

}  // namespace prk
