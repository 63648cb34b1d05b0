#include "prk/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <Eigen/Core>

#include "prk/errors.hpp"

namespace prk {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void require_chw(const Tensor& t, const char* op) {
  require(t.ndim() == 3, std::string(op) + ": expected [C,H,W], got " + shape_str(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(),
          std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// col[(c*k + ky)*k + kx][oy*wo + ox] = in[c][oy*s + ky - pad][ox*s + kx - pad]
void im2col(const Tensor& in, int k, int stride, int pad, int ho, int wo, std::vector<double>& col) {
  const int c_in = in.dim(0), h = in.dim(1), w = in.dim(2);
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  col.assign(static_cast<std::size_t>(c_in) * k * k * plane, 0.0);
  for (int c = 0; c < c_in; ++c) {
    const double* src = in.ptr() + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* dst = col.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          const double* row = src + static_cast<std::size_t>(iy) * w;
          double* out = dst + static_cast<std::size_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) out[ox] = row[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, int c_in, int h, int w, int k, int stride, int pad, int ho, int wo, double* in_grad) {
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < c_in; ++c) {
    double* dst = in_grad + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* src = col + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          double* row = dst + static_cast<std::size_t>(iy) * w;
          const double* g = src + static_cast<std::size_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) row[ix] += g[ox];
          }
        }
      }
    }
  }
}

struct AxisSamples {
  std::vector<int> lo, hi;
  std::vector<double> frac;
};

// Sample positions along one axis of length n for a roi [start, start+len) in
// normalized units, out samples, align_corners = false.
AxisSamples axis_samples(int n, double start, double len, int out) {
  AxisSamples s;
  s.lo.resize(static_cast<std::size_t>(out));
  s.hi.resize(static_cast<std::size_t>(out));
  s.frac.resize(static_cast<std::size_t>(out));
  const double step = len * n / out;
  for (int i = 0; i < out; ++i) {
    double pos = start * n + (i + 0.5) * step - 0.5;
    const double r = std::round(pos);
    if (std::abs(pos - r) < 1e-9) pos = r;
    pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min(lo + 1, n - 1);
    s.lo[static_cast<std::size_t>(i)] = lo;
    s.hi[static_cast<std::size_t>(i)] = hi;
    s.frac[static_cast<std::size_t>(i)] = pos - lo;
  }
  return s;
}

void check_roi(const NormRoi& roi, int out_h, int out_w) {
  constexpr double eps = 1e-12;
  require(out_h >= 1 && out_w >= 1, "bilinear_resample: output size must be positive");
  require(roi.h > 0.0 && roi.w > 0.0, "bilinear_resample: roi must have positive extent");
  require(roi.y0 >= -eps && roi.x0 >= -eps && roi.y0 + roi.h <= 1.0 + eps && roi.x0 + roi.w <= 1.0 + eps,
          "bilinear_resample: roi exceeds the unit square");
}

template <typename Fn>
Tensor map_unary(const Tensor& x, Fn fn) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fn(x[i]);
  return out;
}

}  // namespace

Var conv2d(Var input, Var kernel, int stride, int pad) {
  const Tensor& x = input.value();
  const Tensor& w = kernel.value();
  require_chw(x, "conv2d");
  require(w.ndim() == 4 && w.dim(2) == w.dim(3), "conv2d: kernel must be [C_out,C_in,k,k]");
  const int c_out = w.dim(0), c_in = w.dim(1), k = w.dim(2);
  require(k % 2 == 1, "conv2d: kernel size must be odd");
  require(stride >= 1 && pad >= 0, "conv2d: stride >= 1 and pad >= 0 required");
  require(c_in == x.dim(0), "conv2d: kernel expects " + std::to_string(c_in) + " input channels, input has " +
                                std::to_string(x.dim(0)));
  const int h = x.dim(1), wd = x.dim(2);
  require(h + 2 * pad >= k && wd + 2 * pad >= k, "conv2d: kernel larger than padded input");
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (wd + 2 * pad - k) / stride + 1;
  const int kk = c_in * k * k;

  auto col = std::make_shared<std::vector<double>>();
  im2col(x, k, stride, pad, ho, wo, *col);
  Tensor out({c_out, ho, wo});
  ConstMapMat wm(w.ptr(), c_out, kk);
  ConstMapMat cm(col->data(), kk, static_cast<Eigen::Index>(ho) * wo);
  MapMat om(out.ptr(), c_out, static_cast<Eigen::Index>(ho) * wo);
  om.noalias() = wm * cm;

  Graph* g = input.graph;
  return g->record("conv2d", std::move(out), {input, kernel},
                   [input, kernel, col, c_out, c_in, h, wd, k, stride, pad, ho, wo, kk](Graph& g, const Tensor& go) {
                     ConstMapMat gom(go.ptr(), c_out, static_cast<Eigen::Index>(ho) * wo);
                     if (Tensor* gk = g.grad_sink(kernel)) {
                       ConstMapMat cm(col->data(), kk, static_cast<Eigen::Index>(ho) * wo);
                       MapMat gkm(gk->ptr(), c_out, kk);
                       gkm.noalias() += gom * cm.transpose();
                     }
                     if (Tensor* gi = g.grad_sink(input)) {
                       const Tensor& w = g.value(kernel);
                       ConstMapMat wm(w.ptr(), c_out, kk);
                       RowMat gcol = wm.transpose() * gom;
                       col2im_add(gcol.data(), c_in, h, wd, k, stride, pad, ho, wo, gi->ptr());
                     }
                   });
}

Var add_channel_bias(Var input, Var bias) {
  const Tensor& x = input.value();
  const Tensor& b = bias.value();
  require_chw(x, "add_channel_bias");
  require(b.ndim() == 1 && b.dim(0) == x.dim(0), "add_channel_bias: bias must be [C]");
  const int c = x.dim(0);
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  Tensor out = x;
  for (int k = 0; k < c; ++k) {
    double* p = out.ptr() + k * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += b[static_cast<std::size_t>(k)];
  }
  return input.graph->record("add_channel_bias", std::move(out), {input, bias},
                             [input, bias, c, plane](Graph& g, const Tensor& go) {
                               if (Tensor* gi = g.grad_sink(input))
                                 for (std::size_t i = 0; i < go.size(); ++i) (*gi)[i] += go[i];
                               if (Tensor* gb = g.grad_sink(bias))
                                 for (int k = 0; k < c; ++k) {
                                   const double* p = go.ptr() + k * plane;
                                   double s = 0.0;
                                   for (std::size_t i = 0; i < plane; ++i) s += p[i];
                                   (*gb)[static_cast<std::size_t>(k)] += s;
                                 }
                             });
}

Var leaky_relu(Var x, double slope) {
  const Tensor& xv = x.value();
  Tensor out = map_unary(xv, [slope](double v) { return v >= 0.0 ? v : slope * v; });
  Graph* g = x.graph;
  if (g->track_branches()) {
    std::vector<std::uint8_t> bits(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) bits[i] = xv[i] >= 0.0;
    g->append_branches(bits);
  }
  return g->record("leaky_relu", std::move(out), {x}, [x, slope](Graph& g, const Tensor& go) {
    const Tensor& xv = g.value(x);
    Tensor* gi = g.grad_sink(x);
    for (std::size_t i = 0; i < go.size(); ++i) (*gi)[i] += xv[i] >= 0.0 ? go[i] : slope * go[i];
  });
}

Var softplus(Var x) {
  // log(1 + e^v) = max(v, 0) + log1p(e^-|v|)
  Tensor out = map_unary(x.value(), [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
  return x.graph->record("softplus", std::move(out), {x}, [x](Graph& g, const Tensor& go) {
    const Tensor& xv = g.value(x);
    Tensor* gi = g.grad_sink(x);
    for (std::size_t i = 0; i < go.size(); ++i) {
      const double v = xv[i];
      const double sig = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      (*gi)[i] += go[i] * sig;
    }
  });
}

Tensor bilinear_resample(const Tensor& input, const NormRoi& roi, int out_h, int out_w) {
  require_chw(input, "bilinear_resample");
  check_roi(roi, out_h, out_w);
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const AxisSamples sy = axis_samples(h, roi.y0, roi.h, out_h);
  const AxisSamples sx = axis_samples(w, roi.x0, roi.w, out_w);
  Tensor out({c, out_h, out_w});
  for (int k = 0; k < c; ++k) {
    for (int i = 0; i < out_h; ++i) {
      const int y0 = sy.lo[i], y1 = sy.hi[i];
      const double fy = sy.frac[i];
      for (int j = 0; j < out_w; ++j) {
        const int x0 = sx.lo[j], x1 = sx.hi[j];
        const double fx = sx.frac[j];
        const double top = input.at(k, y0, x0) * (1.0 - fx) + input.at(k, y0, x1) * fx;
        const double bot = input.at(k, y1, x0) * (1.0 - fx) + input.at(k, y1, x1) * fx;
        out.at(k, i, j) = fy == 0.0 ? top : top * (1.0 - fy) + bot * fy;
      }
    }
  }
  return out;
}

Var bilinear_resample(Var input, const NormRoi& roi, int out_h, int out_w) {
  Tensor out = bilinear_resample(input.value(), roi, out_h, out_w);
  const int h = input.value().dim(1), w = input.value().dim(2);
  auto sy = std::make_shared<AxisSamples>(axis_samples(h, roi.y0, roi.h, out_h));
  auto sx = std::make_shared<AxisSamples>(axis_samples(w, roi.x0, roi.w, out_w));
  return input.graph->record("bilinear_resample", std::move(out), {input},
                             [input, sy, sx, out_h, out_w](Graph& g, const Tensor& go) {
                               Tensor* gi = g.grad_sink(input);
                               const int c = gi->dim(0);
                               for (int k = 0; k < c; ++k)
                                 for (int i = 0; i < out_h; ++i) {
                                   const int y0 = sy->lo[i], y1 = sy->hi[i];
                                   const double fy = sy->frac[i];
                                   for (int j = 0; j < out_w; ++j) {
                                     const int x0 = sx->lo[j], x1 = sx->hi[j];
                                     const double fx = sx->frac[j];
                                     const double v = go.at(k, i, j);
                                     gi->at(k, y0, x0) += v * (1.0 - fy) * (1.0 - fx);
                                     gi->at(k, y0, x1) += v * (1.0 - fy) * fx;
                                     gi->at(k, y1, x0) += v * fy * (1.0 - fx);
                                     gi->at(k, y1, x1) += v * fy * fx;
                                   }
                                 }
                             });
}

Var upsample2x(Var input) {
  const Tensor& x = input.value();
  require_chw(x, "upsample2x");
  return bilinear_resample(input, NormRoi::full(), 2 * x.dim(1), 2 * x.dim(2));
}

Var concat_channels(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_chw(av, "concat_channels");
  require_chw(bv, "concat_channels");
  require(av.dim(1) == bv.dim(1) && av.dim(2) == bv.dim(2),
          "concat_channels: spatial mismatch " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  Tensor out({av.dim(0) + bv.dim(0), av.dim(1), av.dim(2)});
  std::copy(av.data().begin(), av.data().end(), out.ptr());
  std::copy(bv.data().begin(), bv.data().end(), out.ptr() + av.size());
  const std::size_t na = av.size();
  return a.graph->record("concat_channels", std::move(out), {a, b}, [a, b, na](Graph& g, const Tensor& go) {
    if (Tensor* ga = g.grad_sink(a))
      for (std::size_t i = 0; i < na; ++i) (*ga)[i] += go[i];
    if (Tensor* gb = g.grad_sink(b))
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += go[na + i];
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.graph->record("add", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& go) {
    for (Var v : {a, b})
      if (Tensor* gv = g.grad_sink(v))
        for (std::size_t i = 0; i < go.size(); ++i) (*gv)[i] += go[i];
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return a.graph->record("sub", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& go) {
    if (Tensor* ga = g.grad_sink(a))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
    if (Tensor* gb = g.grad_sink(b))
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] -= go[i];
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.graph->record("mul", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& go) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    if (Tensor* ga = g.grad_sink(a))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i] * bv[i];
    if (Tensor* gb = g.grad_sink(b))
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] += go[i] * av[i];
  });
}

Var scale(Var a, double c) {
  Tensor out = map_unary(a.value(), [c](double v) { return c * v; });
  return a.graph->record("scale", std::move(out), {a}, [a, c](Graph& g, const Tensor& go) {
    Tensor* ga = g.grad_sink(a);
    for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += c * go[i];
  });
}

Var add_scalar(Var a, double c) {
  Tensor out = map_unary(a.value(), [c](double v) { return v + c; });
  return a.graph->record("add_scalar", std::move(out), {a}, [a](Graph& g, const Tensor& go) {
    Tensor* ga = g.grad_sink(a);
    for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
  });
}

Var square(Var a) {
  Tensor out = map_unary(a.value(), [](double v) { return v * v; });
  return a.graph->record("square", std::move(out), {a}, [a](Graph& g, const Tensor& go) {
    const Tensor& av = g.value(a);
    Tensor* ga = g.grad_sink(a);
    for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += 2.0 * av[i] * go[i];
  });
}

Var clamp_min(Var a, double lo) {
  const Tensor& av = a.value();
  Tensor out = map_unary(av, [lo](double v) { return std::max(v, lo); });
  Graph* g = a.graph;
  if (g->track_branches()) {
    std::vector<std::uint8_t> bits(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) bits[i] = av[i] >= lo;
    g->append_branches(bits);
  }
  return g->record("clamp_min", std::move(out), {a}, [a, lo](Graph& g, const Tensor& go) {
    const Tensor& av = g.value(a);
    Tensor* ga = g.grad_sink(a);
    for (std::size_t i = 0; i < go.size(); ++i)
      if (av[i] >= lo) (*ga)[i] += go[i];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.graph->record("sum", Tensor::scalar(s), {a}, [a](Graph& g, const Tensor& go) {
    Tensor* ga = g.grad_sink(a);
    const double v = go[0];
    for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += v;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  require(n > 0, "mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

}  // namespace prk
