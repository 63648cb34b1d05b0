#pragma once

#include "prk/graph.hpp"
#include "prk/grid.hpp"

namespace prk {

inline constexpr double kLeakySlope = 0.01;

// Cross-correlation. input [C_in,H,W], kernel [C_out,C_in,k,k] -> [C_out,H',W'].
Var conv2d(Var input, Var kernel, int stride, int pad);
// Adds bias [C] to every pixel of channel C of a [C,H,W] tensor.
Var add_channel_bias(Var input, Var bias);

Var leaky_relu(Var x, double slope = kLeakySlope);
Var softplus(Var x);

// Samples `roi` of a [C,H,W] input on an out_h x out_w grid. Pixel centers sit at
// (i + 0.5) / n (align_corners = false); samples outside the input are clamped to
// the border.
Var bilinear_resample(Var input, const NormRoi& roi, int out_h, int out_w);
Var upsample2x(Var input);

Var concat_channels(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var square(Var a);
Var clamp_min(Var a, double lo);
Var sum(Var a);
Var mean(Var a);

// Plain (non-taped) resampling used for preprocessing.
Tensor bilinear_resample(const Tensor& input, const NormRoi& roi, int out_h, int out_w);

}  // namespace prk
