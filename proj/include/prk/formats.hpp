#pragma once

#include <string>
#include <vector>

#include "prk/grid.hpp"
#include "prk/tensor.hpp"

namespace prk {

// PFM: single-channel float32, little-endian (scale -1.0), rows stored bottom-up.
void write_pfm(const std::string& path, const Field& f);
Field read_pfm(const std::string& path);

// Depth as PFM with invalid pixels stored as 0. On read the mask is depth > 0,
// unless a sidecar mask PGM is given, which then wins.
void write_depth(const std::string& path, const DepthMap& d);
DepthMap read_depth(const std::string& path, const std::string& mask_path = "");

// 8-bit binary PGM (P5) and PPM (P6).
void write_pgm(const std::string& path, const Grid<std::uint8_t>& g);
Grid<std::uint8_t> read_pgm(const std::string& path);

// Validity masks are stored as 0 / 255.
void write_mask(const std::string& path, const Mask& m);
Mask read_mask(const std::string& path);

void write_labels(const std::string& path, const LabelMap& seg);
LabelMap read_labels(const std::string& path);

// [3,H,W] image with values in [0,1], quantised to k/255.
void write_ppm(const std::string& path, const Tensor& image);
Tensor read_ppm(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace prk
