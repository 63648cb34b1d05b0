#pragma once

#include <string>
#include <utility>
#include <vector>

#include "prk/tensor.hpp"

namespace prk {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// Binary container: magic, version, then (name, shape, f64 data) blobs.
void write_checkpoint(const std::string& path, const NamedTensors& blobs);
NamedTensors read_checkpoint(const std::string& path);

}  // namespace prk
