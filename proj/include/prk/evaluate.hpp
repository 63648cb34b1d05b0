#pragma once

#include <functional>

#include "prk/config.hpp"
#include "prk/dataset.hpp"
#include "prk/metrics.hpp"
#include "prk/model.hpp"

namespace prk {

/// Coarse prediction resampled back to the full image resolution.
DepthMap predict_coarse(const CoarseNet& coarse, const Tensor& image);

/// Tiled refiner inference plus assembly.
DepthMap predict_tiled(const CoarseNet& coarse, const RefinerNet& refiner, const Tensor& image,
                       const TilingConfig& tiling);

using Predictor = std::function<DepthMap(const Sample&)>;

std::vector<DepthMap> predict_all(const Dataset& data, const Predictor& predict);

/// One report per image, in dataset order.
std::vector<MetricsReport> evaluate_images(const Dataset& data, const std::vector<DepthMap>& preds);

/// Aggregate report over a dataset against its ground truth.
MetricsReport evaluate_dataset(const Dataset& data, const std::vector<DepthMap>& preds);

Json report_json(const MetricsReport& r);

}  // namespace prk
