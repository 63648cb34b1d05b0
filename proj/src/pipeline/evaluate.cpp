#include "prk/evaluate.hpp"

#include "prk/errors.hpp"
#include "prk/ops.hpp"
#include "prk/parallel.hpp"
#include "prk/tiling.hpp"

namespace prk {

DepthMap predict_coarse(const CoarseNet& coarse, const Tensor& image) {
  const CoarseCache c = coarse.run(coarse.downsample(image));
  return DepthMap(to_field(bilinear_resample(c.depth, NormRoi{0.0, 0.0, 1.0, 1.0}, image.dim(1), image.dim(2))));
}

DepthMap predict_tiled(const CoarseNet& coarse, const RefinerNet& refiner, const Tensor& image,
                       const TilingConfig& tiling) {
  const int H = image.dim(1), W = image.dim(2);
  const CoarseCache c = coarse.run(coarse.downsample(image));
  const PatchGrid grid = make_grid(H, W, tiling.patch_h, tiling.patch_w, tiling.mode, tiling.random_n, tiling.seed);
  std::vector<DepthMap> preds(grid.rois.size());
  parallel_for(preds.size(), [&](std::size_t i) {
    preds[i] = refine_patch(refiner, crop_chw(image, grid.rois[i]), c, grid.rois[i], H, W).first;
  });
  return assemble(preds, grid);
}

std::vector<DepthMap> predict_all(const Dataset& data, const Predictor& predict) {
  std::vector<DepthMap> out;
  out.reserve(data.size());
  for (const Sample& s : data) out.push_back(predict(s));
  return out;
}

std::vector<MetricsReport> evaluate_images(const Dataset& data, const std::vector<DepthMap>& preds) {
  require(preds.size() == data.size(), "evaluate: prediction count does not match the dataset");
  std::vector<MetricsReport> reports(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const DepthMap& p = preds[i];
    const DepthMap& gt = data[i].depth;
    require(p.rows() == gt.rows() && p.cols() == gt.cols(), "evaluate: prediction " + std::to_string(i) +
                                                                " does not match its ground truth size");
    for (std::size_t k = 0; k < gt.valid.size(); ++k)
      if (gt.valid.values()[k] && !p.valid.values()[k])
        throw ShapeError("evaluate: prediction " + std::to_string(i) + " is missing pixels where ground truth exists");
    reports[i] = evaluate_prediction(p, gt, data[i].seg);
  });
  return reports;
}

MetricsReport evaluate_dataset(const Dataset& data, const std::vector<DepthMap>& preds) {
  return aggregate(evaluate_images(data, preds));
}

namespace {

Json scale_json(const ScaleMetrics& m) {
  return {{"rmse", m.rmse}, {"rel", m.rel}, {"silog", m.silog}, {"log10", m.log10}, {"delta1", m.delta1},
          {"n", m.n}};
}

}  // namespace

Json report_json(const MetricsReport& r) {
  Json j;
  j["scale"] = scale_json(r.scale);
  j["scale_nonboundary"] = scale_json(r.scale_nonboundary);
  j["see"] = r.see;
  j["boundary"] = {{"precision", r.prf.precision}, {"recall", r.prf.recall}, {"f1", r.prf.f1}};
  j["dbe"] = {{"eps_acc", r.dbe.eps_acc}, {"eps_comp", r.dbe.eps_comp}};
  j["has_boundary"] = r.has_boundary;
  j["n_valid_pixels"] = r.n_valid_pixels;
  return j;
}

}  // namespace prk
