#include "gpgs/pipeline.hpp"

#include "gpgs/error.hpp"

namespace gpgs {

std::vector<PixelCoord> model_seed_pixels(const TrainedGP& model) {
  const auto& X = model.inputs();
  std::vector<PixelCoord> pixels(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    pixels[static_cast<std::size_t>(i)] = {X(i, 0) * model.width, X(i, 1) * model.height};
  return pixels;
}

PredictedPointSet predict_candidates(const TrainedGP& model, const SamplingConfig& sampling, std::uint64_t seed,
                                     const DepthMap* depth) {
  const auto seeds = model_seed_pixels(model);
  auto candidates = generate_samples(seeds, model.width, model.height, sampling, seed);
  if (model.input_dim() == 3) {
    if (!depth)
      throw Error(ErrorKind::DimensionMismatch,
                  "model of image " + std::to_string(model.image_id) + " was trained with depth; no depth map given");
    if (depth->width != model.width || depth->height != model.height)
      throw Error(ErrorKind::DimensionMismatch, "depth map size differs from the model's image size");
    candidates = attach_depth(candidates, *depth);
  }
  return infer_dense(model, candidates);
}

DensifyOutcome densify(const SparseModel& sparse, std::span<const TrainedGP> models, const SamplingConfig& sampling,
                       const FilterConfig& filter, std::uint64_t seed, std::span<const DepthMap* const> depths) {
  filter.validate();
  DensifyOutcome out;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const DepthMap* depth = i < depths.size() ? depths[i] : nullptr;
    auto preds = predict_candidates(models[i], sampling, seed + i, depth);
    out.predictions.points.insert(out.predictions.points.end(), preds.points.begin(), preds.points.end());
  }
  out.candidate_count = out.predictions.points.size();
  out.predictions = filter_by_variance(std::move(out.predictions), filter);
  out.cloud = merge_clouds(sparse, out.predictions);
  out.report = variance_reduction_report(out.predictions);
  return out;
}

}  // namespace gpgs
