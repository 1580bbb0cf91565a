#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpgs/densifier.hpp"

namespace gpgs {

/// Training pixels of a model in unnormalised pixel units.
std::vector<PixelCoord> model_seed_pixels(const TrainedGP& model);

/// Samples candidates around the model's training pixels and runs the
/// posterior on them. Models trained with depth need the frame's depth map.
PredictedPointSet predict_candidates(const TrainedGP& model, const SamplingConfig& sampling, std::uint64_t seed,
                                     const DepthMap* depth = nullptr);

struct DensifyOutcome {
  std::size_t candidate_count = 0;
  PredictedPointSet predictions;  // union over all models, filtered
  DensifiedCloud cloud;
  VarianceReport report;
};

/// Predictions of every model are pooled, filtered together and merged with
/// the sparse points. depths[i], when present, belongs to models[i].
DensifyOutcome densify(const SparseModel& sparse, std::span<const TrainedGP> models, const SamplingConfig& sampling,
                       const FilterConfig& filter, std::uint64_t seed,
                       std::span<const DepthMap* const> depths = {});

}  // namespace gpgs
