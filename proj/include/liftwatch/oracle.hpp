#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "liftwatch/perception.hpp"
#include "liftwatch/simulator.hpp"

namespace liftwatch {

/// Truth boxes of the visible objects with every corner coordinate perturbed
/// by uniform noise in [-noise_px, noise_px], clamped to the image.
/// Confidence is 1.0.
std::vector<Detection2D> oracle_detector(const GroundTruthFrame& truth,
                                         const CameraIntrinsics& k, double noise_px,
                                         std::mt19937_64& rng);

/// Same, with the generator seeded from (seed, frame index).
std::vector<Detection2D> oracle_detector(const GroundTruthFrame& truth,
                                         const CameraIntrinsics& k, double noise_px,
                                         std::uint64_t seed);

/// Pixels with integer coordinates inside both the convex polygon and the
/// prompt box. None when that set is empty.
std::optional<Mask2D> rasterize(const Polygon2& polygon, const BBox& prompt);

/// Exact projected silhouette clipped to the prompt.
std::optional<Mask2D> oracle_segmenter(const ObjectTruth& truth, const BBox& prompt);

/// Visible truth object of the same class overlapping the prompt most, if any.
const ObjectTruth* match_truth(const GroundTruthFrame& truth, ObjectClass cls,
                               const BBox& prompt);

}  // namespace liftwatch
