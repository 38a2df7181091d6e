#include "liftwatch/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace liftwatch {

std::vector<Detection2D> oracle_detector(const GroundTruthFrame& truth,
                                         const CameraIntrinsics& k, double noise_px,
                                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-noise_px, noise_px);
  const auto draw = [&]() { return noise_px > 0.0 ? jitter(rng) : 0.0; };
  std::vector<Detection2D> out;
  for (const ObjectTruth& t : truth.objects) {
    if (!t.visible) continue;
    Detection2D d;
    d.object_class = t.object_class;
    d.frame_index = truth.frame_index;
    d.confidence = 1.0;
    BBox b = t.bbox;
    b.u_min = std::clamp(b.u_min + draw(), 0.0, k.width - 1.0);
    b.v_min = std::clamp(b.v_min + draw(), 0.0, k.height - 1.0);
    b.u_max = std::clamp(b.u_max + draw(), 0.0, k.width - 1.0);
    b.v_max = std::clamp(b.v_max + draw(), 0.0, k.height - 1.0);
    d.bbox = b.valid() ? b : t.bbox;
    out.push_back(d);
  }
  return out;
}

std::vector<Detection2D> oracle_detector(const GroundTruthFrame& truth,
                                         const CameraIntrinsics& k, double noise_px,
                                         std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(truth.frame_index), 0x44657465u};
  std::mt19937_64 rng(seq);
  return oracle_detector(truth, k, noise_px, rng);
}

std::optional<Mask2D> rasterize(const Polygon2& polygon, const BBox& prompt) {
  if (polygon.size() < 3 || !prompt.valid()) return std::nullopt;
  const int u0 = static_cast<int>(std::ceil(prompt.u_min));
  const int v0 = static_cast<int>(std::ceil(prompt.v_min));
  const int u1 = static_cast<int>(std::floor(prompt.u_max));
  const int v1 = static_cast<int>(std::floor(prompt.v_max));
  if (u1 < u0 || v1 < v0) return std::nullopt;
  Mask2D mask(u0, v0, u1 - u0 + 1, v1 - v0 + 1);
  bool any = false;
  for (int v = v0; v <= v1; ++v) {
    const auto span = convex_row_span(polygon, v);
    if (!span) continue;
    const int a = std::max(u0, static_cast<int>(std::ceil(span->first - 1e-9)));
    const int b = std::min(u1, static_cast<int>(std::floor(span->second + 1e-9)));
    for (int u = a; u <= b; ++u) {
      mask.set(u, v);
      any = true;
    }
  }
  if (!any) return std::nullopt;
  return mask;
}

std::optional<Mask2D> oracle_segmenter(const ObjectTruth& truth, const BBox& prompt) {
  if (!truth.visible) return std::nullopt;
  return rasterize(truth.silhouette, prompt);
}

const ObjectTruth* match_truth(const GroundTruthFrame& truth, ObjectClass cls,
                               const BBox& prompt) {
  if (!prompt.valid()) return nullptr;
  const ObjectTruth* best = nullptr;
  double best_iou = 0.0;
  for (const ObjectTruth& t : truth.objects) {
    if (!t.visible || t.object_class != cls) continue;
    const double o = iou(prompt, t.bbox);
    if (o > best_iou) {
      best_iou = o;
      best = &t;
    }
  }
  return best;
}

}  // namespace liftwatch
