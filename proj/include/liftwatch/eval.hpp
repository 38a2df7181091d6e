#pragma once

#include <array>
#include <cstdint>
#include <json.hpp>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "liftwatch/clustering.hpp"
#include "liftwatch/geometry.hpp"
#include "liftwatch/perception.hpp"

namespace liftwatch {

struct Scene;

/// IoU thresholds 0.50, 0.55, ..., 0.95.
std::array<double, 10> coco_thresholds();

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct ScoredMatch {
  double confidence = 0.0;
  bool tp = false;
};

/// Outcome of matching one class at one IoU threshold. `preds` is in
/// descending confidence order, so any confidence cut is a prefix.
struct ClassLedger {
  ObjectClass object_class = ObjectClass::Human;
  double t_iou = 0.5;
  std::size_t ground_truths = 0;
  std::vector<ScoredMatch> preds;

  /// Counts over the predictions with confidence >= t_c.
  MatchCounts at_cut(double t_c) const;
};

struct MatchLedger {
  std::vector<ClassLedger> classes;  // one per class present in preds or gts

  const ClassLedger* find(ObjectClass c) const;
};

/// Per frame and class, predictions in descending confidence (stable) each
/// claim the unmatched ground truth with the highest IoU >= t_iou.
MatchLedger match_detections(std::span<const Detection2D> preds,
                             std::span<const Detection2D> gts, double t_iou);

/// All-point interpolated area under the precision-recall curve, with one
/// curve point per distinct confidence. Throws DomainError without ground
/// truths.
double average_precision(const ClassLedger& ledger);

struct APReport {
  std::map<ObjectClass, std::array<double, 10>> ap;  // classes with ground truth
  std::map<ObjectClass, std::size_t> ground_truths;
  std::map<ObjectClass, std::size_t> predictions;
  double map50 = 0.0;
  double map50_95 = 0.0;
};

/// Throws DomainError when there is no ground truth at all.
APReport map_suite(std::span<const Detection2D> preds, std::span<const Detection2D> gts);

nlohmann::json to_json(const APReport& r);

/// Euclidean distance. Throws UsageError when the frame tags differ.
double distance_err(const Point3& p, const Point3& g);

/// Candidate depths for one surface at `true_depth`: a fraction
/// `contamination` of them (rounded) sit `outlier_offset` further away, and
/// every value gets Gaussian noise of `sigma`.
struct ContaminationSpec {
  std::size_t count = 400;
  double true_depth = 40.0;
  double contamination = 0.3;
  double outlier_offset = 3.0;
  double sigma = 0.0;
};

std::vector<double> contaminated_candidates(const ContaminationSpec& spec,
                                            std::mt19937_64& rng);

struct MethodError {
  std::string method;
  double mean_err = 0.0;
  std::size_t evaluated = 0;
  std::size_t failures = 0;
  std::vector<double> errors;
};

/// Mean 3D error per method.
struct DepthErrReport {
  std::vector<MethodError> methods;

  const MethodError* find(const std::string& method) const;
};

nlohmann::json to_json(const DepthErrReport& r, bool with_samples = false);

/// Candidate-set benchmark: for each run, one contaminated set is localized at
/// the optical-axis pixel of the default simulator camera and compared with
/// the true surface point.
DepthErrReport clustering_benchmark(std::span<const ClusterMethod> methods,
                                    const ContaminationSpec& spec, std::size_t runs,
                                    std::uint64_t seed);

struct SceneBenchmarkOptions {
  bool use_masks = true;  // false: MiC and frames use their box pixels too
  std::size_t max_frames = 0;  // 0 means every frame of the scene
};

/// Scene benchmark: every visible object in every frame is localized from the
/// oracle detections with each method and compared with its truth position.
DepthErrReport clustering_benchmark(const Scene& scene,
                                    std::span<const ClusterMethod> methods,
                                    const SceneBenchmarkOptions& opts = {});

}  // namespace liftwatch
