#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace liftwatch {

/// How depth candidates are reduced to clusters.
struct ClusterMethod {
  enum class Kind { Mean, KMeans, MeanShift };

  Kind kind = Kind::KMeans;
  int k = 2;               // KMeans only
  double bandwidth = 0.5;  // MeanShift only, meters

  static ClusterMethod mean() { return {Kind::Mean, 1, 0.5}; }
  static ClusterMethod kmeans(int k = 2) { return {Kind::KMeans, k, 0.5}; }
  static ClusterMethod mean_shift(double bandwidth = 0.5) {
    return {Kind::MeanShift, 2, bandwidth};
  }

  void validate() const;
};

/// "mean", "kmeans", "meanshift" (aliases "averaging", "k-means", "mean-shift").
ClusterMethod parse_cluster_method(const std::string& name);
std::string to_string(const ClusterMethod& m);

struct Cluster1D {
  double center = 0.0;
  std::size_t count = 0;
};

struct KMeansResult {
  std::vector<Cluster1D> clusters;  // non-empty clusters, ascending centers
  std::vector<double> inertia;      // within-cluster sum of squares per iteration
  int iterations = 0;
  bool converged = false;
};

/// Lloyd's algorithm on the line. Seeds are chosen farthest-point first,
/// starting from the minimum (so k=2 seeds at min and max); iteration stops
/// once assignments repeat or after `max_iterations`.
KMeansResult kmeans_1d(std::span<const double> values, int k,
                       int max_iterations = 100);

struct MeanShiftOptions {
  double bandwidth = 0.5;
  double tolerance = 1e-4;
  int max_iterations = 200;
};

/// Flat-kernel mean shift started from every distinct value. Modes closer
/// than bandwidth/2 are merged; counts are the number of values whose
/// trajectory ended in that mode.
std::vector<Cluster1D> mean_shift_1d(std::span<const double> values,
                                     const MeanShiftOptions& opts);

/// Dispatch on `method`. Clusters come back in ascending center order.
/// Throws NoDataError for empty input, DomainError when k > |values|.
std::vector<Cluster1D> cluster_1d(std::span<const double> values,
                                  const ClusterMethod& method);

/// Center of the most populated cluster; ties go to the smaller center.
double select_object_depth(std::span<const Cluster1D> clusters);

}  // namespace liftwatch
