#include "liftwatch/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "liftwatch/errors.hpp"

namespace liftwatch {

void ClusterMethod::validate() const {
  if (kind == Kind::KMeans && k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (kind == Kind::MeanShift && !(bandwidth > 0.0)) {
    throw ConfigError("meanshift: bandwidth must be > 0");
  }
}

ClusterMethod parse_cluster_method(const std::string& name) {
  if (name == "mean" || name == "averaging") return ClusterMethod::mean();
  if (name == "kmeans" || name == "k-means") return ClusterMethod::kmeans();
  if (name == "meanshift" || name == "mean-shift") return ClusterMethod::mean_shift();
  throw ConfigError("unknown cluster method '" + name + "'");
}

std::string to_string(const ClusterMethod& m) {
  switch (m.kind) {
    case ClusterMethod::Kind::Mean:
      return "mean";
    case ClusterMethod::Kind::KMeans:
      return "kmeans";
    case ClusterMethod::Kind::MeanShift:
      return "meanshift";
  }
  return "?";
}

namespace {

std::vector<double> farthest_point_seeds(std::span<const double> values, int k) {
  std::vector<double> seeds{*std::min_element(values.begin(), values.end())};
  while (static_cast<int>(seeds.size()) < k) {
    double best_value = values.front();
    double best_gap = -1.0;
    for (double v : values) {
      double gap = std::numeric_limits<double>::infinity();
      for (double s : seeds) gap = std::min(gap, std::abs(v - s));
      if (gap > best_gap || (gap == best_gap && v < best_value)) {
        best_gap = gap;
        best_value = v;
      }
    }
    seeds.push_back(best_value);
  }
  std::sort(seeds.begin(), seeds.end());
  return seeds;
}

std::size_t nearest_center(const std::vector<double>& centers, double v) {
  std::size_t best = 0;
  double best_d = std::abs(v - centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = std::abs(v - centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

KMeansResult kmeans_1d(std::span<const double> values, int k, int max_iterations) {
  if (values.empty()) throw NoDataError("kmeans_1d: no values");
  if (k < 1) throw DomainError("kmeans_1d: k must be >= 1");
  if (static_cast<std::size_t>(k) > values.size()) {
    throw DomainError("kmeans_1d: k exceeds the number of values");
  }
  KMeansResult res;
  std::vector<double> centers = farthest_point_seeds(values, k);
  std::vector<std::size_t> assign(values.size(), std::numeric_limits<std::size_t>::max());
  std::vector<double> sums(centers.size());
  std::vector<std::size_t> counts(centers.size());

  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::size_t c = nearest_center(centers, values[i]);
      if (c != assign[i]) {
        assign[i] = c;
        changed = true;
      }
    }
    if (!changed) {
      res.converged = true;
      break;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      sums[assign[i]] += values[i];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (counts[c] > 0) centers[c] = sums[c] / static_cast<double>(counts[c]);
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double d = values[i] - centers[assign[i]];
      inertia += d * d;
    }
    res.inertia.push_back(inertia);
    res.iterations = iter + 1;
  }

  std::fill(counts.begin(), counts.end(), 0);
  for (std::size_t a : assign) ++counts[a];
  for (std::size_t c = 0; c < centers.size(); ++c) {
    if (counts[c] > 0) res.clusters.push_back({centers[c], counts[c]});
  }
  std::sort(res.clusters.begin(), res.clusters.end(),
            [](const Cluster1D& a, const Cluster1D& b) { return a.center < b.center; });
  return res;
}

std::vector<Cluster1D> mean_shift_1d(std::span<const double> values,
                                     const MeanShiftOptions& opts) {
  if (values.empty()) throw NoDataError("mean_shift_1d: no values");
  if (!(opts.bandwidth > 0.0)) throw DomainError("mean_shift_1d: bandwidth must be > 0");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> prefix(sorted.size() + 1, 0.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) prefix[i + 1] = prefix[i] + sorted[i];

  const auto window_mean = [&](double x) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - opts.bandwidth);
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), x + opts.bandwidth);
    const auto a = static_cast<std::size_t>(lo - sorted.begin());
    const auto b = static_cast<std::size_t>(hi - sorted.begin());
    // The start point is always inside its own window, so b > a.
    return (prefix[b] - prefix[a]) / static_cast<double>(b - a);
  };

  struct Mode {
    double at;
    std::size_t weight;
  };
  std::vector<Mode> modes;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    double x = sorted[i];
    for (int it = 0; it < opts.max_iterations; ++it) {
      const double next = window_mean(x);
      const double shift = std::abs(next - x);
      x = next;
      if (shift < opts.tolerance) break;
    }
    modes.push_back({x, j - i});
    i = j;
  }

  std::sort(modes.begin(), modes.end(),
            [](const Mode& a, const Mode& b) { return a.at < b.at; });
  std::vector<Cluster1D> out;
  double group_sum = 0.0;
  std::size_t group_weight = 0;
  for (const Mode& m : modes) {
    if (group_weight > 0) {
      const double center = group_sum / static_cast<double>(group_weight);
      if (m.at - center <= opts.bandwidth / 2.0) {
        group_sum += m.at * static_cast<double>(m.weight);
        group_weight += m.weight;
        continue;
      }
      out.push_back({center, group_weight});
    }
    group_sum = m.at * static_cast<double>(m.weight);
    group_weight = m.weight;
  }
  out.push_back({group_sum / static_cast<double>(group_weight), group_weight});
  return out;
}

std::vector<Cluster1D> cluster_1d(std::span<const double> values,
                                  const ClusterMethod& method) {
  method.validate();
  if (values.empty()) throw NoDataError("cluster_1d: no values");
  switch (method.kind) {
    case ClusterMethod::Kind::Mean: {
      const double sum = std::accumulate(values.begin(), values.end(), 0.0);
      return {{sum / static_cast<double>(values.size()), values.size()}};
    }
    case ClusterMethod::Kind::KMeans:
      return kmeans_1d(values, method.k).clusters;
    case ClusterMethod::Kind::MeanShift:
      return mean_shift_1d(values, {method.bandwidth, 1e-4, 200});
  }
  throw InvariantError("cluster_1d: unhandled method");
}

double select_object_depth(std::span<const Cluster1D> clusters) {
  if (clusters.empty()) throw NoDataError("select_object_depth: no clusters");
  const Cluster1D* best = &clusters.front();
  for (const Cluster1D& c : clusters) {
    if (c.count > best->count || (c.count == best->count && c.center < best->center)) {
      best = &c;
    }
  }
  return best->center;
}

}  // namespace liftwatch
