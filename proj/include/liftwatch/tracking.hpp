#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "liftwatch/perception.hpp"

namespace liftwatch {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

struct TrackerConfig {
  double q_position = 0.5;         // px^2, applied to cx, cy, w, h
  double q_velocity = 0.1;         // px^2/frame^2
  double r_measurement = 4.0;      // px^2 on each of cx, cy, w, h
  double initial_velocity_var = 100.0;
  double gate_iou = 0.3;
  int max_misses = 5;
  bool smooth_matched = true;      // emit the posterior box for matched tracks

  void validate() const;
};

/// Constant-velocity box track. State is (cx, cy, w, h, vx, vy); the box size
/// has no velocity term.
struct TrackState {
  TrackId track_id = 0;
  ObjectClass object_class = ObjectClass::MiC;
  Vector6d state = Vector6d::Zero();
  Matrix6d covariance = Matrix6d::Identity();
  int misses = 0;
  int age = 0;
  double confidence = 1.0;  // of the last matched detection

  BBox box() const;
};

TrackState make_track(TrackId id, const Detection2D& det, const TrackerConfig& cfg);

/// One constant-velocity step: centre advances by the velocity, P <- F P F^T + Q.
TrackState kalman_predict(const TrackState& t, const TrackerConfig& cfg);

/// Linear measurement update on (cx, cy, w, h) in Joseph form. Resets misses.
/// Throws UsageError on a class mismatch.
TrackState kalman_update(const TrackState& t, const Detection2D& det,
                         const TrackerConfig& cfg);

/// Tracker state threaded through a stream.
struct TrackerState {
  std::vector<TrackState> tracks;
  TrackId next_id = 0;
};

struct AssociationResult {
  std::vector<Detection2D> detections;  // matched, fill-in and newly spawned
  std::vector<TrackId> retired;
};

/// Predicts every track, pairs tracks and detections greedily by descending
/// IoU (same class, IoU > gate), updates matched tracks, emits a `predicted`
/// fill-in for unmatched tracks still within max_misses and retires the
/// rest, and spawns tracks for unmatched detections. Every emitted detection
/// carries its track id.
AssociationResult associate_and_fill(TrackerState& state,
                                     std::span<const Detection2D> detections,
                                     const TrackerConfig& cfg,
                                     std::size_t frame_index);

}  // namespace liftwatch
