#include "liftwatch/tracking.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <tuple>

#include "liftwatch/errors.hpp"

namespace liftwatch {

namespace {

using Matrix46d = Eigen::Matrix<double, 4, 6>;
using Vector4d = Eigen::Matrix<double, 4, 1>;

Matrix46d measurement_matrix() {
  Matrix46d h = Matrix46d::Zero();
  for (int i = 0; i < 4; ++i) h(i, i) = 1.0;
  return h;
}

Vector4d measure(const BBox& b) {
  const PixelPoint c = b.center();
  return {c.u, c.v, b.width(), b.height()};
}

}  // namespace

void TrackerConfig::validate() const {
  if (q_position < 0 || q_velocity < 0 || !(r_measurement > 0)) {
    throw ConfigError("tracker: noise terms must be >= 0 (measurement noise > 0)");
  }
  if (!(gate_iou >= 0.0 && gate_iou <= 1.0)) throw ConfigError("tracker: gate_iou must be in [0,1]");
  if (max_misses < 0) throw ConfigError("tracker: max_misses must be >= 0");
}

BBox TrackState::box() const {
  const double hw = state(2) / 2.0;
  const double hh = state(3) / 2.0;
  return {state(0) - hw, state(1) - hh, state(0) + hw, state(1) + hh};
}

TrackState make_track(TrackId id, const Detection2D& det, const TrackerConfig& cfg) {
  TrackState t;
  t.track_id = id;
  t.object_class = det.object_class;
  t.state.head<4>() = measure(det.bbox);
  t.covariance = Matrix6d::Zero();
  t.covariance.diagonal() << cfg.r_measurement, cfg.r_measurement, cfg.r_measurement,
      cfg.r_measurement, cfg.initial_velocity_var, cfg.initial_velocity_var;
  t.age = 1;
  t.confidence = det.confidence;
  return t;
}

TrackState kalman_predict(const TrackState& t, const TrackerConfig& cfg) {
  Matrix6d f = Matrix6d::Identity();
  f(0, 4) = 1.0;
  f(1, 5) = 1.0;
  Matrix6d q = Matrix6d::Zero();
  q.diagonal() << cfg.q_position, cfg.q_position, cfg.q_position, cfg.q_position,
      cfg.q_velocity, cfg.q_velocity;
  TrackState out = t;
  out.state = f * t.state;
  out.covariance = f * t.covariance * f.transpose() + q;
  out.covariance = (0.5 * (out.covariance + out.covariance.transpose())).eval();
  return out;
}

TrackState kalman_update(const TrackState& t, const Detection2D& det,
                         const TrackerConfig& cfg) {
  if (det.object_class != t.object_class) {
    throw UsageError("kalman_update: detection class differs from the track class");
  }
  const Matrix46d h = measurement_matrix();
  const Eigen::Matrix4d r = Eigen::Matrix4d::Identity() * cfg.r_measurement;
  const Eigen::Matrix4d s = h * t.covariance * h.transpose() + r;
  const Eigen::Matrix<double, 6, 4> gain =
      s.ldlt().solve(h * t.covariance.transpose()).transpose();
  const Vector4d innovation = measure(det.bbox) - h * t.state;
  TrackState out = t;
  out.state = t.state + gain * innovation;
  const Matrix6d ikh = Matrix6d::Identity() - gain * h;
  out.covariance = ikh * t.covariance * ikh.transpose() + gain * r * gain.transpose();
  out.covariance = (0.5 * (out.covariance + out.covariance.transpose())).eval();
  out.misses = 0;
  out.age = t.age + 1;
  out.confidence = det.confidence;
  return out;
}

AssociationResult associate_and_fill(TrackerState& st,
                                     std::span<const Detection2D> detections,
                                     const TrackerConfig& cfg,
                                     std::size_t frame_index) {
  cfg.validate();
  std::vector<TrackState> predicted;
  predicted.reserve(st.tracks.size());
  for (const TrackState& t : st.tracks) predicted.push_back(kalman_predict(t, cfg));

  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t ti = 0; ti < predicted.size(); ++ti) {
    const BBox pb = predicted[ti].box();
    if (!(pb.area() > 0.0)) continue;
    for (std::size_t di = 0; di < detections.size(); ++di) {
      const Detection2D& d = detections[di];
      if (d.object_class != predicted[ti].object_class || !(d.bbox.area() > 0.0)) continue;
      const double o = iou(pb, d.bbox);
      if (o > cfg.gate_iou) pairs.emplace_back(o, ti, di);
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });

  std::vector<std::ptrdiff_t> det_of_track(predicted.size(), -1);
  std::vector<bool> det_used(detections.size(), false);
  for (const auto& [o, ti, di] : pairs) {
    if (det_of_track[ti] >= 0 || det_used[di]) continue;
    det_of_track[ti] = static_cast<std::ptrdiff_t>(di);
    det_used[di] = true;
  }

  AssociationResult res;
  std::vector<TrackState> next;
  for (std::size_t ti = 0; ti < predicted.size(); ++ti) {
    if (det_of_track[ti] >= 0) {
      const Detection2D& d = detections[static_cast<std::size_t>(det_of_track[ti])];
      TrackState upd = kalman_update(predicted[ti], d, cfg);
      Detection2D out = d;
      out.frame_index = frame_index;
      out.track_id = upd.track_id;
      if (cfg.smooth_matched && upd.box().valid()) out.bbox = upd.box();
      res.detections.push_back(out);
      next.push_back(std::move(upd));
      continue;
    }
    TrackState miss = predicted[ti];
    if (miss.misses >= cfg.max_misses || !miss.box().valid()) {
      res.retired.push_back(miss.track_id);
      continue;
    }
    miss.misses += 1;
    miss.age += 1;
    Detection2D fill;
    fill.object_class = miss.object_class;
    fill.bbox = miss.box();
    fill.confidence = miss.confidence;
    fill.frame_index = frame_index;
    fill.predicted = true;
    fill.track_id = miss.track_id;
    res.detections.push_back(fill);
    next.push_back(std::move(miss));
  }
  for (std::size_t di = 0; di < detections.size(); ++di) {
    if (det_used[di]) continue;
    const Detection2D& d = detections[di];
    if (!d.bbox.valid()) continue;
    TrackState t = make_track(st.next_id++, d, cfg);
    Detection2D out = d;
    out.frame_index = frame_index;
    out.track_id = t.track_id;
    res.detections.push_back(out);
    next.push_back(std::move(t));
  }
  st.tracks = std::move(next);
  return res;
}

}  // namespace liftwatch
