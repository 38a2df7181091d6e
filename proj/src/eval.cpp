#include "liftwatch/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "liftwatch/errors.hpp"

namespace liftwatch {

using nlohmann::json;

std::array<double, 10> coco_thresholds() {
  std::array<double, 10> t{};
  for (int i = 0; i < 10; ++i) t[i] = 0.5 + 0.05 * i;
  return t;
}

MatchCounts ClassLedger::at_cut(double t_c) const {
  MatchCounts c;
  for (const ScoredMatch& m : preds) {
    if (m.confidence < t_c) break;
    (m.tp ? c.tp : c.fp)++;
  }
  c.fn = ground_truths - c.tp;
  return c;
}

const ClassLedger* MatchLedger::find(ObjectClass c) const {
  for (const auto& l : classes) {
    if (l.object_class == c) return &l;
  }
  return nullptr;
}

MatchLedger match_detections(std::span<const Detection2D> preds,
                             std::span<const Detection2D> gts, double t_iou) {
  MatchLedger ledger;
  for (ObjectClass cls : kAllClasses) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i].object_class == cls) order.push_back(i);
    }
    std::map<std::size_t, std::vector<std::size_t>> gt_by_frame;
    std::size_t n_gt = 0;
    for (std::size_t i = 0; i < gts.size(); ++i) {
      if (gts[i].object_class != cls) continue;
      gt_by_frame[gts[i].frame_index].push_back(i);
      ++n_gt;
    }
    if (order.empty() && n_gt == 0) continue;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return preds[a].confidence > preds[b].confidence;
    });
    ClassLedger cl;
    cl.object_class = cls;
    cl.t_iou = t_iou;
    cl.ground_truths = n_gt;
    std::vector<bool> taken(gts.size(), false);
    for (std::size_t pi : order) {
      const Detection2D& p = preds[pi];
      bool tp = false;
      if (auto it = gt_by_frame.find(p.frame_index); it != gt_by_frame.end()) {
        double best = -1.0;
        std::size_t best_gt = 0;
        for (std::size_t gi : it->second) {
          if (taken[gi]) continue;
          const double o = iou(p.bbox, gts[gi].bbox);
          if (o >= t_iou && o > best) {
            best = o;
            best_gt = gi;
          }
        }
        if (best >= 0.0) {
          taken[best_gt] = true;
          tp = true;
        }
      }
      cl.preds.push_back({p.confidence, tp});
    }
    ledger.classes.push_back(std::move(cl));
  }
  return ledger;
}

double average_precision(const ClassLedger& ledger) {
  if (ledger.ground_truths == 0) {
    throw DomainError("average precision is undefined without ground truth");
  }
  const double n_gt = static_cast<double>(ledger.ground_truths);
  std::vector<double> recall, precision;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < ledger.preds.size(); ++i) {
    (ledger.preds[i].tp ? tp : fp)++;
    const bool last_of_level = i + 1 == ledger.preds.size() ||
                               ledger.preds[i + 1].confidence != ledger.preds[i].confidence;
    if (!last_of_level) continue;
    recall.push_back(static_cast<double>(tp) / n_gt);
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_r = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_r) * precision[i];
    prev_r = recall[i];
  }
  return std::clamp(ap, 0.0, 1.0);
}

APReport map_suite(std::span<const Detection2D> preds, std::span<const Detection2D> gts) {
  if (gts.empty()) throw DomainError("mAP is undefined without ground truth");
  APReport r;
  for (const auto& p : preds) r.predictions[p.object_class]++;
  for (const auto& g : gts) r.ground_truths[g.object_class]++;
  const auto thresholds = coco_thresholds();
  for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
    const MatchLedger ledger = match_detections(preds, gts, thresholds[ti]);
    for (const ClassLedger& cl : ledger.classes) {
      if (cl.ground_truths == 0) continue;
      r.ap[cl.object_class][ti] = average_precision(cl);
    }
  }
  double s50 = 0.0, s5095 = 0.0;
  for (const auto& [cls, aps] : r.ap) {
    s50 += aps[0];
    s5095 += std::accumulate(aps.begin(), aps.end(), 0.0) / static_cast<double>(aps.size());
  }
  const double n = static_cast<double>(r.ap.size());
  r.map50 = s50 / n;
  r.map50_95 = s5095 / n;
  return r;
}

json to_json(const APReport& r) {
  json classes = json::object();
  const auto thresholds = coco_thresholds();
  for (ObjectClass c : kAllClasses) {
    json entry = {{"ground_truths", r.ground_truths.count(c) ? r.ground_truths.at(c) : 0},
                  {"predictions", r.predictions.count(c) ? r.predictions.at(c) : 0}};
    if (auto it = r.ap.find(c); it != r.ap.end()) {
      json table = json::object();
      for (std::size_t i = 0; i < thresholds.size(); ++i) {
        char key[8];
        std::snprintf(key, sizeof key, "%.2f", thresholds[i]);
        table[key] = it->second[i];
      }
      entry["ap"] = table;
      entry["ap50"] = it->second[0];
      entry["ap50_95"] =
          std::accumulate(it->second.begin(), it->second.end(), 0.0) / 10.0;
    }
    classes[std::string(to_string(c))] = entry;
  }
  return json{{"classes", classes}, {"mAP50", r.map50}, {"mAP50_95", r.map50_95}};
}

double distance_err(const Point3& p, const Point3& g) {
  if (p.frame != g.frame) {
    throw UsageError(std::string("distance_err: frame ") + std::string(to_string(p.frame)) +
                     " vs " + std::string(to_string(g.frame)));
  }
  return (p.xyz - g.xyz).norm();
}

std::vector<double> contaminated_candidates(const ContaminationSpec& spec,
                                            std::mt19937_64& rng) {
  if (!(spec.contamination >= 0.0 && spec.contamination <= 1.0)) {
    throw DomainError("contamination must be in [0,1]");
  }
  const auto outliers = static_cast<std::size_t>(
      std::llround(spec.contamination * static_cast<double>(spec.count)));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> v;
  v.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const double base = spec.true_depth + (i < outliers ? spec.outlier_offset : 0.0);
    v.push_back(base + spec.sigma * noise(rng));
  }
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

const MethodError* DepthErrReport::find(const std::string& method) const {
  for (const auto& m : methods) {
    if (m.method == method) return &m;
  }
  return nullptr;
}

json to_json(const DepthErrReport& r, bool with_samples) {
  json methods = json::array();
  for (const auto& m : r.methods) {
    json e = {{"method", m.method},
              {"err", m.mean_err},
              {"evaluated", m.evaluated},
              {"failures", m.failures}};
    if (with_samples) e["errors"] = m.errors;
    methods.push_back(e);
  }
  return json{{"methods", methods}};
}

}  // namespace liftwatch
