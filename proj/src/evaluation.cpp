#include "pairbox/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "pairbox/parallel.hpp"

namespace pairbox {

std::string_view to_string(Occlusion occlusion) {
  switch (occlusion) {
    case Occlusion::None:
      return "none";
    case Occlusion::Partial:
      return "partial";
    case Occlusion::Heavy:
      return "heavy";
  }
  return "?";
}

std::optional<Occlusion> parse_occlusion(std::string_view text) {
  if (text == "none") return Occlusion::None;
  if (text == "partial") return Occlusion::Partial;
  if (text == "heavy") return Occlusion::Heavy;
  return std::nullopt;
}

std::vector<FrameAnnotations> filter_reasonable(std::span<const FrameAnnotations> frames,
                                                const ReasonableFilter& filter) {
  std::vector<FrameAnnotations> out(frames.begin(), frames.end());
  for (auto& frame : out) {
    for (auto& obj : frame.objects) {
      const Box& ref = filter.height_from == Modality::Thermal ? obj.pair.thermal
                                                               : obj.pair.visible;
      if (!(ref.h() > filter.min_height) || obj.occlusion == Occlusion::Heavy) obj.ignore = true;
    }
  }
  return out;
}

FrameMatch match_frame(std::span<const Detection> dets, std::span<const GtObject> gts,
                       OverlapVariant variant, double thresh) {
  FrameMatch result;
  result.detections.resize(dets.size());
  result.gt_detected.assign(gts.size(), false);
  result.evaluable_gts = static_cast<std::size_t>(
      std::count_if(gts.begin(), gts.end(), [](const GtObject& g) { return !g.ignore; }));

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  for (std::size_t d : order) {
    std::optional<std::size_t> best_gt;
    double best = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].ignore || result.gt_detected[g]) continue;
      const double ov = overlap(gts[g].pair, dets[d].pair, variant);
      if (ov >= thresh && ov > best) {
        best = ov;
        best_gt = g;
      }
    }
    if (best_gt) {
      result.gt_detected[*best_gt] = true;
      result.detections[d] = {DetectionOutcome::TruePositive, best_gt};
      continue;
    }
    best = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (!gts[g].ignore) continue;
      const double ov = overlap(gts[g].pair, dets[d].pair, variant);
      if (ov >= thresh && ov > best) {
        best = ov;
        best_gt = g;
      }
    }
    if (best_gt) {
      result.detections[d] = {DetectionOutcome::Ignored, best_gt};
    } else {
      result.detections[d] = {DetectionOutcome::FalsePositive, std::nullopt};
    }
  }
  return result;
}

MissRateCurve miss_rate_curve(std::span<const ScoredOutcome> outcomes, std::size_t evaluable_gts,
                              std::size_t num_frames) {
  if (evaluable_gts == 0) {
    throw EvaluationError("miss rate is undefined: no evaluable ground-truth objects");
  }
  if (num_frames == 0) throw EvaluationError("FPPI is undefined: no frames");

  std::vector<ScoredOutcome> counted;
  counted.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (o.outcome != DetectionOutcome::Ignored) counted.push_back(o);
  }
  std::sort(counted.begin(), counted.end(),
            [](const ScoredOutcome& a, const ScoredOutcome& b) { return a.score > b.score; });

  const double gts = static_cast<double>(evaluable_gts);
  const double frames = static_cast<double>(num_frames);
  MissRateCurve curve;
  if (counted.empty()) {
    curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0, 0, 0, evaluable_gts});
    return curve;
  }
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < counted.size();) {
    const double score = counted[i].score;
    for (; i < counted.size() && counted[i].score == score; ++i) {
      if (counted[i].outcome == DetectionOutcome::TruePositive) {
        ++tp;
      } else {
        ++fp;
      }
    }
    const std::size_t fn = evaluable_gts - tp;
    curve.push_back({score, static_cast<double>(fp) / frames, static_cast<double>(fn) / gts, tp,
                     fp, fn});
  }
  return curve;
}

std::array<double, 9> reference_fppi() {
  std::array<double, 9> refs{};
  for (std::size_t k = 0; k < refs.size(); ++k) {
    refs[k] = std::pow(10.0, -2.0 + 0.25 * static_cast<double>(k));
  }
  return refs;
}

std::array<double, 9> sample_miss_rates(const MissRateCurve& curve) {
  if (curve.empty()) throw std::invalid_argument("log-average miss rate of an empty curve");
  double min_fppi = curve.front().fppi;
  for (const auto& p : curve) min_fppi = std::min(min_fppi, p.fppi);

  std::array<double, 9> sampled{};
  const auto refs = reference_fppi();
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const double ref = std::max(refs[k], min_fppi);
    std::size_t pick = 0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
      if (curve[i].fppi <= ref) pick = i;
    }
    sampled[k] = curve[pick].miss_rate;
  }
  return sampled;
}

double log_average_miss_rate(const MissRateCurve& curve, double floor) {
  const auto sampled = sample_miss_rates(curve);
  double log_sum = 0.0;
  for (double m : sampled) {
    const double v = std::max(m, floor);
    if (v <= 0.0) return 0.0;
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(sampled.size()));
}

void EvalConfig::validate() const {
  if (iou_thresholds.empty()) throw std::invalid_argument("at least one IoU threshold is required");
  for (double t : iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw std::invalid_argument("IoU thresholds must lie in (0, 1], got " + format_g9(t));
    }
  }
  if (variants.empty()) throw std::invalid_argument("at least one overlap variant is required");
  if (!(miss_rate_floor >= 0.0 && miss_rate_floor <= 1.0)) {
    throw std::invalid_argument("miss-rate floor must lie in [0, 1]");
  }
}

const EvalEntry& EvalReport::at(OverlapVariant variant, double iou_thresh) const {
  for (const auto& e : entries) {
    if (e.variant == variant && e.iou_thresh == iou_thresh) return e;
  }
  throw std::out_of_range("no evaluation entry for variant " + std::string(to_string(variant)) +
                          " at IoU " + format_g9(iou_thresh));
}

EvalReport evaluate(std::span<const FrameAnnotations> annotations,
                    std::span<const FrameDetections> detections, const EvalConfig& config) {
  config.validate();

  std::map<std::string, std::size_t> frame_index;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (!frame_index.emplace(annotations[i].frame_id, i).second) {
      throw EvaluationError("duplicate annotation frame id '" + annotations[i].frame_id + "'");
    }
  }
  std::vector<const FrameDetections*> dets_by_frame(annotations.size(), nullptr);
  std::set<std::string> unknown;
  for (const auto& fd : detections) {
    const auto it = frame_index.find(fd.frame_id);
    if (it == frame_index.end()) {
      unknown.insert(fd.frame_id);
      continue;
    }
    if (dets_by_frame[it->second] != nullptr) {
      throw EvaluationError("duplicate detection frame id '" + fd.frame_id + "'");
    }
    dets_by_frame[it->second] = &fd;
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& id : unknown) list += (list.empty() ? "" : ", ") + id;
    throw EvaluationError("detections reference unknown frame ids: " + list);
  }

  const std::vector<FrameAnnotations> frames =
      config.apply_reasonable_filter
          ? filter_reasonable(annotations, config.filter)
          : std::vector<FrameAnnotations>(annotations.begin(), annotations.end());

  EvalReport report;
  report.num_frames = frames.size();
  for (const auto& f : frames) {
    for (const auto& o : f.objects) report.evaluable_gts += o.ignore ? 0 : 1;
  }

  for (OverlapVariant variant : config.variants) {
    for (double thresh : config.iou_thresholds) {
      std::vector<FrameMatch> matches(frames.size());
      parallel_for(frames.size(), config.threads, [&](std::size_t i) {
        const std::span<const Detection> dets =
            dets_by_frame[i] ? std::span<const Detection>(dets_by_frame[i]->detections)
                             : std::span<const Detection>();
        matches[i] = match_frame(dets, frames[i].objects, variant, thresh);
      });
      std::vector<ScoredOutcome> outcomes;
      for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!dets_by_frame[i]) continue;
        const auto& dets = dets_by_frame[i]->detections;
        for (std::size_t d = 0; d < dets.size(); ++d) {
          outcomes.push_back({dets[d].score, matches[i].detections[d].outcome});
        }
      }
      EvalEntry entry;
      entry.variant = variant;
      entry.iou_thresh = thresh;
      entry.curve = miss_rate_curve(outcomes, report.evaluable_gts, report.num_frames);
      entry.log_average_mr = log_average_miss_rate(entry.curve, config.miss_rate_floor);
      report.entries.push_back(std::move(entry));
    }
  }
  return report;
}

std::string format_g9(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

void write_curve_csv(const EvalReport& report, std::ostream& out) {
  out << "variant,iou_thresh,score_thresh,fppi,miss_rate\n";
  for (const auto& e : report.entries) {
    for (const auto& p : e.curve) {
      out << to_string(e.variant) << ',' << format_g9(e.iou_thresh) << ','
          << format_g9(p.score_thresh) << ',' << format_g9(p.fppi) << ','
          << format_g9(p.miss_rate) << '\n';
    }
  }
}

Detection substitute_single_modality(const SingleBoxDetection& det) {
  return Detection{PairedBox{det.box, det.box}, det.score, det.class_id};
}

FrameDetections substitute_single_modality(std::string frame_id,
                                           std::span<const SingleBoxDetection> dets) {
  FrameDetections out{std::move(frame_id), {}};
  out.detections.reserve(dets.size());
  for (const auto& d : dets) out.detections.push_back(substitute_single_modality(d));
  return out;
}

}  // namespace pairbox
