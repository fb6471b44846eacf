#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pairbox/geometry.hpp"
#include "pairbox/pairnms.hpp"

namespace pairbox {

/// Raised when evaluation is undefined for the given inputs (no evaluable
/// ground truth, detections for unknown frames, ...).
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Occlusion { None, Partial, Heavy };

std::string_view to_string(Occlusion occlusion);
/// Accepts "none", "partial", "heavy".
std::optional<Occlusion> parse_occlusion(std::string_view text);

struct GtObject {
  PairedBox pair;
  Occlusion occlusion = Occlusion::None;
  bool ignore = false;

  friend bool operator==(const GtObject&, const GtObject&) = default;
};

struct FrameAnnotations {
  std::string frame_id;
  std::vector<GtObject> objects;

  friend bool operator==(const FrameAnnotations&, const FrameAnnotations&) = default;
};

struct FrameDetections {
  std::string frame_id;
  std::vector<Detection> detections;

  friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

enum class Modality { Visible, Thermal };

/// Reasonable subset: objects taller than `min_height` with no or partial
/// occlusion stay evaluable, the rest become ignore regions.
struct ReasonableFilter {
  double min_height = 55.0;
  Modality height_from = Modality::Thermal;
};

std::vector<FrameAnnotations> filter_reasonable(std::span<const FrameAnnotations> frames,
                                                const ReasonableFilter& filter = {});

enum class DetectionOutcome { TruePositive, FalsePositive, Ignored };

struct DetectionMatch {
  DetectionOutcome outcome = DetectionOutcome::FalsePositive;
  std::optional<std::size_t> gt;  // matched GT (TP) or absorbing ignore region
};

struct FrameMatch {
  std::vector<DetectionMatch> detections;  // parallel to the input detections
  std::vector<bool> gt_detected;           // parallel to the input GTs; ignore regions stay false
  std::size_t evaluable_gts = 0;
};

/// Greedy one-to-one matching in descending score order (ties by input order).
/// A detection takes the highest-overlap unmatched evaluable GT with overlap
/// >= thresh (ties by lowest GT index). Failing that, an ignore region with
/// overlap >= thresh absorbs it. Everything else is a false positive.
FrameMatch match_frame(std::span<const Detection> dets, std::span<const GtObject> gts,
                       OverlapVariant variant, double thresh);

struct ScoredOutcome {
  double score = 0.0;
  DetectionOutcome outcome = DetectionOutcome::FalsePositive;
};

struct CurvePoint {
  double score_thresh = 0.0;
  double fppi = 0.0;
  double miss_rate = 1.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

using MissRateCurve = std::vector<CurvePoint>;

/// One point per distinct score of a counted (TP or FP) detection, in
/// descending score order. Greedy matching in score order is prefix-stable, so
/// the outcomes of a single full matching give the matching at every threshold.
/// With no counted detections the curve is the single point (fppi 0, miss 1)
/// at an infinite score threshold. Throws EvaluationError when evaluable_gts
/// is zero.
MissRateCurve miss_rate_curve(std::span<const ScoredOutcome> outcomes, std::size_t evaluable_gts,
                              std::size_t num_frames);

/// Nine log-evenly spaced FPPI references 10^-2, 10^-1.75, ..., 10^0.
std::array<double, 9> reference_fppi();

/// Miss rate at each reference FPPI by step interpolation: the last curve
/// point whose fppi <= reference. References below the smallest achieved FPPI
/// take the value at the smallest achieved FPPI.
std::array<double, 9> sample_miss_rates(const MissRateCurve& curve);

/// Geometric mean of the sampled miss rates, each floored at `floor`. Zero if
/// any floored sample is zero. Throws std::invalid_argument on an empty curve.
double log_average_miss_rate(const MissRateCurve& curve, double floor = 0.0);

struct EvalConfig {
  std::vector<double> iou_thresholds{0.5, 0.7};
  std::vector<OverlapVariant> variants{OverlapVariant::Visible, OverlapVariant::Thermal,
                                       OverlapVariant::MultiModal};
  bool apply_reasonable_filter = true;
  ReasonableFilter filter;
  double miss_rate_floor = 0.0;
  std::size_t threads = 1;

  void validate() const;
};

struct EvalEntry {
  OverlapVariant variant = OverlapVariant::MultiModal;
  double iou_thresh = 0.5;
  MissRateCurve curve;
  double log_average_mr = 1.0;
};

struct EvalReport {
  std::vector<EvalEntry> entries;  // variant-major, in config order
  std::size_t num_frames = 0;
  std::size_t evaluable_gts = 0;

  /// Throws std::out_of_range when the combination was not evaluated.
  const EvalEntry& at(OverlapVariant variant, double iou_thresh) const;
};

/// Full protocol over every configured variant and IoU threshold. Frames
/// without detections are legal. Throws EvaluationError for duplicate frame
/// ids or detections on frames absent from the annotations.
EvalReport evaluate(std::span<const FrameAnnotations> annotations,
                    std::span<const FrameDetections> detections, const EvalConfig& config = {});

/// CSV with header `variant,iou_thresh,score_thresh,fppi,miss_rate`, floats
/// with 9 significant digits, LF line endings.
void write_curve_csv(const EvalReport& report, std::ostream& out);

struct SingleBoxDetection {
  Box box;
  double score = 0.0;
  int class_id = kPedestrianClass;
};

/// Lifts single-modality output into pairs with visible == thermal == box.
Detection substitute_single_modality(const SingleBoxDetection& det);
FrameDetections substitute_single_modality(std::string frame_id,
                                           std::span<const SingleBoxDetection> dets);

/// printf-style "%.9g".
std::string format_g9(double value);

}  // namespace pairbox
