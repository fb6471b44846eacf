#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pairbox/geometry.hpp"

namespace pairbox {

/// Center/log-size regression offsets of a box relative to an anchor.
struct BoxOffsets {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;

  std::array<double, 4> as_array() const { return {tx, ty, tw, th}; }
  static BoxOffsets from_array(const std::array<double, 4>& v) { return {v[0], v[1], v[2], v[3]}; }

  friend bool operator==(const BoxOffsets&, const BoxOffsets&) = default;
};

/// Throws std::invalid_argument when either box has a zero extent.
BoxOffsets encode_box(const Box& anchor, const Box& target);
/// Inverse of encode_box. Throws std::invalid_argument for a degenerate anchor
/// or non-finite offsets.
Box decode_box(const Box& anchor, const BoxOffsets& offsets);

struct OffsetLoss {
  double loss = 0.0;
  BoxOffsets grad;  // d loss / d pred
};

/// Sum over the four coordinates of 0.5 x^2 (|x| < 1) or |x| - 0.5.
OffsetLoss smooth_l1(const BoxOffsets& pred, const BoxOffsets& target);

struct ClassLoss {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits
};

/// Softmax cross-entropy on raw logits. Throws std::invalid_argument for empty
/// logits or an out-of-range label.
ClassLoss cross_entropy(std::span<const double> logits, std::size_t label);

enum class AnchorLabel { Negative, Positive };

/// One sampled anchor pair. The objectness logit is the object-class logit of
/// a two-class softmax whose background logit is fixed at zero, which makes
/// softmax(0, s)[object] == sigmoid(s).
struct RpnSample {
  double objectness_logit = 0.0;
  AnchorLabel label = AnchorLabel::Negative;
  BoxOffsets pred_v;
  BoxOffsets pred_t;
  std::optional<BoxOffsets> target_v;
  std::optional<BoxOffsets> target_t;

  static RpnSample negative(double logit, BoxOffsets pred_v = {}, BoxOffsets pred_t = {});
  static RpnSample positive(double logit, BoxOffsets pred_v, BoxOffsets pred_t,
                            BoxOffsets target_v, BoxOffsets target_t);
};

/// Class index 0 is background; every other index is a foreground class.
inline constexpr std::size_t kBackgroundClass = 0;

struct DetectorSample {
  std::vector<double> class_scores;  // logits, background included
  std::size_t true_class = kBackgroundClass;
  BoxOffsets pred_v;
  BoxOffsets pred_t;
  std::optional<BoxOffsets> target_v;
  std::optional<BoxOffsets> target_t;
};

struct LossConfig {
  double lambda = 1.0;
  std::size_t n_cls = 256;
  std::size_t n_reg = 2400;

  void validate() const;
};

/// Individual terms of a two-modality loss. total == classification +
/// lambda * (regression_visible + regression_thermal), where the regression
/// terms already carry their normalizer.
struct LossTerms {
  double classification = 0.0;
  double regression_visible = 0.0;
  double regression_thermal = 0.0;
  double lambda = 1.0;

  double total() const {
    return classification + lambda * (regression_visible + regression_thermal);
  }
};

/// Two-modality RPN loss. cfg.n_cls must equal samples.size(). Throws
/// std::invalid_argument on a positive sample without targets or a negative
/// sample carrying targets.
LossTerms rpn_loss_terms(std::span<const RpnSample> samples, const LossConfig& cfg);
double rpn_loss(std::span<const RpnSample> samples, const LossConfig& cfg);

LossTerms detector_loss_terms(const DetectorSample& sample, double lambda);
double detector_loss(const DetectorSample& sample, double lambda);

}  // namespace pairbox
