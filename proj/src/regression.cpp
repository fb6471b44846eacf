#include "pairbox/regression.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pairbox {

namespace {

bool all_finite(const BoxOffsets& o) {
  return std::isfinite(o.tx) && std::isfinite(o.ty) && std::isfinite(o.tw) &&
         std::isfinite(o.th);
}

void require_extent(const Box& b, const char* what) {
  if (!(b.w() > 0.0) || !(b.h() > 0.0)) {
    throw std::invalid_argument(std::string(what) + " box must have positive width and height");
  }
}

double smooth_l1_scalar(double x) {
  const double ax = std::abs(x);
  return ax < 1.0 ? 0.5 * x * x : ax - 0.5;
}

double smooth_l1_grad(double x) {
  if (std::abs(x) < 1.0) return x;
  return x > 0.0 ? 1.0 : -1.0;
}

}  // namespace

BoxOffsets encode_box(const Box& anchor, const Box& target) {
  require_extent(anchor, "anchor");
  require_extent(target, "target");
  return {
      (target.center_x() - anchor.center_x()) / anchor.w(),
      (target.center_y() - anchor.center_y()) / anchor.h(),
      std::log(target.w() / anchor.w()),
      std::log(target.h() / anchor.h()),
  };
}

Box decode_box(const Box& anchor, const BoxOffsets& offsets) {
  require_extent(anchor, "anchor");
  if (!all_finite(offsets)) throw std::invalid_argument("regression offsets must be finite");
  const double cx = anchor.center_x() + offsets.tx * anchor.w();
  const double cy = anchor.center_y() + offsets.ty * anchor.h();
  const double w = anchor.w() * std::exp(offsets.tw);
  const double h = anchor.h() * std::exp(offsets.th);
  return Box(cx - 0.5 * w, cy - 0.5 * h, w, h);
}

OffsetLoss smooth_l1(const BoxOffsets& pred, const BoxOffsets& target) {
  const auto p = pred.as_array();
  const auto t = target.as_array();
  OffsetLoss out;
  std::array<double, 4> grad{};
  for (std::size_t d = 0; d < 4; ++d) {
    const double diff = p[d] - t[d];
    out.loss += smooth_l1_scalar(diff);
    grad[d] = smooth_l1_grad(diff);
  }
  out.grad = BoxOffsets::from_array(grad);
  return out;
}

ClassLoss cross_entropy(std::span<const double> logits, std::size_t label) {
  if (logits.empty()) throw std::invalid_argument("cross_entropy: empty logits");
  if (label >= logits.size()) {
    throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                " out of range for " + std::to_string(logits.size()) +
                                " classes");
  }
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - max_logit);
  const double log_norm = max_logit + std::log(sum);

  ClassLoss out;
  out.loss = std::max(0.0, log_norm - logits[label]);
  out.grad.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out.grad[k] = std::exp(logits[k] - log_norm);
  }
  out.grad[label] -= 1.0;
  return out;
}

RpnSample RpnSample::negative(double logit, BoxOffsets pred_v, BoxOffsets pred_t) {
  return RpnSample{logit, AnchorLabel::Negative, pred_v, pred_t, std::nullopt, std::nullopt};
}

RpnSample RpnSample::positive(double logit, BoxOffsets pred_v, BoxOffsets pred_t,
                              BoxOffsets target_v, BoxOffsets target_t) {
  return RpnSample{logit, AnchorLabel::Positive, pred_v, pred_t, target_v, target_t};
}

void LossConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (n_cls < 1) throw std::invalid_argument("n_cls must be >= 1");
  if (n_reg < 1) throw std::invalid_argument("n_reg must be >= 1");
}

LossTerms rpn_loss_terms(std::span<const RpnSample> samples, const LossConfig& cfg) {
  cfg.validate();
  if (samples.size() != cfg.n_cls) {
    throw std::invalid_argument("rpn_loss: n_cls (" + std::to_string(cfg.n_cls) +
                                ") must equal the number of samples (" +
                                std::to_string(samples.size()) + ")");
  }
  double cls_sum = 0.0;
  double reg_v = 0.0;
  double reg_t = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const RpnSample& s = samples[i];
    const bool positive = s.label == AnchorLabel::Positive;
    const bool has_targets = s.target_v.has_value() && s.target_t.has_value();
    if (positive && !has_targets) {
      throw std::invalid_argument("rpn_loss: positive sample " + std::to_string(i) +
                                  " is missing regression targets");
    }
    if (!positive && (s.target_v || s.target_t)) {
      throw std::invalid_argument("rpn_loss: negative sample " + std::to_string(i) +
                                  " must not carry regression targets");
    }
    const std::array<double, 2> logits{0.0, s.objectness_logit};
    cls_sum += cross_entropy(logits, positive ? 1 : 0).loss;
    if (positive) {
      reg_v += smooth_l1(s.pred_v, *s.target_v).loss;
      reg_t += smooth_l1(s.pred_t, *s.target_t).loss;
    }
  }
  const double n_cls = static_cast<double>(cfg.n_cls);
  const double n_reg = static_cast<double>(cfg.n_reg);
  return LossTerms{cls_sum / n_cls, reg_v / n_reg, reg_t / n_reg, cfg.lambda};
}

double rpn_loss(std::span<const RpnSample> samples, const LossConfig& cfg) {
  return rpn_loss_terms(samples, cfg).total();
}

LossTerms detector_loss_terms(const DetectorSample& sample, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  LossTerms terms;
  terms.lambda = lambda;
  terms.classification = cross_entropy(sample.class_scores, sample.true_class).loss;
  if (sample.true_class != kBackgroundClass) {
    if (!sample.target_v || !sample.target_t) {
      throw std::invalid_argument("detector_loss: foreground sample is missing regression targets");
    }
    terms.regression_visible = smooth_l1(sample.pred_v, *sample.target_v).loss;
    terms.regression_thermal = smooth_l1(sample.pred_t, *sample.target_t).loss;
  }
  return terms;
}

double detector_loss(const DetectorSample& sample, double lambda) {
  return detector_loss_terms(sample, lambda).total();
}

}  // namespace pairbox
