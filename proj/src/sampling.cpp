#include "pairbox/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pairbox {

namespace {

bool is_ratio(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

struct BestMatch {
  double value = 0.0;
  std::optional<std::size_t> index;
};

// Lowest GT index wins ties.
BestMatch best_match(const PairedBox& candidate, std::span<const PairedBox> gts) {
  BestMatch best;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const double v = iou_multimodal(gts[g], candidate);
    if (!best.index || v > best.value) {
      best.value = v;
      best.index = g;
    }
  }
  return best;
}

std::vector<std::size_t> draw(std::vector<std::size_t> pool, std::size_t k, std::mt19937_64& rng) {
  k = std::min(k, pool.size());
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

void AssignmentConfig::validate() const {
  if (!is_ratio(rpn_pos_thresh) || !is_ratio(rpn_neg_thresh) || !is_ratio(det_pos_thresh) ||
      !is_ratio(det_neg_lo) || !is_ratio(det_neg_hi)) {
    throw std::invalid_argument("assignment thresholds must lie in [0, 1]");
  }
  if (rpn_neg_thresh > rpn_pos_thresh) {
    throw std::invalid_argument("rpn_neg_thresh must not exceed rpn_pos_thresh");
  }
  if (det_neg_lo >= det_neg_hi) throw std::invalid_argument("det_neg_lo must be < det_neg_hi");
  if (det_neg_hi > det_pos_thresh) {
    throw std::invalid_argument("det_neg_hi must not exceed det_pos_thresh");
  }
  auto fraction_ok = [](double f) { return std::isfinite(f) && f > 0.0 && f < 1.0; };
  if (!fraction_ok(rpn_pos_fraction) || !fraction_ok(det_pos_fraction)) {
    throw std::invalid_argument("positive fractions must lie in (0, 1)");
  }
  if (rpn_batch < 1 || det_batch < 1) throw std::invalid_argument("batch sizes must be >= 1");
}

std::size_t AssignmentResult::count(SampleLabel label) const {
  return static_cast<std::size_t>(std::count_if(
      candidates.begin(), candidates.end(),
      [label](const CandidateAssignment& c) { return c.label == label; }));
}

AssignmentResult assign_rpn(std::span<const PairedBox> anchors, std::span<const PairedBox> gts,
                            const AssignmentConfig& cfg) {
  cfg.validate();
  AssignmentResult result;
  result.candidates.resize(anchors.size());
  if (gts.empty()) {
    for (auto& c : result.candidates) c.label = SampleLabel::Negative;
    return result;
  }
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const BestMatch best = best_match(anchors[a], gts);
    CandidateAssignment& c = result.candidates[a];
    c.max_ioum = best.value;
    c.argmax_gt = best.index;
    if (best.value > cfg.rpn_pos_thresh) {
      c.label = SampleLabel::Positive;
      c.matched_gt = best.index;
    } else if (best.value < cfg.rpn_neg_thresh) {
      c.label = SampleLabel::Negative;
    } else {
      c.label = SampleLabel::Ignore;
    }
  }
  if (cfg.force_best_anchor_per_gt) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      double best = 0.0;
      for (const PairedBox& anchor : anchors) best = std::max(best, iou_multimodal(gts[g], anchor));
      if (best <= 0.0) continue;
      for (std::size_t a = 0; a < anchors.size(); ++a) {
        CandidateAssignment& c = result.candidates[a];
        if (c.label == SampleLabel::Positive) continue;
        if (iou_multimodal(gts[g], anchors[a]) == best) {
          c.label = SampleLabel::Positive;
          c.matched_gt = g;
        }
      }
    }
  }
  return result;
}

AssignmentResult assign_detector(std::span<const PairedBox> rois, std::span<const PairedBox> gts,
                                 const AssignmentConfig& cfg) {
  cfg.validate();
  AssignmentResult result;
  result.candidates.resize(rois.size());
  for (std::size_t r = 0; r < rois.size(); ++r) {
    const BestMatch best = best_match(rois[r], gts);
    CandidateAssignment& c = result.candidates[r];
    c.max_ioum = best.value;
    c.argmax_gt = best.index;
    if (best.index && best.value >= cfg.det_pos_thresh) {
      c.label = SampleLabel::Positive;
      c.matched_gt = best.index;
    } else if (best.value >= cfg.det_neg_lo && best.value < cfg.det_neg_hi) {
      c.label = SampleLabel::Negative;
    } else {
      c.label = SampleLabel::Ignore;
    }
  }
  return result;
}

std::vector<std::size_t> sample_minibatch(const AssignmentResult& labels, std::size_t batch,
                                          double pos_fraction, std::mt19937_64& rng) {
  if (labels.candidates.empty()) throw std::invalid_argument("sample_minibatch: no candidates");
  if (batch < 1) throw std::invalid_argument("sample_minibatch: batch must be >= 1");
  if (!(pos_fraction > 0.0 && pos_fraction < 1.0)) {
    throw std::invalid_argument("sample_minibatch: pos_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < labels.candidates.size(); ++i) {
    switch (labels.candidates[i].label) {
      case SampleLabel::Positive:
        positives.push_back(i);
        break;
      case SampleLabel::Negative:
        negatives.push_back(i);
        break;
      case SampleLabel::Ignore:
        break;
    }
  }
  const auto pos_quota =
      static_cast<std::size_t>(std::floor(pos_fraction * static_cast<double>(batch)));
  std::vector<std::size_t> selected = draw(std::move(positives), pos_quota, rng);
  const std::vector<std::size_t> neg = draw(std::move(negatives), batch - selected.size(), rng);
  selected.insert(selected.end(), neg.begin(), neg.end());
  return selected;
}

std::string_view to_string(SampleLabel label) {
  switch (label) {
    case SampleLabel::Positive:
      return "positive";
    case SampleLabel::Negative:
      return "negative";
    case SampleLabel::Ignore:
      return "ignore";
  }
  return "?";
}

}  // namespace pairbox
