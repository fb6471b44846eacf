#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "pairbox/geometry.hpp"

namespace pairbox {

/// IoU^M thresholds and mini-batch sizes for anchor-pair and RoI-pair labeling.
struct AssignmentConfig {
  double rpn_pos_thresh = 0.63;  // positive iff max IoU^M >  this
  double rpn_neg_thresh = 0.3;   // negative iff max IoU^M <  this
  double det_pos_thresh = 0.5;   // positive iff max IoU^M >= this
  double det_neg_lo = 0.1;       // negative iff det_neg_lo <= max IoU^M < det_neg_hi
  double det_neg_hi = 0.5;
  std::size_t rpn_batch = 256;
  double rpn_pos_fraction = 0.5;
  std::size_t det_batch = 128;
  double det_pos_fraction = 0.25;
  /// Also label the best anchor pair(s) of every GT pair positive, as in the
  /// original Faster R-CNN. Off by default.
  bool force_best_anchor_per_gt = false;

  void validate() const;
};

enum class SampleLabel { Positive, Negative, Ignore };

struct CandidateAssignment {
  SampleLabel label = SampleLabel::Ignore;
  std::optional<std::size_t> matched_gt;  // set iff label == Positive
  double max_ioum = 0.0;
  std::optional<std::size_t> argmax_gt;   // best GT regardless of label; empty with no GTs
};

struct AssignmentResult {
  std::vector<CandidateAssignment> candidates;

  std::size_t count(SampleLabel label) const;
};

/// Anchor-pair labeling for the proposal stage.
AssignmentResult assign_rpn(std::span<const PairedBox> anchors, std::span<const PairedBox> gts,
                            const AssignmentConfig& cfg);

/// RoI-pair labeling for the detection head.
AssignmentResult assign_detector(std::span<const PairedBox> rois, std::span<const PairedBox> gts,
                                 const AssignmentConfig& cfg);

/// Draws up to floor(pos_fraction * batch) positives uniformly, then fills the
/// rest of the batch with uniformly drawn negatives. Returned indices are the
/// positives in ascending order followed by the negatives in ascending order.
/// Throws std::invalid_argument when `labels` is empty or batch == 0.
std::vector<std::size_t> sample_minibatch(const AssignmentResult& labels, std::size_t batch,
                                          double pos_fraction, std::mt19937_64& rng);

std::string_view to_string(SampleLabel label);

}  // namespace pairbox
