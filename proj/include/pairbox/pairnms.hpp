#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pairbox/geometry.hpp"

namespace pairbox {

inline constexpr int kPedestrianClass = 1;

/// A scored box pair. Score must be finite and in [0, 1].
struct Detection {
  PairedBox pair;
  double score = 0.0;
  int class_id = kPedestrianClass;

  void validate() const;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Greedy NMS that consults the thermal boxes only; suppressing a thermal box
/// drops its visible partner with it. Boxes are removed when thermal IoU is
/// strictly greater than `iou_thresh`. Suppression is per class; score ties go
/// to the earlier input. Output is sorted by descending score (ties by input
/// order) and truncated to `max_keep` when given.
std::vector<Detection> paired_nms(std::span<const Detection> dets, double iou_thresh,
                                  std::optional<std::size_t> max_keep = std::nullopt);

/// Conventional defaults; the thresholds are not fixed by the method itself.
inline constexpr double kProposalNmsThresh = 0.7;
inline constexpr double kDetectionNmsThresh = 0.5;

}  // namespace pairbox
