#include "pairbox/pairnms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pairbox {

void Detection::validate() const {
  if (!std::isfinite(score) || score < 0.0 || score > 1.0) {
    throw std::invalid_argument("detection score must be in [0, 1], got " + std::to_string(score));
  }
}

std::vector<Detection> paired_nms(std::span<const Detection> dets, double iou_thresh,
                                  std::optional<std::size_t> max_keep) {
  if (!(iou_thresh >= 0.0 && iou_thresh <= 1.0)) {
    throw std::invalid_argument("paired_nms: iou_thresh must lie in [0, 1]");
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<bool> suppressed(dets.size(), false);
  std::vector<Detection> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (suppressed[i]) continue;
    const Detection& keep = dets[order[i]];
    kept.push_back(keep);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (suppressed[j]) continue;
      const Detection& other = dets[order[j]];
      if (other.class_id != keep.class_id) continue;
      if (iou(keep.pair.thermal, other.pair.thermal) > iou_thresh) suppressed[j] = true;
    }
  }
  if (max_keep && kept.size() > *max_keep) kept.resize(*max_keep);
  return kept;
}

}  // namespace pairbox
