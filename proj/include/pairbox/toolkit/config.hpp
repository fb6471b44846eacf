#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "pairbox/geometry.hpp"
#include "pairbox/pairnms.hpp"
#include "pairbox/sampling.hpp"

namespace pairbox {

/// Shared experiment settings for the CLI commands.
struct RunConfig {
  std::vector<double> iou_thresholds{0.5, 0.7};
  std::vector<OverlapVariant> variants{OverlapVariant::Visible, OverlapVariant::Thermal,
                                       OverlapVariant::MultiModal};
  std::vector<double> shift_sweep{-20, -15, -10, -5, 0, 5, 10, 15, 20};
  AssignmentConfig assignment;
  double proposal_nms_thresh = kProposalNmsThresh;
  double detection_nms_thresh = kDetectionNmsThresh;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> curve_csv;
  std::size_t threads = 1;

  /// Throws std::invalid_argument. Shift values must satisfy |dx| < image_width.
  void validate(double image_width = 640.0) const;
};

/// Reads a JSON object whose keys mirror RunConfig fields (iou_thresholds,
/// variants, shift_sweep, assignment{...}, proposal_nms_thresh,
/// detection_nms_thresh). Missing keys keep their defaults.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace pairbox
