#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "pairbox/evaluation.hpp"

namespace pairbox {

/// Independent generator for (root seed, stream, index). Streams used here:
/// 0 = scene generation, 1 = mock detection. The index is the frame number.
std::mt19937_64 substream(std::uint64_t root_seed, std::uint64_t stream, std::uint64_t index);

/// Horizontal thermal displacement. |dx| must be smaller than image_width.
struct ShiftSpec {
  double dx = 0.0;
  double image_width = 640.0;

  void validate() const;
};

/// Translates by dx, then clips to [0, image_width]; width shrinks (possibly
/// to zero) when the box leaves the image.
Box shift_box(const Box& box, const ShiftSpec& spec);

/// Shifts every thermal box; visible boxes and all other fields are untouched.
std::vector<FrameAnnotations> apply_shift(std::span<const FrameAnnotations> frames,
                                          const ShiftSpec& spec);

struct SceneSpec {
  std::size_t num_frames = 100;
  std::size_t min_per_frame = 1;
  std::size_t max_per_frame = 4;
  double height_min = 60.0;
  double height_max = 160.0;
  std::optional<double> fixed_width;  // otherwise aspect_ratio * height
  double aspect_ratio = 0.41;
  // Thermal box = visible box shifted by dx ~ U[misalign_lo, misalign_hi].
  double misalign_lo = 0.0;
  double misalign_hi = 0.0;
  double partial_occlusion_prob = 0.0;
  double heavy_occlusion_prob = 0.0;
  double image_width = 640.0;
  double image_height = 512.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Paired ground truth with both boxes fully inside the image. Deterministic
/// under spec.seed and independent of `threads`. Throws std::invalid_argument
/// for a degenerate spec.
std::vector<FrameAnnotations> generate_scene(const SceneSpec& spec, std::size_t threads = 1);

enum class MockMode { Paired, SingleBox };

std::string_view to_string(MockMode mode);
std::optional<MockMode> parse_mock_mode(std::string_view text);

/// score = clamp(1 - perturbation / diagonal + N(0, noise_sigma), min_score, 1).
/// False positives draw their score from U[fp_score_lo, fp_score_hi].
struct ScoreModel {
  double min_score = 0.05;
  double noise_sigma = 0.02;
  double fp_score_lo = 0.05;
  double fp_score_hi = 0.5;
};

struct MockDetectorSpec {
  MockMode mode = MockMode::Paired;
  double center_noise_sigma = 0.0;  // pixels
  double size_noise_sigma = 0.0;    // log-scale relative size noise
  double miss_prob = 0.0;
  double fp_per_frame = 0.0;        // Poisson mean
  ScoreModel score;
  double image_width = 640.0;
  double image_height = 512.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Stand-in detector. Paired mode perturbs each modality's GT box
/// independently; single-box mode perturbs the visible GT box and copies it into
/// both modalities. Objects flagged ignore are never detected.
std::vector<FrameDetections> mock_detect(std::span<const FrameAnnotations> frames,
                                         const MockDetectorSpec& spec, std::size_t threads = 1);

}  // namespace pairbox
