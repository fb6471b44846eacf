#include "pairbox/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "pairbox/parallel.hpp"

namespace pairbox {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool is_prob(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%06zu", i);
  return buf;
}

struct Perturbed {
  Box box;
  double relative_error = 0.0;  // perturbation magnitude / box diagonal
};

Perturbed perturb(const Box& gt, const MockDetectorSpec& spec, std::mt19937_64& rng) {
  double dcx = 0.0, dcy = 0.0, sw = 0.0, sh = 0.0;
  if (spec.center_noise_sigma > 0.0) {
    std::normal_distribution<double> n(0.0, spec.center_noise_sigma);
    dcx = n(rng);
    dcy = n(rng);
  }
  if (spec.size_noise_sigma > 0.0) {
    std::normal_distribution<double> n(0.0, spec.size_noise_sigma);
    sw = n(rng);
    sh = n(rng);
  }
  if (dcx == 0.0 && dcy == 0.0 && sw == 0.0 && sh == 0.0) return {gt, 0.0};
  const double w = gt.w() * std::exp(sw);
  const double h = gt.h() * std::exp(sh);
  const double cx = gt.center_x() + dcx;
  const double cy = gt.center_y() + dcy;
  const double dw = w - gt.w();
  const double dh = h - gt.h();
  const double magnitude = std::sqrt(dcx * dcx + dcy * dcy + dw * dw + dh * dh);
  const double diagonal = std::hypot(gt.w(), gt.h());
  // Clip to the image so the result stays a valid box.
  const double l = std::clamp(cx - 0.5 * w, 0.0, spec.image_width);
  const double r = std::clamp(cx + 0.5 * w, 0.0, spec.image_width);
  const double t = std::clamp(cy - 0.5 * h, 0.0, spec.image_height);
  const double b = std::clamp(cy + 0.5 * h, 0.0, spec.image_height);
  return {Box(l, t, r - l, b - t), diagonal > 0.0 ? magnitude / diagonal : 0.0};
}

double score_for(double relative_error, const ScoreModel& model, std::mt19937_64& rng) {
  double s = 1.0 - relative_error;
  if (model.noise_sigma > 0.0) s += std::normal_distribution<double>(0.0, model.noise_sigma)(rng);
  return std::clamp(s, model.min_score, 1.0);
}

}  // namespace

std::mt19937_64 substream(std::uint64_t root_seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t key = splitmix64(splitmix64(root_seed) ^ splitmix64(stream * 0x100000001b3ULL + 1)) ^
                            splitmix64(index + 0x632be59bd9b4e019ULL);
  return std::mt19937_64(splitmix64(key));
}

void ShiftSpec::validate() const {
  if (!std::isfinite(dx) || !std::isfinite(image_width) || image_width <= 0.0) {
    throw std::invalid_argument("shift: dx and image width must be finite, width positive");
  }
  if (std::abs(dx) >= image_width) {
    throw std::invalid_argument("shift: |dx| must be smaller than the image width");
  }
}

Box shift_box(const Box& box, const ShiftSpec& spec) {
  const double left = box.x() + spec.dx;
  const double right = left + box.w();
  if (left >= 0.0 && right <= spec.image_width) return Box(left, box.y(), box.w(), box.h());
  const double l = std::clamp(left, 0.0, spec.image_width);
  const double r = std::clamp(right, 0.0, spec.image_width);
  return Box(l, box.y(), r - l, box.h());
}

std::vector<FrameAnnotations> apply_shift(std::span<const FrameAnnotations> frames,
                                          const ShiftSpec& spec) {
  spec.validate();
  std::vector<FrameAnnotations> out(frames.begin(), frames.end());
  if (spec.dx == 0.0) return out;
  for (auto& frame : out) {
    for (auto& obj : frame.objects) obj.pair.thermal = shift_box(obj.pair.thermal, spec);
  }
  return out;
}

void SceneSpec::validate() const {
  if (!std::isfinite(height_min) || !std::isfinite(height_max) || height_min <= 0.0) {
    throw std::invalid_argument("scene: heights must be positive");
  }
  if (!(height_max > height_min)) throw std::invalid_argument("scene: height range is empty");
  if (height_max > image_height) throw std::invalid_argument("scene: height exceeds image height");
  if (min_per_frame > max_per_frame) {
    throw std::invalid_argument("scene: min_per_frame exceeds max_per_frame");
  }
  if (fixed_width && !(*fixed_width > 0.0)) throw std::invalid_argument("scene: width must be positive");
  if (!fixed_width && !(aspect_ratio > 0.0)) {
    throw std::invalid_argument("scene: aspect ratio must be positive");
  }
  if (!std::isfinite(misalign_lo) || !std::isfinite(misalign_hi) || misalign_lo > misalign_hi) {
    throw std::invalid_argument("scene: misalignment range is invalid");
  }
  if (!is_prob(partial_occlusion_prob) || !is_prob(heavy_occlusion_prob) ||
      partial_occlusion_prob + heavy_occlusion_prob > 1.0) {
    throw std::invalid_argument("scene: occlusion probabilities must be in [0, 1] and sum to <= 1");
  }
  const double widest = fixed_width ? *fixed_width : aspect_ratio * height_max;
  const double slack = image_width - widest - std::max(0.0, misalign_hi) - std::max(0.0, -misalign_lo);
  if (!(slack >= 0.0)) throw std::invalid_argument("scene: boxes do not fit inside the image");
}

std::vector<FrameAnnotations> generate_scene(const SceneSpec& spec, std::size_t threads) {
  spec.validate();
  std::vector<FrameAnnotations> frames(spec.num_frames);
  parallel_for(spec.num_frames, threads, [&](std::size_t f) {
    std::mt19937_64 rng = substream(spec.seed, 0, f);
    FrameAnnotations& frame = frames[f];
    frame.frame_id = frame_name(f);
    const std::size_t count =
        std::uniform_int_distribution<std::size_t>(spec.min_per_frame, spec.max_per_frame)(rng);
    for (std::size_t k = 0; k < count; ++k) {
      const double h = uniform(rng, spec.height_min, spec.height_max);
      const double w = spec.fixed_width ? *spec.fixed_width : spec.aspect_ratio * h;
      const double shift = uniform(rng, spec.misalign_lo, spec.misalign_hi);
      const double x_lo = std::max(0.0, -spec.misalign_lo);
      const double x_hi = spec.image_width - w - std::max(0.0, spec.misalign_hi);
      const double x = std::floor(uniform(rng, x_lo, x_hi));
      const double y = std::floor(uniform(rng, 0.0, spec.image_height - h));
      const double u = uniform(rng, 0.0, 1.0);
      Occlusion occ = Occlusion::None;
      if (u < spec.heavy_occlusion_prob) {
        occ = Occlusion::Heavy;
      } else if (u < spec.heavy_occlusion_prob + spec.partial_occlusion_prob) {
        occ = Occlusion::Partial;
      }
      const Box visible(x, y, w, h);
      const Box thermal(x + shift, y, w, h);
      frame.objects.push_back(GtObject{PairedBox{visible, thermal}, occ, false});
    }
  });
  return frames;
}

std::string_view to_string(MockMode mode) {
  return mode == MockMode::Paired ? "paired" : "single_box";
}

std::optional<MockMode> parse_mock_mode(std::string_view text) {
  if (text == "paired") return MockMode::Paired;
  if (text == "single_box" || text == "single-box" || text == "single") return MockMode::SingleBox;
  return std::nullopt;
}

void MockDetectorSpec::validate() const {
  if (!is_prob(miss_prob)) throw std::invalid_argument("mock: miss_prob must lie in [0, 1]");
  if (!(center_noise_sigma >= 0.0) || !(size_noise_sigma >= 0.0) || !std::isfinite(center_noise_sigma) ||
      !std::isfinite(size_noise_sigma)) {
    throw std::invalid_argument("mock: noise sigmas must be finite and >= 0");
  }
  if (!(fp_per_frame >= 0.0) || !std::isfinite(fp_per_frame)) {
    throw std::invalid_argument("mock: fp_per_frame must be finite and >= 0");
  }
  if (!is_prob(score.min_score) || !is_prob(score.fp_score_lo) || !is_prob(score.fp_score_hi) ||
      score.fp_score_lo > score.fp_score_hi || !(score.noise_sigma >= 0.0)) {
    throw std::invalid_argument("mock: invalid score model");
  }
  if (!(image_width > 0.0) || !(image_height > 0.0)) {
    throw std::invalid_argument("mock: image dimensions must be positive");
  }
}

std::vector<FrameDetections> mock_detect(std::span<const FrameAnnotations> frames,
                                         const MockDetectorSpec& spec, std::size_t threads) {
  spec.validate();
  std::vector<FrameDetections> out(frames.size());
  parallel_for(frames.size(), threads, [&](std::size_t f) {
    std::mt19937_64 rng = substream(spec.seed, 1, f);
    FrameDetections& fd = out[f];
    fd.frame_id = frames[f].frame_id;
    std::bernoulli_distribution missed(spec.miss_prob);
    for (const GtObject& obj : frames[f].objects) {
      if (obj.ignore) continue;
      if (missed(rng)) continue;
      Detection det;
      if (spec.mode == MockMode::Paired) {
        const Perturbed v = perturb(obj.pair.visible, spec, rng);
        const Perturbed t = perturb(obj.pair.thermal, spec, rng);
        det.pair = PairedBox{v.box, t.box};
        det.score = score_for(std::max(v.relative_error, t.relative_error), spec.score, rng);
      } else {
        const Perturbed v = perturb(obj.pair.visible, spec, rng);
        det.pair = PairedBox{v.box, v.box};
        det.score = score_for(v.relative_error, spec.score, rng);
      }
      fd.detections.push_back(det);
    }
    if (spec.fp_per_frame > 0.0) {
      const int n_fp = std::poisson_distribution<int>(spec.fp_per_frame)(rng);
      for (int k = 0; k < n_fp; ++k) {
        const double h = uniform(rng, 40.0, std::min(160.0, spec.image_height));
        const double w = 0.41 * h;
        const double x = uniform(rng, 0.0, std::max(0.0, spec.image_width - w));
        const double y = uniform(rng, 0.0, std::max(0.0, spec.image_height - h));
        const Box box(x, y, w, h);
        const double score = uniform(rng, spec.score.fp_score_lo, spec.score.fp_score_hi);
        fd.detections.push_back(Detection{PairedBox{box, box}, score, kPedestrianClass});
      }
    }
  });
  return out;
}

}  // namespace pairbox
