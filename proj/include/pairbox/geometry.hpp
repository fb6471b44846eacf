#pragma once

#include <array>
#include <string_view>

namespace pairbox {

/// Axis-aligned rectangle in pixel coordinates, half-open [x, x+w) x [y, y+h).
///
/// Zero-area boxes are valid; negative or non-finite extents are rejected at
/// construction with std::invalid_argument.
class Box {
 public:
  Box() = default;
  Box(double x, double y, double w, double h);

  double x() const { return x_; }
  double y() const { return y_; }
  double w() const { return w_; }
  double h() const { return h_; }
  double right() const { return x_ + w_; }
  double bottom() const { return y_ + h_; }
  double center_x() const { return x_ + 0.5 * w_; }
  double center_y() const { return y_ + 0.5 * h_; }

  std::array<double, 4> as_array() const { return {x_, y_, w_, h_}; }

  friend bool operator==(const Box&, const Box&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double w_ = 0.0;
  double h_ = 0.0;
};

/// One object seen in both modalities.
struct PairedBox {
  Box visible;
  Box thermal;

  friend bool operator==(const PairedBox&, const PairedBox&) = default;
};

/// Which overlap measure drives matching: IoU^V, IoU^T or the multi-modal IoU^M.
enum class OverlapVariant { Visible, Thermal, MultiModal };

std::string_view to_string(OverlapVariant variant);
/// Accepts "V", "T", "M" (case-insensitive). Throws std::invalid_argument otherwise.
OverlapVariant parse_overlap_variant(std::string_view text);

double area(const Box& b);
double intersection_area(const Box& a, const Box& b);
double union_area(const Box& a, const Box& b);
double iou(const Box& a, const Box& b);

/// Sum of per-modality intersections over sum of per-modality unions.
/// Zero when both unions are zero.
double iou_multimodal(const PairedBox& gt, const PairedBox& dt);

double overlap(const PairedBox& gt, const PairedBox& dt, OverlapVariant variant);

}  // namespace pairbox
