#include "pairbox/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pairbox {

Box::Box(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) ||
      !std::isfinite(h)) {
    throw std::invalid_argument("box coordinates must be finite");
  }
  if (w < 0.0) throw std::invalid_argument("box width must be >= 0, got " + std::to_string(w));
  if (h < 0.0) throw std::invalid_argument("box height must be >= 0, got " + std::to_string(h));
}

std::string_view to_string(OverlapVariant variant) {
  switch (variant) {
    case OverlapVariant::Visible:
      return "V";
    case OverlapVariant::Thermal:
      return "T";
    case OverlapVariant::MultiModal:
      return "M";
  }
  return "?";
}

OverlapVariant parse_overlap_variant(std::string_view text) {
  if (text.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(text.front()))) {
      case 'V':
        return OverlapVariant::Visible;
      case 'T':
        return OverlapVariant::Thermal;
      case 'M':
        return OverlapVariant::MultiModal;
      default:
        break;
    }
  }
  throw std::invalid_argument("unknown overlap variant '" + std::string(text) +
                              "' (expected V, T or M)");
}

double area(const Box& b) { return b.w() * b.h(); }

double intersection_area(const Box& a, const Box& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x(), b.x());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y(), b.y());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double union_area(const Box& a, const Box& b) {
  return area(a) + area(b) - intersection_area(a, b);
}

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = area(a) + area(b) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_multimodal(const PairedBox& gt, const PairedBox& dt) {
  const double inter_v = intersection_area(gt.visible, dt.visible);
  const double inter_t = intersection_area(gt.thermal, dt.thermal);
  const double union_v = area(gt.visible) + area(dt.visible) - inter_v;
  const double union_t = area(gt.thermal) + area(dt.thermal) - inter_t;
  const double denom = union_v + union_t;
  if (denom <= 0.0) return 0.0;
  return std::clamp((inter_v + inter_t) / denom, 0.0, 1.0);
}

double overlap(const PairedBox& gt, const PairedBox& dt, OverlapVariant variant) {
  switch (variant) {
    case OverlapVariant::Visible:
      return iou(gt.visible, dt.visible);
    case OverlapVariant::Thermal:
      return iou(gt.thermal, dt.thermal);
    case OverlapVariant::MultiModal:
      return iou_multimodal(gt, dt);
  }
  return 0.0;
}

}  // namespace pairbox
