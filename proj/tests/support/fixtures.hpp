#pragma once

// Hand-built 4-frame scene with every outcome enumerated by hand.
//
//   f1: GT A evaluable.         d1 0.90 exact on A (TP), d2 0.60 far away (FP)
//   f2: GT B, C evaluable.      d3 0.80 exact on B (TP), d4 0.50 duplicate on B (FP),
//                               d8 0.45 on C shifted 7.5 px (IoU 0.6: TP@0.5, FP@0.7)
//   f3: GT D evaluable, missed. d5 0.70 far away (FP)
//   f4: GT E 40 px tall (ignore). d6 0.95 exact on E (ignored), d7 0.40 far away (FP)
//
// Four evaluable objects, four frames. Curve at IoU 0.5 (score: fppi, miss):
//   0.90: 0, 3/4   0.80: 0, 1/2   0.70: 1/4, 1/2   0.60: 1/2, 1/2
//   0.50: 3/4, 1/2 0.45: 3/4, 1/4 0.40: 1, 1/4
// Sampled at the nine references: eight times 1/2, once (fppi 1) 1/4, so
// MR = 0.5^(10/9) = 0.46294. At IoU 0.7, d8 becomes a FP and every sample is 1/2.

#include <cmath>
#include <vector>

#include "pairbox/evaluation.hpp"

namespace fixture {

inline pairbox::PairedBox aligned(double x, double y, double w, double h) {
  const pairbox::Box b(x, y, w, h);
  return {b, b};
}

inline std::vector<pairbox::FrameAnnotations> four_frame_gt() {
  using pairbox::GtObject;
  using pairbox::Occlusion;
  return {
      {"f1", {GtObject{aligned(0, 0, 30, 60), Occlusion::None, false}}},
      {"f2",
       {GtObject{aligned(100, 100, 30, 60), Occlusion::None, false},
        GtObject{aligned(200, 100, 30, 60), Occlusion::Partial, false}}},
      {"f3", {GtObject{aligned(50, 50, 30, 60), Occlusion::None, false}}},
      {"f4", {GtObject{aligned(0, 0, 30, 40), Occlusion::None, false}}},
  };
}

inline std::vector<pairbox::FrameDetections> four_frame_dets() {
  using pairbox::Detection;
  return {
      {"f1", {Detection{aligned(0, 0, 30, 60), 0.9}, Detection{aligned(300, 0, 30, 60), 0.6}}},
      {"f2",
       {Detection{aligned(100, 100, 30, 60), 0.8}, Detection{aligned(100, 100, 30, 60), 0.5},
        Detection{aligned(207.5, 100, 30, 60), 0.45}}},
      {"f3", {Detection{aligned(400, 300, 30, 60), 0.7}}},
      {"f4", {Detection{aligned(0, 0, 30, 40), 0.95}, Detection{aligned(500, 400, 30, 60), 0.4}}},
  };
}

struct Row {
  double score, fppi, miss;
};

inline const std::vector<Row> kCurveAt05{{0.90, 0.0, 0.75}, {0.80, 0.0, 0.5},  {0.70, 0.25, 0.5},
                                         {0.60, 0.5, 0.5},  {0.50, 0.75, 0.5}, {0.45, 0.75, 0.25},
                                         {0.40, 1.0, 0.25}};
inline const std::vector<Row> kCurveAt07{{0.90, 0.0, 0.75}, {0.80, 0.0, 0.5},  {0.70, 0.25, 0.5},
                                         {0.60, 0.5, 0.5},  {0.50, 0.75, 0.5}, {0.45, 1.0, 0.5},
                                         {0.40, 1.25, 0.5}};
inline const double kMrAt05 = std::pow(0.5, 10.0 / 9.0);
inline const double kMrAt07 = 0.5;

}  // namespace fixture
