#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pairbox/evaluation.hpp"

using namespace pairbox;
using fixture::aligned;

namespace {

GtObject obj(PairedBox p, Occlusion occ = Occlusion::None, bool ignore = false) { return {p, occ, ignore}; }

std::vector<FrameDetections> gt_as_detections(const std::vector<FrameAnnotations>& frames) {
  std::vector<FrameDetections> out;
  for (const auto& f : frames) {
    FrameDetections fd{f.frame_id, {}};
    for (const auto& o : f.objects) fd.detections.push_back(Detection{o.pair, 1.0});
    out.push_back(fd);
  }
  return out;
}

// Random scene with some misalignment and occlusion.
std::pair<std::vector<FrameAnnotations>, std::vector<FrameDetections>> random_scene(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n(0, 4), x(0, 300), h(40, 120), jitter(-12, 12), occ(0, 5);
  std::uniform_int_distribution<int> q(1, 20);
  std::vector<FrameAnnotations> frames;
  std::vector<FrameDetections> dets;
  for (int f = 0; f < 6; ++f) {
    FrameAnnotations fa{"fr" + std::to_string(f), {}};
    FrameDetections fd{fa.frame_id, {}};
    for (int k = n(rng); k > 0; --k) {
      const double hh = h(rng);
      const Box v(x(rng), x(rng), 0.5 * hh, hh);
      const Box t(v.x() + jitter(rng), v.y(), v.w(), v.h());
      fa.objects.push_back(obj({v, t}, occ(rng) == 0 ? Occlusion::Heavy : Occlusion::None));
      if (q(rng) > 5) {
        const Box dv(v.x() + jitter(rng), v.y() + jitter(rng), v.w(), v.h());
        const Box dt(t.x() + jitter(rng), t.y(), t.w(), t.h());
        fd.detections.push_back(Detection{{dv, dt}, q(rng) / 20.0});
      }
    }
    for (int k = n(rng); k > 0; --k) {
      const Box b(x(rng), x(rng), 30, 60);
      fd.detections.push_back(Detection{{b, b}, q(rng) / 20.0});
    }
    frames.push_back(fa);
    dets.push_back(fd);
  }
  // Guarantee at least one evaluable object.
  frames[0].objects.push_back(obj(aligned(500, 10, 40, 100)));
  return {frames, dets};
}

}  // namespace

TEST(FilterReasonable, Examples) {
  const std::vector<FrameAnnotations> frames{
      {"a",
       {obj(aligned(0, 0, 20, 56)), obj(aligned(0, 0, 20, 40)), obj(aligned(0, 0, 40, 100), Occlusion::Heavy),
        obj(aligned(0, 0, 20, 55)), obj(aligned(0, 0, 40, 100), Occlusion::Partial),
        obj(aligned(0, 0, 40, 100), Occlusion::None, true)}}};
  const auto out = filter_reasonable(frames);
  ASSERT_EQ(out[0].objects.size(), 6u);
  EXPECT_FALSE(out[0].objects[0].ignore);
  EXPECT_TRUE(out[0].objects[1].ignore);
  EXPECT_TRUE(out[0].objects[2].ignore);
  EXPECT_TRUE(out[0].objects[3].ignore);
  EXPECT_FALSE(out[0].objects[4].ignore);
  EXPECT_TRUE(out[0].objects[5].ignore);
}

TEST(FilterReasonable, HeightFromConfiguredModality) {
  const std::vector<FrameAnnotations> frames{{"a", {obj({Box(0, 0, 20, 40), Box(0, 0, 20, 80)})}}};
  EXPECT_FALSE(filter_reasonable(frames)[0].objects[0].ignore);
  EXPECT_TRUE(filter_reasonable(frames, {55.0, Modality::Visible})[0].objects[0].ignore);
}

TEST(MatchFrame, CleanHit) {
  const std::vector<GtObject> gts{obj(aligned(0, 0, 100, 100))};
  const std::vector<Detection> dets{{aligned(0, 0, 80, 100), 0.9}};
  const auto m = match_frame(dets, gts, OverlapVariant::MultiModal, 0.5);
  EXPECT_EQ(m.detections[0].outcome, DetectionOutcome::TruePositive);
  EXPECT_EQ(m.detections[0].gt, 0u);
  EXPECT_TRUE(m.gt_detected[0]);
}

TEST(MatchFrame, BelowThreshold) {
  const std::vector<GtObject> gts{obj(aligned(0, 0, 100, 100))};
  const std::vector<Detection> dets{{aligned(0, 0, 45, 100), 0.9}};
  const auto m = match_frame(dets, gts, OverlapVariant::MultiModal, 0.5);
  EXPECT_EQ(m.detections[0].outcome, DetectionOutcome::FalsePositive);
  EXPECT_FALSE(m.gt_detected[0]);
}

TEST(MatchFrame, OneToOneGreedy) {
  const std::vector<GtObject> gts{obj(aligned(0, 0, 100, 100))};
  // Input order reversed to check score ordering.
  const std::vector<Detection> dets{{aligned(0, 0, 90, 100), 0.8}, {aligned(0, 0, 100, 100), 0.9}};
  const auto m = match_frame(dets, gts, OverlapVariant::MultiModal, 0.5);
  EXPECT_EQ(m.detections[1].outcome, DetectionOutcome::TruePositive);
  EXPECT_EQ(m.detections[0].outcome, DetectionOutcome::FalsePositive);

  std::vector<std::vector<double>> ov{{0.9}, {1.0}};
  EXPECT_EQ(oracle::max_matching(ov, 0.5), 1);
}

TEST(MatchFrame, IgnoreRegionsAbsorb) {
  const std::vector<GtObject> gts{obj(aligned(0, 0, 100, 100), Occlusion::None, true)};
  const std::vector<Detection> dets{{aligned(0, 0, 100, 100), 0.9}, {aligned(0, 0, 90, 100), 0.8},
                                    {aligned(300, 0, 90, 100), 0.7}};
  const auto m = match_frame(dets, gts, OverlapVariant::MultiModal, 0.5);
  EXPECT_EQ(m.detections[0].outcome, DetectionOutcome::Ignored);
  EXPECT_EQ(m.detections[1].outcome, DetectionOutcome::Ignored);
  EXPECT_EQ(m.detections[2].outcome, DetectionOutcome::FalsePositive);
  EXPECT_EQ(m.evaluable_gts, 0u);
}

TEST(MatchFrame, PrefersEvaluableOverIgnore) {
  const std::vector<GtObject> gts{obj(aligned(0, 0, 100, 100), Occlusion::None, true),
                                  obj(aligned(10, 0, 100, 100))};
  const std::vector<Detection> dets{{aligned(0, 0, 100, 100), 0.9}};
  const auto m = match_frame(dets, gts, OverlapVariant::MultiModal, 0.5);
  EXPECT_EQ(m.detections[0].outcome, DetectionOutcome::TruePositive);
  EXPECT_EQ(m.detections[0].gt, 1u);
}

TEST(MatchFrame, GreedyAgreesWithOptimalOnSmallInstances) {
  // Document where greedy and optimal matching coincide: well-separated objects.
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<int> jitter(-6, 6), nd(1, 3), q(1, 9);
  int agree = 0, total = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<GtObject> gts;
    std::vector<Detection> dets;
    for (int g = 0; g < 3; ++g) gts.push_back(obj(aligned(100.0 * g, 0, 40, 80)));
    for (int g = 0; g < 3; ++g) {
      for (int k = nd(rng) - 1; k > 0; --k) {
        dets.push_back(Detection{aligned(100.0 * g + jitter(rng), jitter(rng), 40, 80), q(rng) / 10.0});
      }
    }
    if (dets.empty() || dets.size() > 6) continue;
    const auto m = match_frame(dets, gts, OverlapVariant::MultiModal, 0.5);
    const int greedy = static_cast<int>(std::count_if(m.detections.begin(), m.detections.end(), [](auto& d) {
      return d.outcome == DetectionOutcome::TruePositive;
    }));
    std::vector<std::vector<double>> ov(dets.size(), std::vector<double>(gts.size()));
    for (std::size_t d = 0; d < dets.size(); ++d) {
      for (std::size_t g = 0; g < gts.size(); ++g) ov[d][g] = iou_multimodal(gts[g].pair, dets[d].pair);
    }
    agree += greedy == oracle::max_matching(ov, 0.5);
    ++total;
  }
  EXPECT_EQ(agree, total);
}

TEST(MissRateCurve, PerfectAndEmpty) {
  const std::vector<ScoredOutcome> perfect{{1.0, DetectionOutcome::TruePositive},
                                           {1.0, DetectionOutcome::TruePositive}};
  const auto c = miss_rate_curve(perfect, 2, 2);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].fppi, 0.0);
  EXPECT_EQ(c[0].miss_rate, 0.0);

  const auto e = miss_rate_curve({}, 3, 2);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].fppi, 0.0);
  EXPECT_EQ(e[0].miss_rate, 1.0);
  EXPECT_EQ(log_average_miss_rate(e), 1.0);
  EXPECT_EQ(log_average_miss_rate(c), 0.0);

  EXPECT_THROW(miss_rate_curve(perfect, 0, 2), EvaluationError);
}

TEST(MissRateCurve, HandEnumeratedFixture) {
  const auto report = evaluate(fixture::four_frame_gt(), fixture::four_frame_dets());
  EXPECT_EQ(report.num_frames, 4u);
  EXPECT_EQ(report.evaluable_gts, 4u);
  for (auto [thresh, rows, mr] : {std::tuple{0.5, &fixture::kCurveAt05, fixture::kMrAt05},
                                  std::tuple{0.7, &fixture::kCurveAt07, fixture::kMrAt07}}) {
    for (auto v : {OverlapVariant::Visible, OverlapVariant::Thermal, OverlapVariant::MultiModal}) {
      const auto& e = report.at(v, thresh);
      ASSERT_EQ(e.curve.size(), rows->size());
      for (std::size_t i = 0; i < rows->size(); ++i) {
        EXPECT_EQ(e.curve[i].score_thresh, (*rows)[i].score);
        EXPECT_DOUBLE_EQ(e.curve[i].fppi, (*rows)[i].fppi);
        EXPECT_DOUBLE_EQ(e.curve[i].miss_rate, (*rows)[i].miss);
      }
      EXPECT_NEAR(e.log_average_mr, mr, 1e-12);
    }
  }
  EXPECT_NEAR(fixture::kMrAt05, 0.4629, 5e-5);
}

TEST(LogAverageMissRate, Examples) {
  EXPECT_NEAR(log_average_miss_rate({{1.0, 0.0, 0.37}}), 0.37, 1e-12);
  // Non-monotone synthetic curve: first five references sample 0.25, the last four 1.
  const MissRateCurve c{{0.9, 0.01, 0.25}, {0.8, 0.15, 1.0}};
  const auto s = sample_miss_rates(c);
  EXPECT_EQ(s, (std::array<double, 9>{0.25, 0.25, 0.25, 0.25, 0.25, 1, 1, 1, 1}));
  EXPECT_NEAR(log_average_miss_rate(c), std::pow(0.25, 5.0 / 9.0), 1e-12);
  EXPECT_NEAR(std::pow(0.25, 5.0 / 9.0), 0.4629, 5e-5);
  EXPECT_THROW(log_average_miss_rate({}), std::invalid_argument);
}

TEST(LogAverageMissRate, ReferencesAndStepSampling) {
  const auto refs = reference_fppi();
  EXPECT_DOUBLE_EQ(refs.front(), 0.01);
  EXPECT_DOUBLE_EQ(refs[4], 0.1);
  EXPECT_DOUBLE_EQ(refs.back(), 1.0);
  for (std::size_t k = 1; k < refs.size(); ++k) EXPECT_NEAR(std::log10(refs[k] / refs[k - 1]), 0.25, 1e-12);

  // Smallest achieved FPPI above every reference: all samples take its value.
  const MissRateCurve high{{0.9, 2.0, 0.6}, {0.8, 2.0, 0.4}, {0.7, 3.0, 0.3}};
  for (double m : sample_miss_rates(high)) EXPECT_EQ(m, 0.4);
}

TEST(LogAverageMissRate, FloorAndZeros) {
  const MissRateCurve c{{0.9, 0.0, 0.5}, {0.8, 0.5, 0.0}};
  EXPECT_EQ(log_average_miss_rate(c), 0.0);
  const double floored = log_average_miss_rate(c, 1e-4);
  EXPECT_NEAR(floored, std::exp((7 * std::log(0.5) + 2 * std::log(1e-4)) / 9), 1e-12);
}

TEST(Evaluate, GtAsDetectionsIsPerfect) {
  const auto gt = fixture::four_frame_gt();
  const auto report = evaluate(gt, gt_as_detections(gt));
  ASSERT_EQ(report.entries.size(), 6u);
  for (const auto& e : report.entries) EXPECT_EQ(e.log_average_mr, 0.0);
}

TEST(Evaluate, EmptyDetectionsMissEverything) {
  const auto report = evaluate(fixture::four_frame_gt(), {});
  for (const auto& e : report.entries) EXPECT_EQ(e.log_average_mr, 1.0);
}

TEST(Evaluate, ThermalShiftDegradesThermalAndMultimodal) {
  std::vector<FrameAnnotations> gt;
  std::vector<FrameDetections> dets;
  for (int f = 0; f < 5; ++f) {
    FrameAnnotations fa{"s" + std::to_string(f), {}};
    FrameDetections fd{fa.frame_id, {}};
    for (int k = 0; k < 3; ++k) {
      const Box v(40.0 + 150 * k, 30.0 + 10 * f, 30, 80);
      fa.objects.push_back(obj({v, Box(v.x() + 20, v.y(), v.w(), v.h())}));
      fd.detections.push_back(Detection{{v, v}, 1.0});
    }
    gt.push_back(fa);
    dets.push_back(fd);
  }
  EXPECT_DOUBLE_EQ(oracle::raster_iou(gt[0].objects[0].pair.thermal, dets[0].detections[0].pair.thermal), 0.2);
  const auto r = evaluate(gt, dets);
  for (double t : {0.5, 0.7}) {
    EXPECT_EQ(r.at(OverlapVariant::Visible, t).log_average_mr, 0.0);
    EXPECT_EQ(r.at(OverlapVariant::Thermal, t).log_average_mr, 1.0);
  }
  EXPECT_EQ(r.at(OverlapVariant::MultiModal, 0.7).log_average_mr, 1.0);
  EXPECT_GT(r.at(OverlapVariant::MultiModal, 0.7).log_average_mr, r.at(OverlapVariant::Visible, 0.7).log_average_mr);
}

TEST(Evaluate, UnknownFrameIdsAreListed) {
  std::vector<FrameDetections> dets{{"nope", {}}, {"f1", {}}, {"zzz", {}}};
  try {
    evaluate(fixture::four_frame_gt(), dets);
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("nope"), std::string::npos);
    EXPECT_NE(msg.find("zzz"), std::string::npos);
  }
}

TEST(Evaluate, DuplicateFramesRejected) {
  auto gt = fixture::four_frame_gt();
  gt.push_back(gt.front());
  EXPECT_THROW(evaluate(gt, {}), EvaluationError);
  std::vector<FrameDetections> dets{{"f1", {}}, {"f1", {}}};
  EXPECT_THROW(evaluate(fixture::four_frame_gt(), dets), EvaluationError);
}

TEST(Evaluate, NoEvaluableObjects) {
  const std::vector<FrameAnnotations> gt{{"a", {obj(aligned(0, 0, 10, 20))}}};
  EXPECT_THROW(evaluate(gt, {}), EvaluationError);
}

TEST(Evaluate, ThreadCountDoesNotMatter) {
  std::mt19937_64 rng(52);
  const auto [gt, dets] = random_scene(rng);
  EvalConfig one, many;
  many.threads = 4;
  const auto a = evaluate(gt, dets, one);
  const auto b = evaluate(gt, dets, many);
  std::ostringstream sa, sb;
  write_curve_csv(a, sa);
  write_curve_csv(b, sb);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(EvaluationProperties, CountsMonotonicityReordering) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    auto [gt, dets] = random_scene(rng);
    const auto report = evaluate(gt, dets);
    for (const auto& e : report.entries) {
      for (std::size_t i = 0; i < e.curve.size(); ++i) {
        const auto& p = e.curve[i];
        EXPECT_EQ(p.tp + p.fn, report.evaluable_gts);
        EXPECT_GE(p.miss_rate, 0.0);
        EXPECT_LE(p.miss_rate, 1.0);
        if (i > 0) {
          EXPECT_LT(p.score_thresh, e.curve[i - 1].score_thresh);
          EXPECT_GE(p.fppi, e.curve[i - 1].fppi);
          EXPECT_LE(p.miss_rate, e.curve[i - 1].miss_rate);
        }
      }
    }

    auto gt2 = gt;
    auto dets2 = dets;
    std::shuffle(gt2.begin(), gt2.end(), rng);
    std::shuffle(dets2.begin(), dets2.end(), rng);
    for (auto& fd : dets2) std::shuffle(fd.detections.begin(), fd.detections.end(), rng);
    const auto shuffled = evaluate(gt2, dets2);
    for (std::size_t k = 0; k < report.entries.size(); ++k) {
      EXPECT_EQ(report.entries[k].log_average_mr, shuffled.entries[k].log_average_mr);
    }
  }
}

TEST(EvaluationProperties, LowScoreFalsePositive) {
  std::mt19937_64 rng(54);
  for (int trial = 0; trial < 100; ++trial) {
    auto [gt, dets] = random_scene(rng);
    const auto before = evaluate(gt, dets);
    const Box far(5000, 5000, 30, 60);
    dets[0].detections.push_back(Detection{{far, far}, 0.01});
    const auto after = evaluate(gt, dets);
    for (std::size_t k = 0; k < before.entries.size(); ++k) {
      const auto& b = before.entries[k].curve;
      const auto& a = after.entries[k].curve;
      for (const auto& p : b) {
        if (!(p.score_thresh > 0.01) || std::isinf(p.score_thresh)) continue;
        const auto it = std::find_if(a.begin(), a.end(), [&](auto& q) { return q.score_thresh == p.score_thresh; });
        ASSERT_NE(it, a.end());
        EXPECT_EQ(it->miss_rate, p.miss_rate);
        EXPECT_EQ(it->fppi, p.fppi);
      }
      EXPECT_GE(a.back().fppi, b.back().fppi);
    }
  }
}

TEST(EvaluationProperties, AlignedDataGivesEqualVariants) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    auto [gt, dets] = random_scene(rng);
    for (auto& f : gt) {
      for (auto& o : f.objects) o.pair.thermal = o.pair.visible;
    }
    for (auto& f : dets) {
      for (auto& d : f.detections) d.pair.thermal = d.pair.visible;
    }
    const auto r = evaluate(gt, dets);
    for (double t : {0.5, 0.7}) {
      EXPECT_EQ(r.at(OverlapVariant::Visible, t).log_average_mr, r.at(OverlapVariant::Thermal, t).log_average_mr);
      EXPECT_EQ(r.at(OverlapVariant::Visible, t).log_average_mr,
                r.at(OverlapVariant::MultiModal, t).log_average_mr);
    }
  }
}

TEST(SubstituteSingleModality, Examples) {
  const Box b(3, 4, 5, 6);
  const Detection d = substitute_single_modality(SingleBoxDetection{b, 0.7});
  EXPECT_EQ(d.pair.visible, b);
  EXPECT_EQ(d.pair.thermal, b);
  EXPECT_EQ(d.score, 0.7);
  EXPECT_TRUE(substitute_single_modality("x", {}).detections.empty());
  const Box g(4, 4, 5, 6);
  EXPECT_EQ(iou_multimodal(PairedBox{g, g}, d.pair), iou(g, b));
}

TEST(CurveCsv, Format) {
  const auto report = evaluate(fixture::four_frame_gt(), fixture::four_frame_dets(),
                               EvalConfig{{0.5}, {OverlapVariant::MultiModal}});
  std::ostringstream out;
  write_curve_csv(report, out);
  EXPECT_EQ(out.str(),
            "variant,iou_thresh,score_thresh,fppi,miss_rate\n"
            "M,0.5,0.9,0,0.75\n"
            "M,0.5,0.8,0,0.5\n"
            "M,0.5,0.7,0.25,0.5\n"
            "M,0.5,0.6,0.5,0.5\n"
            "M,0.5,0.5,0.75,0.5\n"
            "M,0.5,0.45,0.75,0.25\n"
            "M,0.5,0.4,1,0.25\n");
}
