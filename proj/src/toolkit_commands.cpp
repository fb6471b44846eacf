#include "pairbox/toolkit/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "pairbox/pairnms.hpp"
#include "pairbox/regression.hpp"
#include "pairbox/sampling.hpp"
#include "pairbox/toolkit/io.hpp"

namespace pairbox::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

EvalConfig eval_config(const RunConfig& run) {
  EvalConfig cfg;
  cfg.iou_thresholds = run.iou_thresholds;
  cfg.variants = run.variants;
  cfg.threads = run.threads;
  return cfg;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string expand_pattern(std::string pattern, double dx) {
  const std::string key = "{dx}";
  const std::string value = format_g9(dx);
  for (auto pos = pattern.find(key); pos != std::string::npos; pos = pattern.find(key, pos + value.size())) {
    pattern.replace(pos, key.size(), value);
  }
  return pattern;
}

}  // namespace

std::optional<OutputFormat> parse_output_format(std::string_view text) {
  if (text == "table") return OutputFormat::Table;
  if (text == "csv") return OutputFormat::Csv;
  if (text == "svg") return OutputFormat::Svg;
  return std::nullopt;
}

// ---- evaluate --------------------------------------------------------------

void write_mr_table(const EvalReport& report, std::ostream& out) {
  out << "# frames: " << report.num_frames << ", evaluable objects: " << report.evaluable_gts << '\n';
  out << "metric  iou_thresh  MR\n";
  for (const auto& e : report.entries) {
    out << pad("MR^" + std::string(to_string(e.variant)), 8) << pad(fixed(e.iou_thresh, 2), 12)
        << fixed(e.log_average_mr, 4) << '\n';
  }
}

void write_curve_svg(const EvalReport& report, std::ostream& out) {
  constexpr double kWidth = 640, kHeight = 480, kLeft = 60, kRight = 20, kTop = 20, kBottom = 50;
  constexpr double kLogMin = -3.0, kLogMax = 1.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double fppi) {
    const double lx = std::clamp(std::log10(std::max(fppi, 1e-3)), kLogMin, kLogMax);
    return kLeft + (lx - kLogMin) / (kLogMax - kLogMin) * plot_w;
  };
  auto py = [&](double miss) { return kTop + (1.0 - std::clamp(miss, 0.0, 1.0)) * plot_h; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double ref : reference_fppi()) {
    const std::string x = fixed(px(ref), 2);
    out << "<line x1=\"" << x << "\" y1=\"" << kTop << "\" x2=\"" << x << "\" y2=\"" << kTop + plot_h
        << "\" stroke=\"#cccccc\"/>\n";
  }
  for (int d = -3; d <= 1; ++d) {
    out << "<text x=\"" << fixed(px(std::pow(10.0, d)), 2) << "\" y=\"" << kHeight - 30
        << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double m = 0.25 * k;
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(py(m) + 4, 2) << "\" text-anchor=\"end\">"
        << fixed(m, 2) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 8
      << "\" text-anchor=\"middle\">false positives per image</text>\n";
  out << "<text x=\"14\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 14 " << kTop + plot_h / 2
      << ")\" text-anchor=\"middle\">miss rate</text>\n";

  const std::map<OverlapVariant, const char*> colors{{OverlapVariant::Visible, "#1f77b4"},
                                                     {OverlapVariant::Thermal, "#2ca02c"},
                                                     {OverlapVariant::MultiModal, "#d62728"}};
  int legend = 0;
  for (const auto& e : report.entries) {
    const bool dashed = e.iou_thresh > 0.6;
    out << "<polyline fill=\"none\" stroke=\"" << colors.at(e.variant) << "\""
        << (dashed ? " stroke-dasharray=\"6 3\"" : "") << " points=\"";
    for (std::size_t i = 0; i < e.curve.size(); ++i) {
      out << (i ? " " : "") << fixed(px(e.curve[i].fppi), 2) << ',' << fixed(py(e.curve[i].miss_rate), 2);
    }
    out << "\"/>\n";
    out << "<text x=\"" << kLeft + plot_w - 150 << "\" y=\"" << kTop + 16 + 14 * legend++ << "\" fill=\""
        << colors.at(e.variant) << "\">MR^" << to_string(e.variant) << "@" << fixed(e.iou_thresh, 2) << " = "
        << fixed(e.log_average_mr, 4) << "</text>\n";
  }
  out << "</svg>\n";
}

EvalReport cmd_evaluate(const EvaluateOptions& options, std::ostream& out) {
  const io::Dataset dataset = io::read_dataset(options.gt_path);
  const auto detections = io::read_detections(options.det_path);
  options.run.validate(dataset.metadata.image_width);
  EvalReport report = evaluate(dataset.frames, detections, eval_config(options.run));
  switch (options.format) {
    case OutputFormat::Table:
      write_mr_table(report, out);
      break;
    case OutputFormat::Csv:
      write_curve_csv(report, out);
      break;
    case OutputFormat::Svg:
      write_curve_svg(report, out);
      break;
  }
  if (options.run.curve_csv) {
    auto csv = io::open_output(*options.run.curve_csv);
    write_curve_csv(report, csv);
  }
  return report;
}

// ---- shift-sweep -----------------------------------------------------------

double SweepResult::mr(double dx, std::string_view detector, OverlapVariant variant, double iou_thresh) const {
  for (const auto& c : cells) {
    if (c.dx == dx && c.detector == detector && c.variant == variant && c.iou_thresh == iou_thresh) {
      return c.log_average_mr;
    }
  }
  throw std::out_of_range("no sweep cell for detector " + std::string(detector) + " at dx " + format_g9(dx));
}

SweepResult cmd_shift_sweep(const ShiftSweepOptions& options, std::ostream& out) {
  const io::Dataset dataset = io::read_dataset(options.gt_path);
  options.run.validate(dataset.metadata.image_width);
  if (options.detectors.empty() && !options.det_pattern) {
    throw std::invalid_argument("shift-sweep needs a mock detector or a detection file pattern");
  }

  SweepResult result;
  if (options.det_pattern) {
    result.detectors.push_back("loaded");
  }
  std::map<std::string, int> seen;
  for (const auto& spec : options.detectors) {
    std::string name(to_string(spec.mode));
    if (seen[name]++ > 0) name += "#" + std::to_string(seen[name]);
    result.detectors.push_back(name);
  }

  const EvalConfig eval_cfg = eval_config(options.run);
  for (double dx : options.run.shift_sweep) {
    const auto shifted = apply_shift(dataset.frames, ShiftSpec{dx, dataset.metadata.image_width});
    std::size_t column = 0;
    auto record = [&](const std::string& name, const std::vector<FrameDetections>& dets) {
      const EvalReport report = evaluate(shifted, dets, eval_cfg);
      for (const auto& e : report.entries) {
        result.cells.push_back(SweepCell{dx, name, e.variant, e.iou_thresh, e.log_average_mr});
      }
    };
    if (options.det_pattern) {
      record(result.detectors[column++], io::read_detections(expand_pattern(*options.det_pattern, dx)));
    }
    for (const auto& spec : options.detectors) {
      record(result.detectors[column++], mock_detect(shifted, spec, options.run.threads));
    }
  }

  if (options.format == OutputFormat::Csv) {
    out << "dx,detector,variant,iou_thresh,mr\n";
    for (const auto& c : result.cells) {
      out << format_g9(c.dx) << ',' << c.detector << ',' << to_string(c.variant) << ','
          << format_g9(c.iou_thresh) << ',' << format_g9(c.log_average_mr) << '\n';
    }
    return result;
  }
  if (options.format == OutputFormat::Svg) {
    throw std::invalid_argument("shift-sweep supports --format table or csv");
  }
  // Table keyed by dx, one column per detector x variant x threshold.
  std::vector<std::string> header{"dx"};
  const std::size_t per_row = result.detectors.size() * options.run.variants.size() *
                              options.run.iou_thresholds.size();
  for (const auto& det : result.detectors) {
    for (OverlapVariant v : options.run.variants) {
      for (double t : options.run.iou_thresholds) {
        header.push_back(det + ":MR^" + std::string(to_string(v)) + "@" + fixed(t, 2));
      }
    }
  }
  std::size_t width = 8;
  for (const auto& h : header) width = std::max(width, h.size() + 2);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i + 1 < header.size() ? pad(header[i], width) : header[i]);
  out << '\n';
  for (std::size_t row = 0; row * per_row < result.cells.size(); ++row) {
    const auto first = result.cells.begin() + static_cast<std::ptrdiff_t>(row * per_row);
    out << pad(format_g9(first->dx), width);
    for (std::size_t k = 0; k < per_row; ++k) {
      const std::string cell = fixed((first + static_cast<std::ptrdiff_t>(k))->log_average_mr, 4);
      out << (k + 1 < per_row ? pad(cell, width) : cell);
    }
    out << '\n';
  }
  return result;
}

// ---- generate --------------------------------------------------------------

void cmd_generate(const GenerateOptions& options, std::ostream& out) {
  io::Dataset dataset;
  dataset.metadata.name = options.name;
  dataset.metadata.image_width = options.scene.image_width;
  dataset.metadata.image_height = options.scene.image_height;
  dataset.frames = generate_scene(options.scene, options.threads);
  io::write_dataset(dataset, out);
  if (options.detector) {
    if (!options.det_out) throw std::invalid_argument("generate: a mock detector needs a detection output path");
    io::write_detections(mock_detect(dataset.frames, *options.detector, options.threads), *options.det_out);
  }
}

// ---- nms -------------------------------------------------------------------

void cmd_nms(const NmsOptions& options, std::ostream& out) {
  auto frames = io::read_detections(options.det_path);
  for (auto& frame : frames) frame.detections = paired_nms(frame.detections, options.iou_thresh, options.max_keep);
  io::write_detections(frames, out);
}

// ---- assign ----------------------------------------------------------------

std::vector<PairedBox> generate_anchors(double image_width, double image_height, const AnchorGrid& grid) {
  if (!(grid.stride > 0.0) || !(grid.aspect_ratio > 0.0)) {
    throw std::invalid_argument("anchor grid: stride and aspect ratio must be positive");
  }
  std::vector<PairedBox> anchors;
  for (double cy = grid.stride / 2; cy < image_height; cy += grid.stride) {
    for (double cx = grid.stride / 2; cx < image_width; cx += grid.stride) {
      for (double h : grid.heights) {
        const double w = grid.aspect_ratio * h;
        const double x = cx - w / 2;
        const double y = cy - h / 2;
        if (x < 0.0 || y < 0.0 || x + w > image_width || y + h > image_height) continue;
        const Box b(x, y, w, h);
        anchors.push_back(PairedBox{b, b});
      }
    }
  }
  return anchors;
}

void cmd_assign(const AssignOptions& options, std::ostream& out) {
  const io::Dataset dataset = io::read_dataset(options.gt_path);
  options.assignment.validate();

  std::map<std::string, std::vector<PairedBox>> candidates;
  std::vector<PairedBox> grid_anchors;
  if (options.candidates_path) {
    for (auto& fc : io::read_candidates(*options.candidates_path)) {
      candidates.emplace(fc.frame_id, std::move(fc.boxes));
    }
  } else {
    grid_anchors = generate_anchors(dataset.metadata.image_width, dataset.metadata.image_height, options.grid);
  }

  out << "frame,candidate,label,gt,max_ioum,selected\n";
  for (std::size_t f = 0; f < dataset.frames.size(); ++f) {
    const auto& frame = dataset.frames[f];
    std::vector<PairedBox> gts;
    for (const auto& obj : frame.objects) gts.push_back(obj.pair);
    const std::vector<PairedBox>* boxes = &grid_anchors;
    if (options.candidates_path) {
      const auto it = candidates.find(frame.frame_id);
      if (it == candidates.end()) continue;
      boxes = &it->second;
    }
    const AssignmentResult result = options.stage == Stage::Rpn
                                        ? assign_rpn(*boxes, gts, options.assignment)
                                        : assign_detector(*boxes, gts, options.assignment);
    std::vector<bool> selected(boxes->size(), false);
    if (options.sample_seed && !boxes->empty()) {
      std::mt19937_64 rng = substream(*options.sample_seed, 2, f);
      const bool rpn = options.stage == Stage::Rpn;
      const auto picks = sample_minibatch(result, rpn ? options.assignment.rpn_batch : options.assignment.det_batch,
                                          rpn ? options.assignment.rpn_pos_fraction
                                              : options.assignment.det_pos_fraction,
                                          rng);
      for (std::size_t i : picks) selected[i] = true;
    }
    for (std::size_t i = 0; i < result.candidates.size(); ++i) {
      const auto& c = result.candidates[i];
      if (options.skip_ignored && c.label == SampleLabel::Ignore && !selected[i]) continue;
      out << frame.frame_id << ',' << i << ',' << to_string(c.label) << ','
          << (c.matched_gt ? std::to_string(*c.matched_gt) : std::string()) << ',' << format_g9(c.max_ioum)
          << ',' << (selected[i] ? 1 : 0) << '\n';
    }
  }
}

// ---- losses ----------------------------------------------------------------

namespace {

BoxOffsets offsets_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(where + "." + key + ": missing");
  const auto v = it->get<std::vector<double>>();
  if (v.size() != 4) throw std::invalid_argument(where + "." + key + ": expected 4 offsets");
  return BoxOffsets{v[0], v[1], v[2], v[3]};
}

double max_dev_smooth_l1(const BoxOffsets& pred, const BoxOffsets& target, double eps) {
  const auto analytic = smooth_l1(pred, target).grad.as_array();
  double dev = 0.0;
  for (std::size_t d = 0; d < 4; ++d) {
    auto up = pred.as_array();
    auto down = pred.as_array();
    up[d] += eps;
    down[d] -= eps;
    const double fd = (smooth_l1(BoxOffsets::from_array(up), target).loss -
                       smooth_l1(BoxOffsets::from_array(down), target).loss) /
                      (2 * eps);
    dev = std::max(dev, std::abs(fd - analytic[d]));
  }
  return dev;
}

double max_dev_cross_entropy(std::vector<double> logits, std::size_t label, double eps) {
  const auto analytic = cross_entropy(logits, label).grad;
  double dev = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double orig = logits[k];
    logits[k] = orig + eps;
    const double up = cross_entropy(logits, label).loss;
    logits[k] = orig - eps;
    const double down = cross_entropy(logits, label).loss;
    logits[k] = orig;
    dev = std::max(dev, std::abs((up - down) / (2 * eps) - analytic[k]));
  }
  return dev;
}

ordered_json terms_json(const LossTerms& t) {
  ordered_json j;
  j["classification"] = t.classification;
  j["regression_visible"] = t.regression_visible;
  j["regression_thermal"] = t.regression_thermal;
  j["total"] = t.total();
  return j;
}

}  // namespace

void cmd_losses(const LossesOptions& options, std::ostream& out) {
  auto in = io::open_input(options.sample_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw io::ParseError(options.sample_path.string(), 1, std::string("invalid JSON: ") + e.what());
  }

  std::vector<RpnSample> rpn;
  std::vector<DetectorSample> det;
  double lambda = 1.0;
  LossConfig cfg;
  try {
    lambda = doc.value("lambda", 1.0);
    for (const auto& s : doc.value("rpn", nlohmann::json::array())) {
      const std::string where = "rpn[" + std::to_string(rpn.size()) + "]";
      const std::string label = s.at("label").get<std::string>();
      const double logit = s.at("logit").get<double>();
      const BoxOffsets pv = offsets_field(s, "pred_v", where);
      const BoxOffsets pt = offsets_field(s, "pred_t", where);
      if (label == "positive") {
        rpn.push_back(RpnSample::positive(logit, pv, pt, offsets_field(s, "target_v", where),
                                          offsets_field(s, "target_t", where)));
      } else if (label == "negative") {
        rpn.push_back(RpnSample::negative(logit, pv, pt));
      } else {
        throw std::invalid_argument(where + ".label: expected positive or negative");
      }
    }
    for (const auto& s : doc.value("detector", nlohmann::json::array())) {
      const std::string where = "detector[" + std::to_string(det.size()) + "]";
      DetectorSample d;
      d.class_scores = s.at("scores").get<std::vector<double>>();
      d.true_class = s.at("class").get<std::size_t>();
      d.pred_v = offsets_field(s, "pred_v", where);
      d.pred_t = offsets_field(s, "pred_t", where);
      if (s.contains("target_v")) d.target_v = offsets_field(s, "target_v", where);
      if (s.contains("target_t")) d.target_t = offsets_field(s, "target_t", where);
      det.push_back(std::move(d));
    }
    cfg.lambda = lambda;
    cfg.n_cls = doc.value("n_cls", rpn.size());
    cfg.n_reg = doc.value("n_reg", std::max<std::size_t>(rpn.size(), 1));
  } catch (const nlohmann::json::exception& e) {
    throw io::ParseError(options.sample_path.string(), 1, e.what());
  }

  ordered_json report;
  report["lambda"] = lambda;
  if (!rpn.empty()) {
    ordered_json r = terms_json(rpn_loss_terms(rpn, cfg));
    r["n_cls"] = cfg.n_cls;
    r["n_reg"] = cfg.n_reg;
    report["rpn"] = std::move(r);
  }
  report["detector"] = ordered_json::array();
  for (const auto& d : det) report["detector"].push_back(terms_json(detector_loss_terms(d, lambda)));

  if (options.grad_check) {
    double sl1 = 0.0;
    double ce = 0.0;
    for (const auto& s : rpn) {
      ce = std::max(ce, max_dev_cross_entropy({0.0, s.objectness_logit},
                                              s.label == AnchorLabel::Positive ? 1 : 0, options.epsilon));
      if (s.target_v) sl1 = std::max(sl1, max_dev_smooth_l1(s.pred_v, *s.target_v, options.epsilon));
      if (s.target_t) sl1 = std::max(sl1, max_dev_smooth_l1(s.pred_t, *s.target_t, options.epsilon));
    }
    for (const auto& d : det) {
      ce = std::max(ce, max_dev_cross_entropy(d.class_scores, d.true_class, options.epsilon));
      if (d.target_v) sl1 = std::max(sl1, max_dev_smooth_l1(d.pred_v, *d.target_v, options.epsilon));
      if (d.target_t) sl1 = std::max(sl1, max_dev_smooth_l1(d.pred_t, *d.target_t, options.epsilon));
    }
    report["grad_check"]["epsilon"] = options.epsilon;
    report["grad_check"]["smooth_l1_max_abs_dev"] = sl1;
    report["grad_check"]["cross_entropy_max_abs_dev"] = ce;
  }
  out << report.dump(2) << '\n';
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const io::IoError*>(&error) != nullptr) return 2;
  if (dynamic_cast<const io::ParseError*>(&error) != nullptr) return 2;
  return 1;
}

}  // namespace pairbox::cli
