#include "pairbox/toolkit/config.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "pairbox/toolkit/io.hpp"

namespace pairbox {

namespace {

void reject_unknown(const nlohmann::json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw std::invalid_argument(where + key + ": unknown field");
  }
}

}  // namespace

void RunConfig::validate(double image_width) const {
  if (iou_thresholds.empty()) throw std::invalid_argument("at least one IoU threshold is required");
  for (double t : iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("IoU thresholds must lie in (0, 1]");
  }
  if (variants.empty()) throw std::invalid_argument("at least one metric variant is required");
  for (double dx : shift_sweep) {
    if (!std::isfinite(dx) || std::abs(dx) >= image_width) {
      throw std::invalid_argument("shift values must satisfy |dx| < image width");
    }
  }
  assignment.validate();
  for (double t : {proposal_nms_thresh, detection_nms_thresh}) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("NMS thresholds must lie in [0, 1]");
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw io::ParseError(path.string(), 1, std::string("invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  try {
    reject_unknown(j, "", {"iou_thresholds", "variants", "shift_sweep", "proposal_nms_thresh",
                           "detection_nms_thresh", "assignment"});
    if (j.contains("iou_thresholds")) cfg.iou_thresholds = j.at("iou_thresholds").get<std::vector<double>>();
    if (j.contains("variants")) {
      cfg.variants.clear();
      for (const auto& v : j.at("variants")) cfg.variants.push_back(parse_overlap_variant(v.get<std::string>()));
    }
    if (j.contains("shift_sweep")) cfg.shift_sweep = j.at("shift_sweep").get<std::vector<double>>();
    if (j.contains("proposal_nms_thresh")) cfg.proposal_nms_thresh = j.at("proposal_nms_thresh").get<double>();
    if (j.contains("detection_nms_thresh")) cfg.detection_nms_thresh = j.at("detection_nms_thresh").get<double>();
    if (j.contains("assignment")) {
      const auto& a = j.at("assignment");
      reject_unknown(a, "assignment.",
                     {"rpn_pos_thresh", "rpn_neg_thresh", "det_pos_thresh", "det_neg_lo", "det_neg_hi", "rpn_batch",
                      "rpn_pos_fraction", "det_batch", "det_pos_fraction", "force_best_anchor_per_gt"});
      AssignmentConfig& c = cfg.assignment;
      c.rpn_pos_thresh = a.value("rpn_pos_thresh", c.rpn_pos_thresh);
      c.rpn_neg_thresh = a.value("rpn_neg_thresh", c.rpn_neg_thresh);
      c.det_pos_thresh = a.value("det_pos_thresh", c.det_pos_thresh);
      c.det_neg_lo = a.value("det_neg_lo", c.det_neg_lo);
      c.det_neg_hi = a.value("det_neg_hi", c.det_neg_hi);
      c.rpn_batch = a.value("rpn_batch", c.rpn_batch);
      c.rpn_pos_fraction = a.value("rpn_pos_fraction", c.rpn_pos_fraction);
      c.det_batch = a.value("det_batch", c.det_batch);
      c.det_pos_fraction = a.value("det_pos_fraction", c.det_pos_fraction);
      c.force_best_anchor_per_gt = a.value("force_best_anchor_per_gt", c.force_best_anchor_per_gt);
    }
  } catch (const nlohmann::json::exception& e) {
    throw io::ParseError(path.string(), 1, e.what());
  } catch (const std::invalid_argument& e) {
    throw io::ParseError(path.string(), 1, e.what());
  }
  return cfg;
}

}  // namespace pairbox
