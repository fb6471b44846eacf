#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pairbox/evaluation.hpp"
#include "pairbox/simulation.hpp"
#include "pairbox/toolkit/config.hpp"

// Library side of the `pairbox` CLI. Every command writes its primary output to
// `out` and is deterministic given its options; I/O problems surface as
// io::IoError / io::ParseError, evaluation problems as EvaluationError or
// std::invalid_argument.
namespace pairbox::cli {

enum class OutputFormat { Table, Csv, Svg };

std::optional<OutputFormat> parse_output_format(std::string_view text);

// ---- evaluate --------------------------------------------------------------

struct EvaluateOptions {
  std::filesystem::path gt_path;
  std::filesystem::path det_path;
  RunConfig run;
  OutputFormat format = OutputFormat::Table;
};

/// Writes the MR table, curve CSV or SVG to `out`; also writes the curve CSV to
/// run.curve_csv when set.
EvalReport cmd_evaluate(const EvaluateOptions& options, std::ostream& out);

/// One row per (variant, IoU threshold), MR as a ratio with 4 decimals.
void write_mr_table(const EvalReport& report, std::ostream& out);
void write_curve_svg(const EvalReport& report, std::ostream& out);

// ---- shift-sweep -----------------------------------------------------------

struct ShiftSweepOptions {
  std::filesystem::path gt_path;
  std::vector<MockDetectorSpec> detectors;
  /// Loads detections per shift instead of mocking; "{dx}" is replaced with
  /// the shift value (e.g. "dets_{dx}.jsonl" -> "dets_-20.jsonl").
  std::optional<std::string> det_pattern;
  RunConfig run;
  OutputFormat format = OutputFormat::Table;
};

struct SweepCell {
  double dx = 0.0;
  std::string detector;
  OverlapVariant variant = OverlapVariant::MultiModal;
  double iou_thresh = 0.5;
  double log_average_mr = 1.0;
};

struct SweepResult {
  std::vector<std::string> detectors;
  std::vector<SweepCell> cells;  // dx-major, then detector, variant, threshold

  /// Throws std::out_of_range when absent.
  double mr(double dx, std::string_view detector, OverlapVariant variant, double iou_thresh) const;
};

SweepResult cmd_shift_sweep(const ShiftSweepOptions& options, std::ostream& out);

// ---- generate --------------------------------------------------------------

struct GenerateOptions {
  SceneSpec scene;
  std::string name = "synthetic";
  std::optional<MockDetectorSpec> detector;
  std::optional<std::filesystem::path> det_out;
  std::size_t threads = 1;
};

/// Writes the dataset to `out`; mock detections (when requested) go to det_out.
void cmd_generate(const GenerateOptions& options, std::ostream& out);

// ---- nms -------------------------------------------------------------------

struct NmsOptions {
  std::filesystem::path det_path;
  double iou_thresh = kDetectionNmsThresh;
  std::optional<std::size_t> max_keep;
};

void cmd_nms(const NmsOptions& options, std::ostream& out);

// ---- assign ----------------------------------------------------------------

enum class Stage { Rpn, Detector };

/// Identical visible/thermal anchors on a regular grid, kept only when fully
/// inside the image.
struct AnchorGrid {
  double stride = 16.0;
  std::vector<double> heights{40.0, 60.0, 90.0, 135.0, 200.0};
  double aspect_ratio = 0.41;  // width / height
};

std::vector<PairedBox> generate_anchors(double image_width, double image_height, const AnchorGrid& grid);

struct AssignOptions {
  std::filesystem::path gt_path;
  std::optional<std::filesystem::path> candidates_path;
  Stage stage = Stage::Rpn;
  AnchorGrid grid;
  AssignmentConfig assignment;
  std::optional<std::uint64_t> sample_seed;
  bool skip_ignored = false;
};

/// CSV `frame,candidate,label,gt,max_ioum,selected`.
void cmd_assign(const AssignOptions& options, std::ostream& out);

// ---- losses ----------------------------------------------------------------

struct LossesOptions {
  std::filesystem::path sample_path;
  bool grad_check = false;
  double epsilon = 1e-5;
};

/// Evaluates the RPN and detector losses from a JSON sample file and prints a
/// JSON report; with grad_check, also the max |analytic - central difference|.
void cmd_losses(const LossesOptions& options, std::ostream& out);

/// Exit code for an exception escaping a command: 2 for I/O and parse
/// problems, 1 for everything else.
int exit_code_for(const std::exception& error);

}  // namespace pairbox::cli
