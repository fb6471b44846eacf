// pairbox: paired-box evaluation, NMS, assignment and misalignment simulation.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pairbox/parallel.hpp"
#include "pairbox/toolkit/commands.hpp"
#include "pairbox/toolkit/io.hpp"

namespace {

using namespace pairbox;

std::vector<double> split_numbers(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw CLI::ValidationError("not a number: " + item);
    values.push_back(v);
  }
  return values;
}

std::vector<OverlapVariant> split_variants(const std::string& text) {
  std::vector<OverlapVariant> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) values.push_back(parse_overlap_variant(item));
  }
  return values;
}

// Writes through `fn` to --out when given, stdout otherwise.
template <typename Fn>
void with_output(const std::optional<std::filesystem::path>& path, Fn&& fn) {
  if (path) {
    auto out = io::open_output(*path);
    fn(out);
    out.flush();
    if (!out) throw io::IoError("write error on '" + path->string() + "'");
  } else {
    fn(std::cout);
    std::cout.flush();
  }
}

struct CommonFlags {
  std::string iou = "0.5,0.7";
  std::string variants;
  std::string shifts;
  std::string format = "table";
  std::string out;
  std::string config;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_shift) {
  cmd->add_option("--iou-thresh", flags.iou, "Comma-separated IoU thresholds")->capture_default_str();
  cmd->add_option("--variants", flags.variants, "Comma-separated subset of V,T,M");
  if (with_shift) cmd->add_option("--shift", flags.shifts, "Comma-separated thermal shifts in pixels");
  cmd->add_option("--format", flags.format, "table, csv or svg")->capture_default_str();
  cmd->add_option("--out", flags.out, "Output file (default: stdout)");
  cmd->add_option("--config", flags.config, "JSON run configuration");
}

RunConfig build_run_config(const CommonFlags& flags, std::vector<OverlapVariant> default_variants) {
  RunConfig run = flags.config.empty() ? RunConfig{} : load_run_config(flags.config);
  if (flags.config.empty()) run.variants = std::move(default_variants);
  if (!flags.iou.empty()) run.iou_thresholds = split_numbers(flags.iou);
  if (!flags.variants.empty()) run.variants = split_variants(flags.variants);
  if (!flags.shifts.empty()) run.shift_sweep = split_numbers(flags.shifts);
  if (!flags.out.empty()) run.out = flags.out;
  run.threads = threads_from_env();
  return run;
}

cli::OutputFormat format_of(const std::string& text) {
  const auto f = cli::parse_output_format(text);
  if (!f) throw CLI::ValidationError("--format must be table, csv or svg");
  return *f;
}

struct MockFlags {
  std::vector<std::string> modes;
  double center_sigma = 0.0;
  double size_sigma = 0.0;
  double miss_prob = 0.0;
  double fp_per_frame = 0.0;
  double score_noise = 0.02;
  std::uint64_t seed = 0;
};

void add_mock(CLI::App* cmd, MockFlags& flags, bool multiple) {
  auto* mode = cmd->add_option("--mock", flags.modes, multiple ? "Mock detector mode(s): paired, single_box"
                                                                : "Mock detector mode: paired or single_box");
  if (multiple) mode->delimiter(',');
  cmd->add_option("--center-sigma", flags.center_sigma, "Mock center noise (pixels)")->capture_default_str();
  cmd->add_option("--size-sigma", flags.size_sigma, "Mock log-size noise")->capture_default_str();
  cmd->add_option("--miss-prob", flags.miss_prob, "Mock miss probability")->capture_default_str();
  cmd->add_option("--fp-per-frame", flags.fp_per_frame, "Mock Poisson false positives per frame")
      ->capture_default_str();
  cmd->add_option("--score-noise", flags.score_noise, "Mock score noise sigma")->capture_default_str();
  cmd->add_option("--seed", flags.seed, "Random seed")->capture_default_str();
}

std::vector<MockDetectorSpec> mock_specs(const MockFlags& flags, double width, double height) {
  std::vector<MockDetectorSpec> specs;
  for (const auto& m : flags.modes) {
    const auto mode = parse_mock_mode(m);
    if (!mode) throw CLI::ValidationError("--mock must be paired or single_box, got " + m);
    MockDetectorSpec spec;
    spec.mode = *mode;
    spec.center_noise_sigma = flags.center_sigma;
    spec.size_noise_sigma = flags.size_sigma;
    spec.miss_prob = flags.miss_prob;
    spec.fp_per_frame = flags.fp_per_frame;
    spec.score.noise_sigma = flags.score_noise;
    spec.image_width = width;
    spec.image_height = height;
    spec.seed = flags.seed;
    specs.push_back(spec);
  }
  return specs;
}

int run(int argc, char** argv) {
  CLI::App app{"pairbox: multi-modal paired bounding-box toolkit"};
  app.require_subcommand(1);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Log-average miss rate per variant and IoU threshold");
  std::string gt_path, det_path, curve_csv;
  CommonFlags eval_flags;
  eval_cmd->add_option("--gt", gt_path, "Annotation file (JSONL)")->required();
  eval_cmd->add_option("--det", det_path, "Detection file (JSONL)")->required();
  eval_cmd->add_option("--curve-csv", curve_csv, "Also write the curve CSV here");
  add_common(eval_cmd, eval_flags, false);

  // shift-sweep
  auto* sweep_cmd = app.add_subcommand("shift-sweep", "MR^M versus horizontal thermal shift");
  std::string sweep_gt, det_pattern;
  CommonFlags sweep_flags;
  MockFlags sweep_mock;
  sweep_cmd->add_option("--gt", sweep_gt, "Annotation file (JSONL)")->required();
  sweep_cmd->add_option("--det-pattern", det_pattern, "Detection file per shift, {dx} is substituted");
  add_common(sweep_cmd, sweep_flags, true);
  add_mock(sweep_cmd, sweep_mock, true);

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Synthetic paired scene (and optional mock detections)");
  SceneSpec scene;
  double fixed_width = 0.0;
  std::string gen_out, gen_det_out, gen_name = "synthetic";
  MockFlags gen_mock;
  gen_cmd->add_option("--frames", scene.num_frames, "Number of frames")->capture_default_str();
  gen_cmd->add_option("--min-per-frame", scene.min_per_frame)->capture_default_str();
  gen_cmd->add_option("--max-per-frame", scene.max_per_frame)->capture_default_str();
  gen_cmd->add_option("--height-min", scene.height_min)->capture_default_str();
  gen_cmd->add_option("--height-max", scene.height_max)->capture_default_str();
  gen_cmd->add_option("--width", fixed_width, "Fixed box width (default: 0.41 * height)");
  gen_cmd->add_option("--misalign-lo", scene.misalign_lo)->capture_default_str();
  gen_cmd->add_option("--misalign-hi", scene.misalign_hi)->capture_default_str();
  gen_cmd->add_option("--partial-prob", scene.partial_occlusion_prob)->capture_default_str();
  gen_cmd->add_option("--heavy-prob", scene.heavy_occlusion_prob)->capture_default_str();
  gen_cmd->add_option("--image-width", scene.image_width)->capture_default_str();
  gen_cmd->add_option("--image-height", scene.image_height)->capture_default_str();
  gen_cmd->add_option("--name", gen_name)->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Annotation output (default: stdout)");
  gen_cmd->add_option("--det-out", gen_det_out, "Mock detection output");
  add_mock(gen_cmd, gen_mock, false);

  // nms
  auto* nms_cmd = app.add_subcommand("nms", "Paired NMS with the thermal boxes as reference");
  cli::NmsOptions nms;
  std::string nms_det, nms_out;
  std::size_t max_keep = 0;
  nms_cmd->add_option("--det", nms_det, "Detection file (JSONL)")->required();
  nms_cmd->add_option("--iou-thresh", nms.iou_thresh)->capture_default_str();
  nms_cmd->add_option("--max-keep", max_keep, "Keep at most this many per frame");
  nms_cmd->add_option("--out", nms_out, "Output file (default: stdout)");

  // assign
  auto* assign_cmd = app.add_subcommand("assign", "Label anchor or RoI pairs by IoU^M");
  cli::AssignOptions assign;
  std::string assign_gt, assign_candidates, assign_out, stage = "rpn";
  std::uint64_t assign_seed = 0;
  bool force_best = false;
  assign_cmd->add_option("--gt", assign_gt, "Annotation file (JSONL)")->required();
  assign_cmd->add_option("--candidates", assign_candidates, "Candidate pairs (JSONL); default: anchor grid");
  assign_cmd->add_option("--stage", stage, "rpn or detector")->capture_default_str();
  assign_cmd->add_option("--stride", assign.grid.stride, "Anchor grid stride")->capture_default_str();
  auto* seed_opt = assign_cmd->add_option("--seed", assign_seed, "Draw a mini-batch per frame with this seed");
  assign_cmd->add_flag("--force-best", force_best, "Also mark the best anchor of each GT positive");
  assign_cmd->add_flag("--skip-ignored", assign.skip_ignored, "Omit ignored candidates from the output");
  assign_cmd->add_option("--out", assign_out, "Output file (default: stdout)");

  // losses
  auto* loss_cmd = app.add_subcommand("losses", "Two-modality RPN and detector losses from a sample file");
  cli::LossesOptions losses;
  std::string loss_path, loss_out;
  loss_cmd->add_option("--samples", loss_path, "JSON sample file")->required();
  loss_cmd->add_flag("--grad-check", losses.grad_check, "Compare gradients with central differences");
  loss_cmd->add_option("--epsilon", losses.epsilon)->capture_default_str();
  loss_cmd->add_option("--out", loss_out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto opt_path = [](const std::string& s) -> std::optional<std::filesystem::path> {
    if (s.empty()) return std::nullopt;
    return std::filesystem::path(s);
  };

  if (eval_cmd->parsed()) {
    cli::EvaluateOptions options;
    options.gt_path = gt_path;
    options.det_path = det_path;
    options.run = build_run_config(eval_flags, {OverlapVariant::Visible, OverlapVariant::Thermal,
                                                OverlapVariant::MultiModal});
    options.run.curve_csv = opt_path(curve_csv);
    options.format = format_of(eval_flags.format);
    with_output(options.run.out, [&](std::ostream& out) { cli::cmd_evaluate(options, out); });
  } else if (sweep_cmd->parsed()) {
    cli::ShiftSweepOptions options;
    options.gt_path = sweep_gt;
    options.run = build_run_config(sweep_flags, {OverlapVariant::MultiModal});
    options.format = format_of(sweep_flags.format);
    if (!det_pattern.empty()) options.det_pattern = det_pattern;
    const io::Dataset probe = io::read_dataset(sweep_gt);
    options.detectors = mock_specs(sweep_mock, probe.metadata.image_width, probe.metadata.image_height);
    with_output(options.run.out, [&](std::ostream& out) { cli::cmd_shift_sweep(options, out); });
  } else if (gen_cmd->parsed()) {
    cli::GenerateOptions options;
    options.scene = scene;
    options.scene.seed = gen_mock.seed;
    if (fixed_width > 0.0) options.scene.fixed_width = fixed_width;
    options.name = gen_name;
    options.threads = threads_from_env();
    if (gen_mock.modes.size() > 1) throw CLI::ValidationError("generate takes a single --mock mode");
    if (!gen_mock.modes.empty()) {
      options.detector = mock_specs(gen_mock, scene.image_width, scene.image_height).front();
      options.det_out = opt_path(gen_det_out);
    }
    with_output(opt_path(gen_out), [&](std::ostream& out) { cli::cmd_generate(options, out); });
  } else if (nms_cmd->parsed()) {
    nms.det_path = nms_det;
    if (max_keep > 0) nms.max_keep = max_keep;
    with_output(opt_path(nms_out), [&](std::ostream& out) { cli::cmd_nms(nms, out); });
  } else if (assign_cmd->parsed()) {
    assign.gt_path = assign_gt;
    assign.candidates_path = opt_path(assign_candidates);
    if (stage == "rpn") {
      assign.stage = cli::Stage::Rpn;
    } else if (stage == "detector") {
      assign.stage = cli::Stage::Detector;
    } else {
      throw CLI::ValidationError("--stage must be rpn or detector");
    }
    if (seed_opt->count() > 0) assign.sample_seed = assign_seed;
    assign.assignment.force_best_anchor_per_gt = force_best;
    with_output(opt_path(assign_out), [&](std::ostream& out) { cli::cmd_assign(assign, out); });
  } else if (loss_cmd->parsed()) {
    losses.sample_path = loss_path;
    with_output(opt_path(loss_out), [&](std::ostream& out) { cli::cmd_losses(losses, out); });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::Error& e) {
    std::cerr << "pairbox: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "pairbox: " << e.what() << '\n';
    return pairbox::cli::exit_code_for(e);
  }
}
