// acfnet: evaluation, inference, toy training and diagnostics.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "acf/app/data.hpp"
#include "acf/app/eval.hpp"
#include "acf/app/gradcheck.hpp"
#include "acf/app/inference.hpp"
#include "acf/app/train.hpp"
#include "acf/error.hpp"
#include "acf/io/weights.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitCheckFailed = 3;

void print_loss(const acf::nn::LossBreakdown& l) {
  std::printf("bce_r %.6f iou_r %.6f bce_d %.6f iou_d %.6f bce_f %.6f iou_f %.6f total %.6f\n", l.bce_r,
              l.iou_r, l.bce_d, l.iou_d, l.bce_f, l.iou_f, l.total);
}

int print_report(const char* name, const acf::ad::GradCheckReport& r) {
  std::printf("%-24s coords %4zu  max_rel %.3e  failures %zu\n", name, r.entries.size(), r.max_rel_error(),
              r.failures());
  return r.passed() ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RGB-D salient object detection toolkit"};
  app.require_subcommand(1);

  std::string pred_dir, gt_dir, out_json, curves_csv;
  int jobs = 0;
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--pred", pred_dir, "Prediction directory")->required();
  eval->add_option("--gt", gt_dir, "Ground-truth directory")->required();
  eval->add_option("--out", out_json, "JSON report path (default: standard output)");
  eval->add_option("--curves", curves_csv, "PR curve CSV path");
  eval->add_option("--jobs", jobs, "Worker threads (0: automatic)")->check(CLI::NonNegativeNumber);

  std::string rgb, depth, weights, out_map, gates;
  auto* forward = app.add_subcommand("forward", "Predict a saliency map for one RGB-D pair");
  forward->add_option("--rgb", rgb)->required();
  forward->add_option("--depth", depth)->required();
  forward->add_option("--weights", weights)->required();
  forward->add_option("--out", out_map)->required();
  forward->add_option("--gates", gates, "Fixed gates g1r,g2r,g3r,g1d,g2d,g3d");

  std::string data_dir, out_weights;
  int epochs = 500;
  std::uint64_t seed = 7;
  double lr = acf::app::TrainOptions{}.base_lr;
  auto* train = app.add_subcommand("train-toy", "Train the toy model from its seeded initialisation");
  train->add_option("--data", data_dir)->required();
  train->add_option("--epochs", epochs)->check(CLI::NonNegativeNumber);
  train->add_option("--seed", seed);
  train->add_option("--out", out_weights)->required();
  train->add_option("--lr", lr, "Base learning rate")->check(CLI::PositiveNumber);
  bool verbose = false;
  train->add_flag("-v,--verbose", verbose, "Print the loss every step");

  std::uint64_t check_seed = 0;
  double tol = 1e-3;
  std::size_t samples = 200;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the full model");
  gradcheck->add_option("--seed", check_seed);
  gradcheck->add_option("--tol", tol)->check(CLI::PositiveNumber);
  gradcheck->add_option("--samples", samples);

  std::string gates_csv;
  bool with_tam = false;
  auto* inspect = app.add_subcommand("inspect-gates", "Export per-image gate values as CSV");
  inspect->add_option("--data", data_dir)->required();
  inspect->add_option("--weights", weights)->required();
  inspect->add_option("--out", gates_csv)->required();
  inspect->add_flag("--tam", with_tam, "Also export the attention-module gates");

  std::string synth_out;
  int count = 4, size = 64;
  std::uint64_t synth_seed = 7;
  auto* synth = app.add_subcommand("synth-data", "Write a synthetic RGB-D dataset");
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--count", count)->check(CLI::PositiveNumber);
  synth->add_option("--size", size)->check(CLI::Range(8, 4096));
  synth->add_option("--seed", synth_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*eval) {
      const auto report = acf::app::run_eval(pred_dir, gt_dir, jobs);
      const std::string json = acf::app::format_report_json(report);
      if (out_json.empty())
        std::cout << json;
      else
        acf::app::write_text_file(out_json, json);
      if (!curves_csv.empty()) acf::app::write_text_file(curves_csv, acf::app::format_pr_csv(report.aggregate.curve));
    } else if (*forward) {
      std::optional<std::array<double, 6>> override;
      if (!gates.empty()) override = acf::app::parse_gate_list(gates);
      const auto p = acf::app::run_forward(rgb, depth, weights, out_map, override);
      std::cout << acf::app::format_gates_csv(p.gates);
    } else if (*train) {
      acf::app::TrainOptions options;
      options.epochs = epochs;
      options.seed = seed;
      options.base_lr = lr;
      if (verbose)
        options.on_step = [](int step, int total, double rate, double loss) {
          std::printf("step %d/%d lr %.5f loss %.6f\n", step + 1, total, rate, loss);
        };
      const auto data = acf::app::load_dataset(data_dir);
      const auto result = acf::app::train_toy(data, options);
      acf::io::save_weights(out_weights, result.weights);
      std::printf("steps %d f_max %.6f\n", result.steps, result.train_f_max);
      print_loss(result.final_loss);
    } else if (*gradcheck) {
      acf::app::NetworkCheckOptions o;
      o.seed = check_seed;
      o.tolerance = tol;
      o.samples = samples;
      int failed = print_report("network", acf::app::check_network(o));
      for (const auto& r : acf::app::check_elementwise(check_seed)) failed |= print_report(r.name.c_str(), r.report);
      return failed;
    } else if (*inspect) {
      acf::app::write_text_file(gates_csv, acf::app::inspect_gates(data_dir, weights, with_tam));
    } else if (*synth) {
      acf::app::write_synthetic_dataset(synth_out, count, size, synth_seed);
    }
  } catch (const acf::ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
