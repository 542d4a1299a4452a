#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hsi/hsi.hpp"

namespace hsi::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

namespace fs = std::filesystem;

struct Globals {
  std::size_t threads = 0;
  bool strict = false;
};

struct DenoiseFlags {
  DenoiseParams params;
  void add(CLI::App* sub) {
    sub->add_option("--beta1", params.beta1, "TV weight")->capture_default_str();
    sub->add_option("--beta2", params.beta2, "Quadratic gradient weight")->capture_default_str();
    sub->add_option("--mu", params.mu, "ADMM penalty")->capture_default_str();
    sub->add_option("--tol", params.tol, "Relative-change stopping tolerance")->capture_default_str();
    sub->add_option("--max-iters", params.max_iters, "ADMM iteration limit")->capture_default_str();
  }
};

inline HyperCube load_normalized_cube(const std::string& path) {
  HyperCube cube = io::read_cube(path);
  validate_cube(cube);
  return cube.normalized ? cube : normalize_cube(cube);
}

inline std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage spectral-spatial hyperspectral classification"};
  app.name("hsi");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key = value file; subcommand options go under [subcommand]");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (0: HSI_THREADS or all cores)");
  app.add_flag("--strict", g.strict, "Exit with code 3 when a solver stops at its iteration limit");

  std::function<int()> action;
  auto finish = [&](bool converged, const std::string& what) {
    if (converged) return int{kOk};
    err << "warning: " << what << " reached its iteration limit\n";
    return g.strict ? int{kNumerical} : int{kOk};
  };

  // split
  std::string labels_path, counts_path, out_path;
  double percent = 10.0;
  std::uint64_t seed = 0;
  auto* split = app.add_subcommand("split", "Draw a stratified training/testing split");
  split->add_option("--labels", labels_path, "Ground-truth labels (HSL1)")->required();
  auto* counts_opt = split->add_option("--per-class-counts", counts_path, "Training pixels per class (text)");
  split->add_option("--percent", percent, "Training percentage per class")->excludes(counts_opt);
  split->add_option("--seed", seed, "Random seed")->capture_default_str();
  split->add_option("--out", out_path, "Output split (HSS1)")->required();
  split->callback([&] {
    action = [&] {
      const LabelMap labels = io::read_labels(labels_path);
      validate_labels(labels);
      SplitRequest request = PercentPerClass{percent};
      if (!counts_path.empty()) {
        request = PerClassCounts{io::parse_class_counts(io::read_file(counts_path), labels.num_classes)};
      }
      std::vector<std::string> warnings;
      const SplitSpec s = stratified_split(labels, request, seed, &warnings);
      for (const auto& w : warnings) err << "warning: " << w << "\n";
      io::write_split(out_path, s);
      out << "training=" << s.training.size() << " testing=" << s.testing.size() << "\n";
      return int{kOk};
    };
  });

  // shared inputs
  std::string cube_path, split_path, model_path, prob_path, pred_out;
  double nu = 0.1, sigma = 1.0;
  DenoiseFlags dn;

  // cv
  std::vector<double> nu_grid{0.05, 0.1, 0.2, 0.3}, sigma_grid{0.25, 0.5, 1.0, 2.0};
  std::size_t folds = 5;
  auto* cv = app.add_subcommand("cv", "Grid search of (nu, sigma) on the training pixels");
  cv->add_option("--cube", cube_path, "Hyperspectral cube (HSC1)")->required();
  cv->add_option("--labels", labels_path, "Ground-truth labels (HSL1)")->required();
  cv->add_option("--split", split_path, "Split (HSS1)")->required();
  cv->add_option("--nu-grid", nu_grid, "Comma-separated nu values")->delimiter(',')->capture_default_str();
  cv->add_option("--sigma-grid", sigma_grid, "Comma-separated sigma values")->delimiter(',')->capture_default_str();
  cv->add_option("--folds", folds, "Number of folds")->capture_default_str();
  cv->add_option("--out", out_path, "Optional CSV of every grid point");
  cv->callback([&] {
    action = [&] {
      const HyperCube cube = load_normalized_cube(cube_path);
      const LabelMap labels = io::read_labels(labels_path);
      const SplitSpec s = io::read_split(split_path, labels);
      MulticlassOptions opt;
      opt.threads = g.threads;
      const CvResult res = cross_validate(cube, s, nu_grid, sigma_grid, folds, opt);
      for (const auto& w : res.warnings) err << "warning: " << w << "\n";
      if (!out_path.empty()) {
        std::string csv = "nu,sigma,accuracy\n";
        for (const auto& p : res.scores) {
          csv += format_double(p.nu) + "," + format_double(p.sigma) + "," + format_double(p.accuracy) + "\n";
        }
        io::write_file_atomic(out_path, csv);
      }
      out << "nu=" << format_double(res.best_nu) << " sigma=" << format_double(res.best_sigma)
          << " accuracy=" << fixed4(res.best_accuracy) << "\n";
      return int{kOk};
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Train the pairwise nu-SVC model");
  train->add_option("--cube", cube_path, "Hyperspectral cube (HSC1)")->required();
  train->add_option("--labels", labels_path, "Ground-truth labels (HSL1)")->required();
  train->add_option("--split", split_path, "Split (HSS1)")->required();
  train->add_option("--nu", nu, "nu parameter")->capture_default_str();
  train->add_option("--sigma", sigma, "RBF width")->capture_default_str();
  train->add_option("--out", out_path, "Output model (HSM1)")->required();
  train->callback([&] {
    action = [&] {
      const HyperCube cube = load_normalized_cube(cube_path);
      const LabelMap labels = io::read_labels(labels_path);
      const SplitSpec s = io::read_split(split_path, labels);
      MulticlassOptions opt;
      opt.threads = g.threads;
      const MulticlassModel model = train_multiclass(cube, s, nu, {KernelKind::Rbf, sigma}, opt);
      io::write_model(out_path, model);
      return finish(model.converged(), "nu-SVC");
    };
  });

  // predict
  auto* predict = app.add_subcommand("predict", "Stage 1: class probabilities from a trained model");
  predict->add_option("--cube", cube_path, "Hyperspectral cube (HSC1)")->required();
  predict->add_option("--labels", labels_path, "Ground-truth labels (HSL1)")->required();
  predict->add_option("--split", split_path, "Split (HSS1)")->required();
  predict->add_option("--model", model_path, "Model (HSM1)")->required();
  predict->add_option("--out", out_path, "Output probabilities (HSP1)")->required();
  predict->add_option("--pred-out", pred_out, "Optional argmax label map (HSL1)");
  predict->callback([&] {
    action = [&] {
      const HyperCube cube = load_normalized_cube(cube_path);
      const LabelMap labels = io::read_labels(labels_path);
      const SplitSpec s = io::read_split(split_path, labels);
      const MulticlassModel model = io::read_model(model_path, cube.bands);
      if (model.num_classes != labels.num_classes) throw DataError("model and labels differ in class count");
      const ProbabilityTensor t = io::quantize_f32(predict_tensor(model, cube, s, g.threads));
      io::write_probabilities(out_path, t);
      if (!pred_out.empty()) io::write_labels(pred_out, classify_argmax(t));
      return int{kOk};
    };
  });

  // denoise
  std::string diagnostics_path;
  auto* denoise = app.add_subcommand("denoise", "Stage 2: restore a probability tensor");
  denoise->add_option("--prob", prob_path, "Stage-1 probabilities (HSP1)")->required();
  denoise->add_option("--labels", labels_path, "Ground-truth labels (HSL1)")->required();
  denoise->add_option("--split", split_path, "Split (HSS1) whose training pixels are pinned")->required();
  denoise->add_option("--out", out_path, "Output probabilities (HSP1)")->required();
  denoise->add_option("--pred-out", pred_out, "Optional argmax label map (HSL1)");
  denoise->add_option("--diagnostics", diagnostics_path, "Optional per-iteration CSV");
  dn.add(denoise);
  denoise->callback([&] {
    action = [&] {
      const ProbabilityTensor t = io::read_probabilities(prob_path);
      const LabelMap labels = io::read_labels(labels_path);
      if (t.height != labels.height || t.width != labels.width) {
        throw DataError("probabilities and labels differ in spatial size");
      }
      const SplitSpec s = io::read_split(split_path, labels);
      const PixelMask pinned = training_mask(s, t.height, t.width);
      auto res = denoise_tensor(t, pinned, dn.params, g.threads, !diagnostics_path.empty());
      const ProbabilityTensor restored = io::quantize_f32(std::move(res.restored));
      io::write_probabilities(out_path, restored);
      if (!pred_out.empty()) io::write_labels(pred_out, classify_argmax(restored));
      if (!diagnostics_path.empty()) write_denoise_diagnostics(diagnostics_path, res.per_class);
      return finish(res.all_converged, "denoising");
    };
  });

  // classify
  std::size_t runs = 10;
  bool concurrent = false, diagnostics = false;
  auto* classify = app.add_subcommand("classify", "Full two-stage pipeline over repeated runs");
  classify->add_option("--cube", cube_path, "Hyperspectral cube (HSC1)")->required();
  classify->add_option("--labels", labels_path, "Ground-truth labels (HSL1)")->required();
  auto* split_opt = classify->add_option("--split", split_path, "Split (HSS1) used verbatim by run 1");
  auto* ccounts = classify->add_option("--per-class-counts", counts_path, "Training pixels per class (text)")
                      ->excludes(split_opt);
  classify->add_option("--percent", percent, "Training percentage per class")->excludes(split_opt)->excludes(ccounts);
  classify->add_option("--seed", seed, "Seed of run 1 when no split file is given")->capture_default_str();
  classify->add_option("--nu", nu, "nu parameter")->capture_default_str();
  classify->add_option("--sigma", sigma, "RBF width")->capture_default_str();
  classify->add_option("--runs", runs, "Number of runs")->capture_default_str();
  classify->add_flag("--concurrent-runs", concurrent, "Run whole runs in parallel");
  classify->add_flag("--diagnostics", diagnostics, "Write per-iteration denoising CSVs");
  classify->add_option("--out", out_path, "Output directory")->required();
  dn.add(classify);
  classify->callback([&] {
    action = [&] {
      const HyperCube cube = io::read_cube(cube_path);
      const LabelMap labels = io::read_labels(labels_path);
      RunConfig cfg;
      cfg.nu = nu;
      cfg.sigma = sigma;
      cfg.denoise = dn.params;
      cfg.num_runs = runs;
      cfg.threads = g.threads;
      cfg.concurrent_runs = concurrent;
      cfg.record_denoise_history = diagnostics;
      cfg.split.base_seed = seed;
      if (!split_path.empty()) {
        cfg.split.fixed = io::read_split(split_path, labels);
      } else if (!counts_path.empty()) {
        cfg.split.request = PerClassCounts{io::parse_class_counts(io::read_file(counts_path), labels.num_classes)};
      } else {
        cfg.split.request = PercentPerClass{percent};
      }
      fs::create_directories(out_path);
      const TwoStageResult res = run_two_stage(cfg, cube, labels, fs::path(out_path));
      for (const auto& w : res.warnings) err << "warning: " << w << "\n";
      out << "stage1 oa=" << fixed4(res.stage1.oa_mean) << " aa=" << fixed4(res.stage1.aa_mean)
          << " kappa=" << fixed4(res.stage1.kappa_mean) << "\n";
      out << "stage2 oa=" << fixed4(res.stage2.oa_mean) << " aa=" << fixed4(res.stage2.aa_mean)
          << " kappa=" << fixed4(res.stage2.kappa_mean) << "\n";
      bool converged = true;
      for (const auto& r : res.runs) converged = converged && r.denoise_converged && r.svm_converged;
      if (converged || !g.strict) return int{kOk};
      return int{kNumerical};
    };
  });

  // metrics
  std::string truth_path;
  auto* metrics = app.add_subcommand("metrics", "OA, AA and kappa of a prediction on the testing pixels");
  metrics->add_option("--pred", pred_out, "Predicted labels (HSL1)")->required();
  metrics->add_option("--truth", truth_path, "Ground-truth labels (HSL1)")->required();
  metrics->add_option("--split", split_path, "Split (HSS1)")->required();
  metrics->callback([&] {
    action = [&] {
      const LabelMap pred = io::read_labels(pred_out);
      const LabelMap truth = io::read_labels(truth_path);
      const SplitSpec s = io::read_split(split_path, truth);
      const MetricsReport m = compute_metrics(pred, truth, s.testing);
      out << "oa=" << fixed4(m.oa) << " aa=" << fixed4(m.aa) << " kappa=" << fixed4(m.kappa) << "\n";
      return int{kOk};
    };
  });

  // heatmap
  std::vector<std::string> preds, splits;
  std::string csv_path;
  auto* heatmap = app.add_subcommand("heatmap", "Per-pixel misclassification counts over runs");
  heatmap->add_option("--truth", truth_path, "Ground-truth labels (HSL1)")->required();
  heatmap->add_option("--pred", preds, "Predicted labels, one per run")->required();
  heatmap->add_option("--split", splits, "Split of each run, in the same order")->required();
  heatmap->add_option("--out", out_path, "Output image (binary PGM)")->required();
  heatmap->add_option("--csv", csv_path, "Optional CSV output");
  heatmap->callback([&] {
    action = [&] {
      if (preds.size() != splits.size()) throw DataError("--pred and --split must be given the same number of times");
      const LabelMap truth = io::read_labels(truth_path);
      std::vector<LabelMap> maps;
      std::vector<std::vector<LabeledPixel>> tests;
      for (std::size_t i = 0; i < preds.size(); ++i) {
        maps.push_back(io::read_labels(preds[i]));
        tests.push_back(io::read_split(splits[i], truth).testing);
      }
      const Heatmap h = misclassification_heatmap(maps, truth, tests);
      io::write_file_atomic(out_path, io::encode_heatmap_pgm(h));
      if (!csv_path.empty()) io::write_file_atomic(csv_path, io::encode_heatmap_csv(h));
      return int{kOk};
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? int{kOk} : int{kUsage};
  }
  try {
    return action ? action() : int{kUsage};
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace hsi::cli

inline int cli_main(int argc, const char* const* argv) {
  return hsi::cli::run(argc, argv, std::cout, std::cerr);
}
