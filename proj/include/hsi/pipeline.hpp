#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hsi/admm.hpp"
#include "hsi/io.hpp"
#include "hsi/metrics.hpp"
#include "hsi/multiclass.hpp"
#include "hsi/split.hpp"
#include "hsi/types.hpp"

namespace hsi {

/// Where the training pixels of each run come from. With a fixed split, run 1
/// uses it verbatim and later runs draw fresh splits with its per-class counts.
struct SplitSource {
  std::optional<SplitSpec> fixed;
  SplitRequest request = PercentPerClass{10.0};
  std::uint64_t base_seed = 0;
};

struct RunConfig {
  double nu = 0.1;
  double sigma = 1.0;
  DenoiseParams denoise;
  SplitSource split;
  std::size_t num_runs = 10;
  MulticlassOptions svm;
  std::size_t threads = 0;
  bool concurrent_runs = false;
  bool record_denoise_history = false;
};

struct RunResult {
  SplitSpec split;
  MetricsReport stage1;
  MetricsReport stage2;
  LabelMap pred_stage1;
  LabelMap pred_stage2;
  std::vector<AdmmDiagnostics> denoise;
  bool denoise_converged = true;
  bool svm_converged = true;
};

struct MetricSummary {
  double oa_mean = 0, oa_std = 0, aa_mean = 0, aa_std = 0, kappa_mean = 0, kappa_std = 0;
};

struct TwoStageResult {
  std::vector<RunResult> runs;
  MetricSummary stage1;
  MetricSummary stage2;
  Heatmap heatmap_stage1;
  Heatmap heatmap_stage2;
  std::vector<std::string> warnings;
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_denoise_diagnostics(const std::filesystem::path& path,
                                      const std::vector<AdmmDiagnostics>& per_class) {
  std::string csv = "class,iteration,relative_change,objective\n";
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    for (const auto& rec : per_class[k].history) {
      csv += std::to_string(k + 1) + "," + std::to_string(rec.iteration) + "," +
             format_double(rec.relative_change) + "," + format_double(rec.objective) + "\n";
    }
  }
  io::write_file_atomic(path, csv);
}

/// One full pass: train, Stage-1 tensor, Stage-2 restoration, argmax and
/// scoring. Probability tensors are rounded to single precision at each
/// stage boundary, exactly as if they had passed through HSP1 files, so
/// this matches the file-based subcommands bit for bit.
inline RunResult run_once(const RunConfig& cfg, const HyperCube& cube, const LabelMap& labels,
                          const SplitSpec& split,
                          const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  validate_split(labels, split);
  RunResult res;
  res.split = split;
  MulticlassOptions svm = cfg.svm;
  if (svm.threads == 0) svm.threads = cfg.threads;
  const MulticlassModel model = train_multiclass(cube, split, cfg.nu, {KernelKind::Rbf, cfg.sigma}, svm);
  res.svm_converged = model.converged();
  const ProbabilityTensor stage1 = io::quantize_f32(predict_tensor(model, cube, split, cfg.threads));
  const PixelMask pinned = training_mask(split, cube.height, cube.width);
  auto restored = denoise_tensor(stage1, pinned, cfg.denoise, cfg.threads, cfg.record_denoise_history);
  const ProbabilityTensor stage2 = io::quantize_f32(std::move(restored.restored));
  res.denoise = std::move(restored.per_class);
  res.denoise_converged = restored.all_converged;
  res.pred_stage1 = classify_argmax(stage1);
  res.pred_stage2 = classify_argmax(stage2);
  if (!split.testing.empty()) {
    res.stage1 = compute_metrics(res.pred_stage1, labels, split.testing);
    res.stage2 = compute_metrics(res.pred_stage2, labels, split.testing);
  }
  if (out_dir) {
    io::write_split(*out_dir / "split.hss", split);
    io::write_model(*out_dir / "model.hsm", model);
    io::write_probabilities(*out_dir / "prob_stage1.hsp", stage1);
    io::write_probabilities(*out_dir / "prob_stage2.hsp", stage2);
    io::write_labels(*out_dir / "pred_stage1.hsl", res.pred_stage1);
    io::write_labels(*out_dir / "pred_stage2.hsl", res.pred_stage2);
    if (cfg.record_denoise_history) write_denoise_diagnostics(*out_dir / "denoise_diagnostics.csv", res.denoise);
  }
  return res;
}

inline MetricSummary summarize(const std::vector<const MetricsReport*>& reports) {
  MetricSummary s;
  if (reports.empty()) return s;
  const double n = static_cast<double>(reports.size());
  for (const auto* r : reports) {
    s.oa_mean += r->oa / n;
    s.aa_mean += r->aa / n;
    s.kappa_mean += r->kappa / n;
  }
  for (const auto* r : reports) {
    s.oa_std += (r->oa - s.oa_mean) * (r->oa - s.oa_mean) / n;
    s.aa_std += (r->aa - s.aa_mean) * (r->aa - s.aa_mean) / n;
    s.kappa_std += (r->kappa - s.kappa_mean) * (r->kappa - s.kappa_mean) / n;
  }
  s.oa_std = std::sqrt(s.oa_std);
  s.aa_std = std::sqrt(s.aa_std);
  s.kappa_std = std::sqrt(s.kappa_std);
  return s;
}

/// Split of run `index` (0-based); its seed is base_seed + index.
inline SplitSpec split_for_run(const SplitSource& src, const LabelMap& labels, std::size_t index,
                               std::vector<std::string>* warnings = nullptr) {
  if (src.fixed) {
    if (index == 0) return *src.fixed;
    const PerClassCounts counts{training_counts(*src.fixed, labels.num_classes)};
    return stratified_split(labels, counts, src.fixed->seed + index, warnings);
  }
  return stratified_split(labels, src.request, src.base_seed + index, warnings);
}

inline std::string metrics_csv_row(std::size_t run, int stage, const MetricsReport& m) {
  std::string row = std::to_string(run) + "," + std::to_string(stage) + "," + format_double(m.oa) +
                    "," + format_double(m.aa) + "," + format_double(m.kappa);
  for (double a : m.per_class_accuracy) row += "," + format_double(a);
  return row + "\n";
}

/// Repeated two-stage classification. Writes per-run artifacts, metrics.csv,
/// summary.csv and the misclassification heatmaps when `out_dir` is given.
inline TwoStageResult run_two_stage(const RunConfig& cfg, const HyperCube& raw_cube,
                                    const LabelMap& labels,
                                    const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  if (cfg.num_runs == 0) throw DataError("num_runs must be at least 1");
  validate_cube(raw_cube);
  validate_labels(labels);
  if (raw_cube.height != labels.height || raw_cube.width != labels.width) {
    throw DataError("cube and label map differ in spatial size");
  }
  const HyperCube cube = raw_cube.normalized ? raw_cube : normalize_cube(raw_cube);

  TwoStageResult out;
  std::vector<SplitSpec> splits;
  for (std::size_t r = 0; r < cfg.num_runs; ++r) splits.push_back(split_for_run(cfg.split, labels, r, &out.warnings));

  out.runs.resize(cfg.num_runs);
  auto do_run = [&](std::size_t r) {
    std::optional<std::filesystem::path> dir;
    if (out_dir) dir = *out_dir / ("run_" + std::to_string(r + 1));
    out.runs[r] = run_once(cfg, cube, labels, splits[r], dir);
  };
  if (cfg.concurrent_runs) {
    parallel_for(cfg.num_runs, cfg.threads, do_run);
  } else {
    for (std::size_t r = 0; r < cfg.num_runs; ++r) do_run(r);
  }

  std::vector<const MetricsReport*> s1, s2;
  std::vector<LabelMap> p1, p2;
  std::vector<std::vector<LabeledPixel>> tests;
  std::string csv = "run,stage,oa,aa,kappa";
  for (std::size_t k = 0; k < labels.num_classes; ++k) csv += ",class_" + std::to_string(k + 1);
  csv += "\n";
  for (std::size_t r = 0; r < cfg.num_runs; ++r) {
    const auto& run = out.runs[r];
    if (!run.denoise_converged) {
      out.warnings.push_back("run " + std::to_string(r + 1) + ": denoising reached max_iters");
    }
    if (!run.svm_converged) {
      out.warnings.push_back("run " + std::to_string(r + 1) + ": nu-SVC reached its iteration limit");
    }
    p1.push_back(run.pred_stage1);
    p2.push_back(run.pred_stage2);
    tests.push_back(run.split.testing);
    if (run.split.testing.empty()) continue;
    s1.push_back(&run.stage1);
    s2.push_back(&run.stage2);
    csv += metrics_csv_row(r + 1, 1, run.stage1);
    csv += metrics_csv_row(r + 1, 2, run.stage2);
  }
  out.stage1 = summarize(s1);
  out.stage2 = summarize(s2);
  out.heatmap_stage1 = misclassification_heatmap(p1, labels, tests);
  out.heatmap_stage2 = misclassification_heatmap(p2, labels, tests);

  if (out_dir) {
    io::write_file_atomic(*out_dir / "metrics.csv", csv);
    std::string summary = "stage,oa_mean,oa_std,aa_mean,aa_std,kappa_mean,kappa_std\n";
    for (int stage = 1; stage <= 2; ++stage) {
      const auto& s = stage == 1 ? out.stage1 : out.stage2;
      summary += std::to_string(stage) + "," + format_double(s.oa_mean) + "," + format_double(s.oa_std) +
                 "," + format_double(s.aa_mean) + "," + format_double(s.aa_std) + "," +
                 format_double(s.kappa_mean) + "," + format_double(s.kappa_std) + "\n";
    }
    io::write_file_atomic(*out_dir / "summary.csv", summary);
    io::write_file_atomic(*out_dir / "heatmap_stage1.pgm", io::encode_heatmap_pgm(out.heatmap_stage1));
    io::write_file_atomic(*out_dir / "heatmap_stage1.csv", io::encode_heatmap_csv(out.heatmap_stage1));
    io::write_file_atomic(*out_dir / "heatmap_stage2.pgm", io::encode_heatmap_pgm(out.heatmap_stage2));
    io::write_file_atomic(*out_dir / "heatmap_stage2.csv", io::encode_heatmap_csv(out.heatmap_stage2));
  }
  return out;
}

}  // namespace hsi
