#pragma once

#include <string>
#include <vector>

#include "vsf/metrics.hpp"
#include "vsf/quant.hpp"
#include "vsf/train.hpp"

namespace vsf {

struct OutputMetrics {
  double r2 = 0.0, mse = 0.0, mae = 0.0, dummy_mse = 0.0;
};

/// Per-output regression metrics plus the quaternionic rotation error when
/// the label layout carries an orientation block (label_dim == 7:
/// x, y, z, qx, qy, qz, qw).
struct EvalReport {
  std::vector<OutputMetrics> outputs;
  bool has_rotation = false;
  double rotation_error_deg = 0.0;
  int n_samples = 0;
};

EvalReport evaluate(Model<float>& model, const BatchData& test);
EvalReport evaluate(const QuantModel& qm, const BatchData& test);

/// Human-readable names for the output channels (x, y, z, phi for the
/// 4-output pose head, y0.. otherwise).
std::vector<std::string> output_names(int label_dim);

/// One trained model's scores within an experiment. key identifies the
/// repetition: "seed<k>" for repeated seeds, "group<g>" for leave-one-out.
struct ExperimentRow {
  std::string variant;
  std::string key;
  EvalReport report;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  int label_dim = 0;
};

/// Trains every variant n_seeds times on a fixed split. Seed s uses
/// config.seed + s for all variants, so comparisons are paired on both the
/// data and the initialization stream.
ExperimentResult run_seeds_experiment(const BatchData& train_data,
                                      const BatchData& val_data,
                                      const BatchData& test_data,
                                      const ArchSpec& arch,
                                      const std::vector<FusionVariant>& variants,
                                      int n_seeds, const TrainConfig& config);

/// Leave-one-group-out cross-validation: each group in turn is the test
/// fold; the remaining samples are split 90/10 into train/validation by
/// sample index. Fold g uses config.seed + g.
ExperimentResult run_loo_crossval(const BatchData& all, int n_groups,
                                  const ArchSpec& arch,
                                  const std::vector<FusionVariant>& variants,
                                  const TrainConfig& config);

/// Paired per-output comparison of two variants across the shared keys.
struct PairedStats {
  std::string variant_a, variant_b;
  std::vector<std::string> keys;
  // [output][key]
  std::vector<std::vector<double>> scores_a, scores_b;
  std::vector<double> median_a, median_b, delta_median;
  std::vector<double> p_greater;    // H1: b scores above a
  std::vector<double> p_two_sided;
};

PairedStats compare_variants(const ExperimentResult& result,
                             const std::string& variant_a,
                             const std::string& variant_b);

/// Long-form CSV, one row per (variant, key, output) with columns
/// r2,mse,mae,dummy_mse,rotation_error_deg (last one blank when absent).
void write_experiment_csv(const std::string& path,
                          const ExperimentResult& result);
ExperimentResult read_experiment_csv(const std::string& path);

void write_summary_csv(const std::string& path, const PairedStats& stats,
                       int label_dim);

/// Splits rows [0, n) of a dataset-sized index range into train/val/test
/// counts; helper for fixed-split experiments.
struct SplitCounts {
  int train = 0, val = 0, test = 0;
};

BatchData subset(const BatchData& d, const std::vector<int>& rows);

}  // namespace vsf
