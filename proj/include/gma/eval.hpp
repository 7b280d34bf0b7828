#pragma once

#include "gma/twinae.hpp"
#include "gma/types.hpp"

#include <map>

namespace gma {

struct MantelResult {
  double r = 0.0;
  double p_value = 1.0;
  int n_permutations = 0;
  std::uint64_t seed = 0;
};

// Permutation test for correlation between two distance matrices. Node
// labels of d2 are permuted jointly over rows and columns;
// p = (1 + #{r_perm >= r_obs}) / (1 + n_used). When (n! - 1) <= n_perm the
// test enumerates all non-identity permutations instead of sampling.
MantelResult mantel_test(const DistanceMatrix& d1, const DistanceMatrix& d2,
                         int n_perm, std::uint64_t seed);

enum class KnnTask { Classify, Regress };

struct KnnResult {
  std::vector<double> predictions;
  double score = 0.0;  // accuracy, or negative RMSE for regression
};

// Majority vote (ties -> lowest class index) or neighbor mean. `truth`
// may be null, in which case the score is NaN.
KnnResult knn_predict(const Matrix& train_x, const Labels& train_labels,
                      const Matrix& test_x, int k, KnnTask task,
                      const Labels* truth = nullptr);

// Mean over rows of squared Euclidean distance divided by the feature
// count (per-feature MSE).
double cross_domain_mse(const Matrix& mapped, const Matrix& truth);

struct DatasetSpec {
  std::string name;
  std::string path;
  std::optional<std::string> label_column;
  bool standardize = true;
};

struct EvalConfig {
  double anchor_fraction = 0.10;
  double test_fraction = 0.20;
  bool stratified = true;
  int mantel_permutations = 999;
  int knn_k = 5;
  double noise_sigma = 0.5;  // distort splits
  AlignerConfig aligner;
  TrainConfig train;
  std::vector<int> hidden = {64, 32};
  // Regularizing method for the mapping-comparison harness.
  AlignMethod mapping_method = AlignMethod::MASH;
  int jobs = 1;
};

struct ReportRow {
  std::string experiment;
  std::string dataset;
  std::string split;
  std::string method;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  std::string cell_hash;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
};

// Harnesses. When `report_path` is nonempty the report is written there
// (CSV + `<path>.summary.json`) and rerunning skips cells whose hash is
// already present.

// One cell per (dataset, method, seed); rows per lambda with metrics
// mantel_r / mantel_p. The aligner runs once on the full data per cell.
ExperimentReport run_lambda_sweep(const std::vector<DatasetSpec>& datasets,
                                  SplitStrategy split,
                                  const std::vector<AlignMethod>& methods,
                                  const std::vector<double>& lambdas,
                                  const std::vector<std::uint64_t>& seeds,
                                  const EvalConfig& cfg,
                                  const std::string& report_path = "");

ExperimentReport run_embedding_fit(const std::vector<DatasetSpec>& datasets,
                                   const std::vector<SplitStrategy>& splits,
                                   const std::vector<AlignMethod>& methods,
                                   const std::vector<std::uint64_t>& seeds,
                                   const EvalConfig& cfg,
                                   const std::string& report_path = "");

// kNN on the weaker domain's raw features vs kNN on the aligned training
// embedding evaluated on AE-extended test points. Split must be skewed or
// even so the weaker domain is identifiable (Y holds the weak half).
ExperimentReport run_baseline_comparison(
    const std::vector<DatasetSpec>& datasets, SplitStrategy split,
    const std::vector<AlignMethod>& methods,
    const std::vector<std::uint64_t>& seeds, const EvalConfig& cfg,
    const std::string& report_path = "");

// Twin-AE decoder-swap MSE vs MASH / DTA barycentric projections on test
// points.
ExperimentReport run_mapping_comparison(
    const std::vector<DatasetSpec>& datasets,
    const std::vector<SplitStrategy>& splits,
    const std::vector<std::uint64_t>& seeds, const EvalConfig& cfg,
    const std::string& report_path = "");

void save_report(const std::string& path, const ExperimentReport& report);
ExperimentReport load_report(const std::string& path);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
  int count = 0;
};

// Per-method mean +- SD of a metric (Table-shaped summaries).
std::map<std::string, MetricSummary> summarize_by_method(
    const ExperimentReport& report, const std::string& metric);

// Throws DataError when anchors leak into test rows or the embedding used
// for AE training covers anything but the training rows.
void audit_no_leakage(const PartitionedPair& part,
                      const AnchorSet& original_anchors,
                      const AlignedEmbedding& training_embedding);

}  // namespace gma
