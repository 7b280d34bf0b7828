#pragma once

#include "gma/eval.hpp"
#include "gma/types.hpp"

#include <string>
#include <vector>

namespace gma {

// Parsed and validated run configuration (JSON file; unknown keys are
// rejected; see docs/run_config.schema.json).
struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  DatasetSpec dataset;
  SplitStrategy split = SplitStrategy::Random;
  double noise_sigma = 0.5;
  double anchor_fraction = 0.10;
  double test_fraction = 0.20;
  bool stratified = true;

  AlignMethod method = AlignMethod::MASH;
  AlignerConfig aligner;
  TrainConfig train;
  std::vector<int> hidden = {64, 32};

  // eval section
  std::string harness = "embedding-fit";
  std::vector<DatasetSpec> eval_datasets;  // defaults to {dataset}
  std::vector<SplitStrategy> eval_splits;  // defaults to {split}
  std::vector<AlignMethod> eval_methods;   // defaults to {method}
  std::vector<double> lambdas = {0, 1, 10, 100, 1000, 10000};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int mantel_permutations = 999;
  int knn_k = 5;
  AlignMethod mapping_method = AlignMethod::MASH;
  int jobs = 1;
};

RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& json_text,
                                const std::string& origin = "<inline>");

// Identity of everything that shapes an aligned embedding; its hash links
// embeddings to the config that produced them.
std::string align_identity_hash(const RunConfig& cfg);

EvalConfig eval_config_of(const RunConfig& cfg);

// Subcommand bodies; each returns a process exit code (0 ok, 2 config,
// 3 data, 4 numeric, 5 provenance).
int cmd_split(const RunConfig& cfg);
int cmd_align(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg, const std::string& embedding_path);
int cmd_extend(const RunConfig& cfg, const std::string& model_path,
               const std::string& input_csv, const std::string& domain,
               const std::string& output_csv);
int cmd_crossmap(const RunConfig& cfg, const std::string& model_path,
                 const std::string& input_csv, const std::string& from_domain,
                 const std::string& output_csv);
int cmd_eval(const RunConfig& cfg);
int cmd_plot(const std::string& report_csv, const std::string& harness,
             const std::string& output_svg);

// Applies the GMA_OUT_ROOT override.
std::string effective_output_dir(const RunConfig& cfg);

int exit_code_for(const std::exception& e);

}  // namespace gma
