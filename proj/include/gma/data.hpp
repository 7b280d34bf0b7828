#pragma once

#include "gma/types.hpp"

namespace gma {

struct SplitParams {
  double noise_sigma = 0.5;  // distort
  std::optional<Vector> importance_scores;  // skewed/even override
};

// Load a delimited numeric table. Rows containing missing feature or label
// cells are dropped; non-numeric feature cells are an error. When
// `standardize` is set each column is z-scored (constant columns map to 0).
Dataset load_dataset(const std::string& path,
                     const std::optional<std::string>& label_column,
                     bool standardize = true, char sep = ',');

// Built-in importance proxy: absolute correlation with the response for
// regression, best single-threshold (one-rule) accuracy for classification.
Vector feature_importance(const Dataset& ds);

DomainPair make_split(const Dataset& ds, SplitStrategy strategy,
                      std::uint64_t seed, const SplitParams& params = {});

// Uniform sample of ceil(fraction*n) row indices; pairs are (i,i) in the
// original row space of a unimodal split.
AnchorSet sample_anchors(const DomainPair& pair, double fraction,
                         std::uint64_t seed);

// Anchor rows always train; the rest split by `test_fraction`, stratified
// by label when labels exist. Test row count is round(test_fraction * n).
PartitionedPair train_test_partition(const DomainPair& pair,
                                     const AnchorSet& anchors,
                                     double test_fraction, std::uint64_t seed,
                                     bool stratified = true);

// Row-subset helpers shared by the evaluation harnesses.
Matrix select_rows(const Matrix& m, const std::vector<int>& rows);
Labels select_labels(const Labels& l, const std::vector<int>& rows);

}  // namespace gma
