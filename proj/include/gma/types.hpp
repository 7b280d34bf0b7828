#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gma {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error categories map onto CLI exit codes (2/3/4/5).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ProvenanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Label vector: either categorical (values are indices into class_names)
// or a real-valued response (class_names empty).
struct Labels {
  std::vector<double> values;
  std::vector<std::string> class_names;

  bool categorical() const { return !class_names.empty(); }
  std::size_t size() const { return values.size(); }
};

struct Dataset {
  Matrix features;  // n x d
  std::optional<Labels> labels;
  std::vector<std::string> feature_names;
  std::string name;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }
};

enum class SplitStrategy { Random, Skewed, Even, Distort, Rotation };

const char* to_string(SplitStrategy s);
SplitStrategy split_strategy_from_string(const std::string& s);

// Two domains simulated from one dataset. For feature splits
// (random/skewed/even) the feature index sets are disjoint and exhaustive;
// for distort/rotation the domains share the full feature set and
// n_x == n_y with row i of X corresponding to row i of Y.
struct DomainPair {
  Matrix x;  // n_x x d_x
  Matrix y;  // n_y x d_y
  std::optional<Labels> labels_x;
  std::optional<Labels> labels_y;
  SplitStrategy strategy = SplitStrategy::Random;
  std::uint64_t seed = 0;
  std::vector<int> features_x;  // source feature indices (feature splits)
  std::vector<int> features_y;
  std::string dataset_name;
};

// Known correspondences: (row in X, row in Y) pairs, no duplicate
// endpoints on either side.
struct AnchorSet {
  std::vector<std::pair<int, int>> pairs;
  double fraction = 0.0;

  std::size_t size() const { return pairs.size(); }
};

struct PartitionedPair {
  DomainPair train;
  DomainPair test;
  AnchorSet anchors;            // indices in *train* row space
  std::vector<int> train_rows;  // original row ids, ascending
  std::vector<int> test_rows;
  std::vector<int> orig_to_train;  // -1 where the row is not in train
  std::vector<int> orig_to_test;
};

// Symmetric nonnegative pairwise distances with zero diagonal.
struct DistanceMatrix {
  Matrix values;
  std::string metric_tag;

  Eigen::Index size() const { return values.rows(); }
};

// Entropic-OT transport plan together with its target marginals.
struct Coupling {
  Matrix values;  // n x m, nonnegative
  Vector row_marginal;
  Vector col_marginal;
  int iterations = 0;
  double marginal_error = 0.0;
};

// Dense affinity graph. `weights` has a zero diagonal; `symmetric` is set
// when W == W^T by construction.
struct AffinityGraph {
  Matrix weights;
  bool symmetric = false;
  int k = 0;
  double alpha = 0.0;

  Eigen::Index size() const { return weights.rows(); }
};

// Row-stochastic transition matrix P, possibly already powered.
struct DiffusionOperator {
  Matrix p;
  int steps_applied = 1;
};

enum class AlignMethod { JLMA, MAPA, SPUD, MASH, DTA };

const char* to_string(AlignMethod m);
AlignMethod align_method_from_string(const std::string& s);

struct AlignerConfig {
  int dim = 2;          // shared embedding dimension m
  int k = 10;           // kNN neighborhood for kernels
  double alpha = 10.0;  // decay exponent of the adaptive kernel
  double mu = 1.0;      // anchor edge weight in joint graphs
  int t = 8;            // diffusion steps (MASH, DTA)
  double epsilon = 0.0;  // OT regularizer; <= 0 means 0.05 * mean cost
  double eig_tol = 1e-10;
  bool procrustes_scaling = true;  // MAPA: uniform scale in Procrustes
  double sinkhorn_tol = 1e-9;
  int sinkhorn_max_iter = 50000;
};

// Shared-space coordinates for both domains, row-aligned to the source
// DomainPair rows.
struct AlignedEmbedding {
  Matrix ex;  // n_x x m
  Matrix ey;  // n_y x m
  AlignMethod method = AlignMethod::MASH;
  int dim = 0;
  std::string provenance;  // config snapshot (JSON text)
};

}  // namespace gma
