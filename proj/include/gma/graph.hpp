#pragma once

#include "gma/types.hpp"

#include <functional>

namespace gma {

enum class KnnWeighting { Binary, Distance };

// kNN graph with ties broken by lower index, symmetrized by max(W, W^T).
AffinityGraph knn_graph(const Matrix& points, int k,
                        KnnWeighting weighting = KnnWeighting::Binary);

// Scalar adaptive-bandwidth affinity:
//   1/2 exp(-(dist/sigma_i)^alpha) + 1/2 exp(-(dist/sigma_j)^alpha).
// dist = 0 gives 1.
double alpha_decay_affinity(double dist, double sigma_i, double sigma_j,
                            double alpha);

// Kernel matrix of alpha_decay_affinity over all point pairs, with
// sigma_i the distance from i to its k-th neighbor and a zero diagonal.
// Throws NumericError when any bandwidth degenerates to zero.
AffinityGraph alpha_decay_kernel(const Matrix& points, int k, double alpha);

// Block graph [[Wx, mu*C], [mu*C^T, Wy]] with C the anchor incidence
// matrix. An empty anchor set leaves the two domains disconnected; that is
// reported through `warn` (when provided), not an error.
AffinityGraph joint_graph(const AffinityGraph& wx, const AffinityGraph& wy,
                          const AnchorSet& anchors, double mu,
                          const std::function<void(const std::string&)>& warn =
                              nullptr);

// L = D - W, or the symmetric normalized form I - D^{-1/2} W D^{-1/2}.
// Isolated nodes get a zero row (unnormalized) or a unit diagonal
// (normalized).
Matrix graph_laplacian(const AffinityGraph& w, bool normalized);

// P(i,j) = W(i,j) / sum_j W(i,j); rows with zero mass get a unit self-loop
// first.
DiffusionOperator row_normalize(const AffinityGraph& w);

// Edge lengths for shortest-path use: -log(K) on the support of `support`
// (or of `affinity` itself when support is null), clipped to
// [0, length_cap]; absent edges become +infinity.
Matrix affinity_to_lengths(const AffinityGraph& affinity,
                           const AffinityGraph* support = nullptr,
                           double length_cap = 1e6);

// Dijkstra from each source over a dense nonnegative edge-length matrix
// (+infinity marks absent edges). Unreachable pairs stay +infinity.
Matrix shortest_paths(const Matrix& edge_lengths,
                      const std::vector<int>& sources);

// P^t by repeated multiplication. t >= 1.
Matrix diffusion_power(const DiffusionOperator& p, int t);

// Pairwise Euclidean distances between rows of P^t (diffusion distances).
DistanceMatrix diffusion_distances(const Matrix& powered);

}  // namespace gma
