#include "gma/graph.hpp"

#include "gma/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

namespace gma {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Indices of the k nearest neighbors of row i (self excluded), ties broken
// by lower index.
std::vector<int> k_nearest(const Matrix& dist, int i, int k) {
  const int n = static_cast<int>(dist.rows());
  std::vector<int> idx;
  idx.reserve(n - 1);
  for (int j = 0; j < n; ++j) {
    if (j != i) idx.push_back(j);
  }
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&](int a, int b) {
                      if (dist(i, a) != dist(i, b)) {
                        return dist(i, a) < dist(i, b);
                      }
                      return a < b;
                    });
  idx.resize(k);
  return idx;
}

}  // namespace

AffinityGraph knn_graph(const Matrix& points, int k, KnnWeighting weighting) {
  const int n = static_cast<int>(points.rows());
  if (k < 1 || k >= n) {
    throw NumericError("knn_graph: require 1 <= k < n");
  }
  const Matrix dist = pairwise_distances(points).values;

  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j : k_nearest(dist, i, k)) {
      w(i, j) = weighting == KnnWeighting::Binary ? 1.0 : dist(i, j);
    }
  }
  w = w.cwiseMax(w.transpose().eval());

  AffinityGraph g;
  g.weights = std::move(w);
  g.symmetric = true;
  g.k = k;
  return g;
}

double alpha_decay_affinity(double dist, double sigma_i, double sigma_j,
                            double alpha) {
  return 0.5 * std::exp(-std::pow(dist / sigma_i, alpha)) +
         0.5 * std::exp(-std::pow(dist / sigma_j, alpha));
}

AffinityGraph alpha_decay_kernel(const Matrix& points, int k, double alpha) {
  const int n = static_cast<int>(points.rows());
  if (k < 1 || k >= n) {
    throw NumericError("alpha_decay_kernel: require 1 <= k < n");
  }
  if (alpha < 1.0) {
    throw NumericError("alpha_decay_kernel: alpha must be >= 1");
  }
  const Matrix dist = pairwise_distances(points).values;

  Vector sigma(n);
  for (int i = 0; i < n; ++i) {
    const std::vector<int> nn = k_nearest(dist, i, k);
    sigma(i) = dist(i, nn.back());
    if (sigma(i) <= 0.0) {
      std::ostringstream oss;
      oss << "alpha_decay_kernel: degenerate bandwidth at point " << i
          << " (k-th neighbor at distance 0)";
      throw NumericError(oss.str());
    }
  }

  Matrix w(n, n);
  for (int i = 0; i < n; ++i) {
    w(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double kij =
          alpha_decay_affinity(dist(i, j), sigma(i), sigma(j), alpha);
      w(i, j) = kij;
      w(j, i) = kij;
    }
  }
  // Affinity graphs carry a zero diagonal; self-similarity is reintroduced
  // by row_normalize when needed.
  w.diagonal().setZero();

  AffinityGraph g;
  g.weights = std::move(w);
  g.symmetric = true;
  g.k = k;
  g.alpha = alpha;
  return g;
}

AffinityGraph joint_graph(const AffinityGraph& wx, const AffinityGraph& wy,
                          const AnchorSet& anchors, double mu,
                          const std::function<void(const std::string&)>& warn) {
  const int nx = static_cast<int>(wx.weights.rows());
  const int ny = static_cast<int>(wy.weights.rows());
  if (mu <= 0.0) {
    throw NumericError("joint_graph: mu must be positive");
  }
  if (anchors.pairs.empty() && warn) {
    warn("joint_graph: no anchors; domains are disconnected");
  }

  Matrix w = Matrix::Zero(nx + ny, nx + ny);
  w.topLeftCorner(nx, nx) = wx.weights;
  w.bottomRightCorner(ny, ny) = wy.weights;
  for (const auto& [i, j] : anchors.pairs) {
    if (i < 0 || i >= nx || j < 0 || j >= ny) {
      throw NumericError("joint_graph: anchor index out of range");
    }
    w(i, nx + j) = mu;
    w(nx + j, i) = mu;
  }

  AffinityGraph g;
  g.weights = std::move(w);
  g.symmetric = wx.symmetric && wy.symmetric;
  g.k = wx.k;
  g.alpha = wx.alpha;
  return g;
}

Matrix graph_laplacian(const AffinityGraph& w, bool normalized) {
  const Eigen::Index n = w.weights.rows();
  const double asym = (w.weights - w.weights.transpose()).cwiseAbs().maxCoeff();
  if (asym > 0.0) {
    throw NumericError("graph_laplacian: asymmetric input");
  }
  const Vector deg = w.weights.rowwise().sum();
  if (!normalized) {
    Matrix l = -w.weights;
    l.diagonal() += deg;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (deg(i) == 0.0) l.row(i).setZero();
    }
    return l;
  }
  Vector inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    inv_sqrt(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  }
  Matrix l = -(inv_sqrt.asDiagonal() * w.weights * inv_sqrt.asDiagonal());
  l.diagonal().array() += 1.0;  // isolated nodes keep diagonal 1
  return l;
}

DiffusionOperator row_normalize(const AffinityGraph& w) {
  Matrix p = w.weights;
  const Eigen::Index n = p.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = p.row(i).sum();
    if (s <= 0.0) {
      p(i, i) = 1.0;
      s = 1.0;
    }
    p.row(i) /= s;
  }
  DiffusionOperator out;
  out.p = std::move(p);
  out.steps_applied = 1;
  return out;
}

Matrix affinity_to_lengths(const AffinityGraph& affinity,
                           const AffinityGraph* support, double length_cap) {
  const Eigen::Index n = affinity.weights.rows();
  Matrix lengths = Matrix::Constant(n, n, kInf);
  for (Eigen::Index i = 0; i < n; ++i) {
    lengths(i, i) = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (support != nullptr && support->weights(i, j) == 0.0) continue;
      const double a = affinity.weights(i, j);
      if (a <= 0.0) continue;
      lengths(i, j) = std::clamp(-std::log(a), 0.0, length_cap);
    }
  }
  return lengths;
}

Matrix shortest_paths(const Matrix& edge_lengths,
                      const std::vector<int>& sources) {
  const int n = static_cast<int>(edge_lengths.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double e = edge_lengths(i, j);
      if (e < 0.0) {
        throw NumericError("shortest_paths: negative edge length");
      }
    }
  }

  Matrix dist(static_cast<Eigen::Index>(sources.size()), n);
  using Entry = std::pair<double, int>;  // (distance, node)
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const int src = sources[s];
    if (src < 0 || src >= n) {
      throw NumericError("shortest_paths: source index out of range");
    }
    std::vector<double> d(n, kInf);
    std::vector<char> done(n, 0);
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    d[src] = 0.0;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (done[u]) continue;
      done[u] = 1;
      for (int v = 0; v < n; ++v) {
        const double e = edge_lengths(u, v);
        if (v == u || done[v] || e == kInf) continue;
        const double cand = du + e;
        if (cand < d[v]) {
          d[v] = cand;
          heap.emplace(cand, v);
        }
      }
    }
    for (int v = 0; v < n; ++v) dist(static_cast<Eigen::Index>(s), v) = d[v];
  }
  return dist;
}

Matrix diffusion_power(const DiffusionOperator& p, int t) {
  if (t < 1) {
    throw NumericError("diffusion_power: t must be >= 1");
  }
  // Exponentiation by squaring keeps this cheap for larger t.
  Matrix result;
  Matrix base = p.p;
  bool have_result = false;
  int e = t;
  while (e > 0) {
    if (e & 1) {
      result = have_result ? Matrix(result * base) : base;
      have_result = true;
    }
    e >>= 1;
    if (e > 0) base = base * base;
  }
  return result;
}

DistanceMatrix diffusion_distances(const Matrix& powered) {
  return pairwise_distances(powered);
}

}  // namespace gma
