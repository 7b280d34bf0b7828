#include "gma/aligners.hpp"

#include "gma/graph.hpp"
#include "gma/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gma {

namespace {

void check_common(const DomainPair& pair, const AnchorSet& anchors,
                  const AlignerConfig& cfg, bool need_anchors) {
  if (cfg.dim < 1) {
    throw NumericError("aligner: embedding dim must be >= 1");
  }
  if (need_anchors && anchors.pairs.empty()) {
    throw NumericError("aligner: anchor set is empty");
  }
  const int nx = static_cast<int>(pair.x.rows());
  const int ny = static_cast<int>(pair.y.rows());
  for (const auto& [i, j] : anchors.pairs) {
    if (i < 0 || i >= nx || j < 0 || j >= ny) {
      throw NumericError("aligner: anchor index out of range");
    }
  }
}

int effective_k(const AlignerConfig& cfg, Eigen::Index n) {
  return std::max(1, std::min(cfg.k, static_cast<int>(n) - 1));
}

AffinityGraph domain_kernel(const Matrix& points, const AlignerConfig& cfg) {
  return alpha_decay_kernel(points, effective_k(cfg, points.rows()),
                            cfg.alpha);
}

// Eigenvectors of the m smallest nonzero eigenvalues of the normalized
// Laplacian; the trivial (smallest) eigenpair is skipped.
Matrix eigenmaps(const AffinityGraph& graph, int m) {
  const Eigen::Index n = graph.weights.rows();
  const int want = std::min<int>(m + 1, static_cast<int>(n));
  const Matrix lap = graph_laplacian(graph, /*normalized=*/true);
  const EigResult eig = sym_eig(lap, want, EigOrder::Smallest);
  Matrix coords = Matrix::Zero(n, m);
  const int avail = std::min(m, want - 1);
  for (int j = 0; j < avail; ++j) {
    coords.col(j) = eig.vectors.col(j + 1);
  }
  return coords;
}

// Spectral and MDS coordinates carry an arbitrary global scale; emit every
// embedding at unit coordinate variance (one scalar for both domains, so
// the shared geometry is untouched) to keep the alignment loss comparable
// across methods and datasets.
void normalize_scale(AlignedEmbedding& emb) {
  Matrix joint(emb.ex.rows() + emb.ey.rows(), emb.ex.cols());
  joint.topRows(emb.ex.rows()) = emb.ex;
  joint.bottomRows(emb.ey.rows()) = emb.ey;
  const Eigen::RowVectorXd mean = joint.colwise().mean();
  const double var =
      (joint.rowwise() - mean).squaredNorm() /
      static_cast<double>(joint.size());
  if (var > 0.0) {
    const double scale = 1.0 / std::sqrt(var);
    emb.ex *= scale;
    emb.ey *= scale;
  }
}

AlignedEmbedding split_embedding(const Matrix& joint, Eigen::Index nx,
                                 Eigen::Index ny, AlignMethod method, int dim) {
  AlignedEmbedding emb;
  emb.ex = joint.topRows(nx);
  emb.ey = joint.bottomRows(ny);
  emb.method = method;
  emb.dim = dim;
  normalize_scale(emb);
  return emb;
}

// Replace unreachable (+inf) shortest-path entries so MDS stays
// well-posed; warn because this means the joint graph is not connected.
void patch_unreachable(Matrix& dist, const WarnFn& warn) {
  double max_finite = 0.0;
  bool any_inf = false;
  for (Eigen::Index i = 0; i < dist.rows(); ++i) {
    for (Eigen::Index j = 0; j < dist.cols(); ++j) {
      if (std::isinf(dist(i, j))) {
        any_inf = true;
      } else {
        max_finite = std::max(max_finite, dist(i, j));
      }
    }
  }
  if (!any_inf) return;
  if (warn) warn("shortest-path graph is disconnected; patching "
                 "unreachable pairs");
  const double patched = max_finite > 0.0 ? 2.0 * max_finite : 1.0;
  for (Eigen::Index i = 0; i < dist.rows(); ++i) {
    for (Eigen::Index j = 0; j < dist.cols(); ++j) {
      if (std::isinf(dist(i, j))) dist(i, j) = patched;
    }
  }
}

struct DtaParts {
  Matrix px_t, py_t;  // per-domain powered diffusion operators
  Coupling coupling;
};

// Shared DTA front end: diffusion profiles restricted to anchor columns
// give the transport cost; Sinkhorn with uniform marginals gives the
// coupling.
DtaParts dta_parts(const DomainPair& pair, const AnchorSet& anchors,
                   const AlignerConfig& cfg) {
  const Eigen::Index nx = pair.x.rows();
  const Eigen::Index ny = pair.y.rows();
  DtaParts parts;
  parts.px_t = diffusion_power(row_normalize(domain_kernel(pair.x, cfg)),
                               std::max(1, cfg.t));
  parts.py_t = diffusion_power(row_normalize(domain_kernel(pair.y, cfg)),
                               std::max(1, cfg.t));

  const Eigen::Index na = static_cast<Eigen::Index>(anchors.size());
  Matrix profile_x(nx, na), profile_y(ny, na);
  for (Eigen::Index a = 0; a < na; ++a) {
    profile_x.col(a) = parts.px_t.col(anchors.pairs[a].first);
    profile_y.col(a) = parts.py_t.col(anchors.pairs[a].second);
  }
  Matrix cost(nx, ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j) {
      cost(i, j) = (profile_x.row(i) - profile_y.row(j)).cwiseAbs().sum();
    }
  }

  const double epsilon =
      cfg.epsilon > 0.0 ? cfg.epsilon : std::max(0.05 * cost.mean(), 1e-8);
  const Vector mu = Vector::Constant(nx, 1.0 / static_cast<double>(nx));
  const Vector nu = Vector::Constant(ny, 1.0 / static_cast<double>(ny));
  parts.coupling = sinkhorn(cost, mu, nu, epsilon, cfg.sinkhorn_tol,
                            cfg.sinkhorn_max_iter);
  return parts;
}

Matrix powered_joint_operator(const DomainPair& pair, const AnchorSet& anchors,
                              const AlignerConfig& cfg, const WarnFn& warn) {
  const AffinityGraph wx = domain_kernel(pair.x, cfg);
  const AffinityGraph wy = domain_kernel(pair.y, cfg);
  const AffinityGraph joint = joint_graph(wx, wy, anchors, cfg.mu, warn);
  const DiffusionOperator p = row_normalize(joint);

  int t = std::max(1, cfg.t);
  Matrix powered = diffusion_power(p, t);
  // Guard against a fully underflowed row; back off t if it ever happens.
  while (t > 1 && powered.rowwise().maxCoeff().minCoeff() < 1e-300) {
    --t;
    if (warn) {
      std::ostringstream oss;
      oss << "diffusion power underflow; reducing t to " << t;
      warn(oss.str());
    }
    powered = diffusion_power(p, t);
  }
  return powered;
}

}  // namespace

AlignedEmbedding align_jlma(const DomainPair& pair, const AnchorSet& anchors,
                            const AlignerConfig& cfg, const WarnFn& warn) {
  check_common(pair, anchors, cfg, /*need_anchors=*/true);
  const AffinityGraph wx = domain_kernel(pair.x, cfg);
  const AffinityGraph wy = domain_kernel(pair.y, cfg);
  const AffinityGraph joint = joint_graph(wx, wy, anchors, cfg.mu, warn);
  const Matrix coords = eigenmaps(joint, cfg.dim);
  AlignedEmbedding emb = split_embedding(coords, pair.x.rows(), pair.y.rows(),
                                         AlignMethod::JLMA, cfg.dim);
  return emb;
}

AlignedEmbedding align_mapa(const DomainPair& pair, const AnchorSet& anchors,
                            const AlignerConfig& cfg, const WarnFn& warn) {
  check_common(pair, anchors, cfg, /*need_anchors=*/true);
  if (static_cast<int>(anchors.size()) < cfg.dim) {
    throw NumericError("align_mapa: need at least `dim` anchors for "
                       "Procrustes");
  }
  (void)warn;
  const Matrix ex = eigenmaps(domain_kernel(pair.x, cfg), cfg.dim);
  Matrix ey = eigenmaps(domain_kernel(pair.y, cfg), cfg.dim);

  const Eigen::Index na = static_cast<Eigen::Index>(anchors.size());
  Matrix src(na, cfg.dim), dst(na, cfg.dim);
  for (Eigen::Index a = 0; a < na; ++a) {
    dst.row(a) = ex.row(anchors.pairs[a].first);
    src.row(a) = ey.row(anchors.pairs[a].second);
  }
  const SimilarityTransform tf =
      fit_similarity(src, dst, cfg.procrustes_scaling);
  ey = tf.apply(ey);

  AlignedEmbedding emb;
  emb.ex = ex;
  emb.ey = std::move(ey);
  emb.method = AlignMethod::MAPA;
  emb.dim = cfg.dim;
  normalize_scale(emb);
  return emb;
}

AlignedEmbedding align_spud(const DomainPair& pair, const AnchorSet& anchors,
                            const AlignerConfig& cfg, const WarnFn& warn) {
  check_common(pair, anchors, cfg, /*need_anchors=*/true);
  const Eigen::Index nx = pair.x.rows();
  const Eigen::Index ny = pair.y.rows();
  const int n = static_cast<int>(nx + ny);

  const AffinityGraph wx = domain_kernel(pair.x, cfg);
  const AffinityGraph wy = domain_kernel(pair.y, cfg);
  const AffinityGraph joint = joint_graph(wx, wy, anchors, cfg.mu, warn);

  // Restrict within-domain edges to kNN support so path lengths reflect
  // local geometry; anchor edges always stay.
  const AffinityGraph kx =
      knn_graph(pair.x, effective_k(cfg, nx), KnnWeighting::Binary);
  const AffinityGraph ky =
      knn_graph(pair.y, effective_k(cfg, ny), KnnWeighting::Binary);
  const AffinityGraph support = joint_graph(kx, ky, anchors, 1.0, nullptr);

  Matrix lengths = affinity_to_lengths(joint, &support);

  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  Matrix dist = shortest_paths(lengths, all);

  bool cross_reachable = false;
  for (Eigen::Index i = 0; i < nx && !cross_reachable; ++i) {
    for (Eigen::Index j = nx; j < nx + ny; ++j) {
      if (std::isfinite(dist(i, j))) {
        cross_reachable = true;
        break;
      }
    }
  }
  if (!cross_reachable) {
    throw NumericError("align_spud: domains are fully disconnected");
  }
  patch_unreachable(dist, warn);

  DistanceMatrix d;
  d.values = 0.5 * (dist + dist.transpose());
  d.values.diagonal().setZero();
  d.metric_tag = "geodesic";
  const Matrix coords = classical_mds(d, cfg.dim);
  return split_embedding(coords, nx, ny, AlignMethod::SPUD, cfg.dim);
}

AlignedEmbedding align_mash(const DomainPair& pair, const AnchorSet& anchors,
                            const AlignerConfig& cfg, const WarnFn& warn) {
  check_common(pair, anchors, cfg, /*need_anchors=*/true);
  if (cfg.t < 1) {
    throw NumericError("align_mash: diffusion steps t must be >= 1");
  }
  const Matrix powered = powered_joint_operator(pair, anchors, cfg, warn);
  const DistanceMatrix d = diffusion_distances(powered);
  const Matrix coords = classical_mds(d, cfg.dim);
  return split_embedding(coords, pair.x.rows(), pair.y.rows(),
                         AlignMethod::MASH, cfg.dim);
}

AlignedEmbedding align_dta(const DomainPair& pair, const AnchorSet& anchors,
                           const AlignerConfig& cfg, const WarnFn& warn) {
  check_common(pair, anchors, cfg, /*need_anchors=*/true);
  if (cfg.t < 1) {
    throw NumericError("align_dta: diffusion steps t must be >= 1");
  }
  const Eigen::Index nx = pair.x.rows();
  const Eigen::Index ny = pair.y.rows();
  const DtaParts parts = dta_parts(pair, anchors, cfg);
  const Coupling& coupling = parts.coupling;

  // Joint distance assembly (our construction; the published method's
  // exact recipe is not restated here): within-domain diffusion distances
  // normalized per block, cross distances from the negative log coupling
  // scaled into the same range.
  const Matrix dxx = diffusion_distances(parts.px_t).values;
  const Matrix dyy = diffusion_distances(parts.py_t).values;
  const double sx = dxx.maxCoeff();
  const double sy = dyy.maxCoeff();

  constexpr double log_cap = 10.0;
  const double gamma_max = coupling.values.maxCoeff();
  Matrix dxy(nx, ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j) {
      const double g = coupling.values(i, j);
      const double v = g > 0.0 ? -std::log(g / gamma_max) : log_cap;
      dxy(i, j) = std::min(v, log_cap) / log_cap;
    }
  }

  Matrix joint = Matrix::Zero(nx + ny, nx + ny);
  joint.topLeftCorner(nx, nx) = sx > 0.0 ? (dxx / sx).eval() : dxx;
  joint.bottomRightCorner(ny, ny) = sy > 0.0 ? (dyy / sy).eval() : dyy;
  joint.topRightCorner(nx, ny) = dxy;
  joint.bottomLeftCorner(ny, nx) = dxy.transpose();
  joint.diagonal().setZero();

  DistanceMatrix d;
  d.values = std::move(joint);
  d.metric_tag = "dta_assembled";
  const Matrix coords = classical_mds(d, cfg.dim);
  (void)warn;
  return split_embedding(coords, nx, ny, AlignMethod::DTA, cfg.dim);
}

AlignedEmbedding run_aligner(AlignMethod method, const DomainPair& pair,
                             const AnchorSet& anchors, const AlignerConfig& cfg,
                             const WarnFn& warn) {
  switch (method) {
    case AlignMethod::JLMA: return align_jlma(pair, anchors, cfg, warn);
    case AlignMethod::MAPA: return align_mapa(pair, anchors, cfg, warn);
    case AlignMethod::SPUD: return align_spud(pair, anchors, cfg, warn);
    case AlignMethod::MASH: return align_mash(pair, anchors, cfg, warn);
    case AlignMethod::DTA: return align_dta(pair, anchors, cfg, warn);
  }
  throw ConfigError("run_aligner: unknown method");
}

Matrix barycentric_project(const Matrix& weights, const Matrix& targets) {
  if (weights.cols() != targets.rows()) {
    throw NumericError("barycentric_project: weights columns != target rows");
  }
  Matrix w = weights;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const double s = w.row(i).sum();
    if (s <= 0.0) {
      std::ostringstream oss;
      oss << "barycentric_project: all-zero weight row " << i;
      throw NumericError(oss.str());
    }
    w.row(i) /= s;
  }
  return w * targets;
}

Matrix mash_cross_weights(const DomainPair& pair, const AnchorSet& anchors,
                          const AlignerConfig& cfg) {
  check_common(pair, anchors, cfg, /*need_anchors=*/true);
  const Matrix powered = powered_joint_operator(pair, anchors, cfg, nullptr);
  return powered.topRightCorner(pair.x.rows(), pair.y.rows());
}

Coupling dta_coupling(const DomainPair& pair, const AnchorSet& anchors,
                      const AlignerConfig& cfg) {
  check_common(pair, anchors, cfg, /*need_anchors=*/true);
  return dta_parts(pair, anchors, cfg).coupling;
}

}  // namespace gma
