#include "gma/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace gma {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericError(std::string(what) + ": non-finite entries");
  }
}

}  // namespace

EigResult sym_eig(const Matrix& a, int k, EigOrder order) {
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) {
    throw NumericError("sym_eig: matrix must be square and nonempty");
  }
  if (k < 1 || k > n) {
    throw NumericError("sym_eig: k out of range");
  }
  require_finite(a, "sym_eig");
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (asym > 1e-8 * scale) {
    std::ostringstream oss;
    oss << "sym_eig: input not symmetric (max asymmetry " << asym << ")";
    throw NumericError(oss.str());
  }

  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericError("sym_eig: eigensolver failed to converge");
  }

  // Eigen returns eigenvalues ascending.
  EigResult out;
  out.values.resize(k);
  out.vectors.resize(n, k);
  for (int i = 0; i < k; ++i) {
    const Eigen::Index src =
        order == EigOrder::Smallest ? i : n - 1 - i;
    out.values(i) = solver.eigenvalues()(src);
    out.vectors.col(i) = solver.eigenvectors().col(src);
  }
  return out;
}

Matrix classical_mds(const DistanceMatrix& d, int dim) {
  const Eigen::Index n = d.values.rows();
  if (n == 0 || d.values.cols() != n) {
    throw NumericError("classical_mds: distance matrix must be square");
  }
  require_finite(d.values, "classical_mds");
  if (dim < 1) {
    throw NumericError("classical_mds: dim must be >= 1");
  }
  if (n == 1) {
    return Matrix::Zero(1, dim);
  }
  if (dim > n - 1) {
    throw NumericError("classical_mds: dim must be <= n-1");
  }

  const Matrix d2 = d.values.array().square();
  const Vector row_mean = d2.rowwise().mean();
  const double total_mean = d2.mean();
  // B = -1/2 * J * D^2 * J, expanded to avoid forming J.
  Matrix b = -0.5 * d2;
  b.colwise() += 0.5 * row_mean;
  b.rowwise() += 0.5 * row_mean.transpose();
  b.array() -= 0.5 * total_mean;

  const EigResult eig = sym_eig(b, dim, EigOrder::Largest);
  Matrix coords(n, dim);
  for (int j = 0; j < dim; ++j) {
    const double lambda = std::max(eig.values(j), 0.0);
    coords.col(j) = eig.vectors.col(j) * std::sqrt(lambda);
  }
  return coords;
}

ProcrustesResult procrustes_align(const Matrix& source, const Matrix& target) {
  if (source.rows() != target.rows() || source.cols() != target.cols()) {
    throw NumericError("procrustes_align: shape mismatch");
  }
  if (source.rows() < 1) {
    throw NumericError("procrustes_align: empty input");
  }
  require_finite(source, "procrustes_align");
  require_finite(target, "procrustes_align");

  const Matrix m = source.transpose() * target;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesResult out;
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  out.aligned = source * out.rotation;
  out.residual = (out.aligned - target).norm();
  return out;
}

Matrix SimilarityTransform::apply(const Matrix& pts) const {
  Matrix centered = pts.rowwise() - source_mean.transpose();
  Matrix mapped = scale * (centered * rotation);
  mapped.rowwise() += target_mean.transpose();
  return mapped;
}

SimilarityTransform fit_similarity(const Matrix& source, const Matrix& target,
                                   bool with_scaling) {
  if (source.rows() != target.rows() || source.cols() != target.cols()) {
    throw NumericError("fit_similarity: shape mismatch");
  }
  SimilarityTransform tf;
  tf.source_mean = source.colwise().mean();
  tf.target_mean = target.colwise().mean();
  const Matrix sc = source.rowwise() - tf.source_mean.transpose();
  const Matrix tc = target.rowwise() - tf.target_mean.transpose();
  const ProcrustesResult pr = procrustes_align(sc, tc);
  tf.rotation = pr.rotation;
  tf.scale = 1.0;
  if (with_scaling) {
    const double denom = sc.squaredNorm();
    if (denom > 0.0) {
      // Optimal uniform scale for s * sc * Q vs tc.
      const double num = (sc * pr.rotation).cwiseProduct(tc).sum();
      if (num > 0.0) {
        tf.scale = num / denom;
      }
    }
  }
  return tf;
}

Matrix random_rotation(int d, std::uint64_t seed) {
  if (d < 1) {
    throw NumericError("random_rotation: d must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      g(i, j) = gauss(rng);
    }
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) {
      q.col(j) *= -1.0;
    }
  }
  return q;
}

Coupling sinkhorn(const Matrix& cost, const Vector& mu, const Vector& nu,
                  double epsilon, double tol, int max_iter) {
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  if (mu.size() != n || nu.size() != m) {
    throw NumericError("sinkhorn: marginal sizes do not match cost matrix");
  }
  if (epsilon <= 0.0) {
    throw NumericError("sinkhorn: epsilon must be positive");
  }
  require_finite(cost, "sinkhorn");
  if (std::abs(mu.sum() - 1.0) > 1e-12 || std::abs(nu.sum() - 1.0) > 1e-12) {
    throw NumericError("sinkhorn: marginals must sum to 1");
  }
  if ((mu.array() <= 0.0).any() || (nu.array() <= 0.0).any()) {
    throw NumericError("sinkhorn: marginals must be strictly positive");
  }

  const Vector log_mu = mu.array().log();
  const Vector log_nu = nu.array().log();
  const Matrix log_k = -cost / epsilon;

  Vector f = Vector::Zero(n);  // log u
  Vector g = Vector::Zero(m);  // log v

  auto lse_rows = [&](Vector& out) {
    // out_i = log sum_j exp(log_k(i,j) + g(j))
    for (Eigen::Index i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < m; ++j) {
        mx = std::max(mx, log_k(i, j) + g(j));
      }
      double acc = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        acc += std::exp(log_k(i, j) + g(j) - mx);
      }
      out(i) = mx + std::log(acc);
    }
  };
  auto lse_cols = [&](Vector& out) {
    for (Eigen::Index j = 0; j < m; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        mx = std::max(mx, log_k(i, j) + f(i));
      }
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += std::exp(log_k(i, j) + f(i) - mx);
      }
      out(j) = mx + std::log(acc);
    }
  };

  auto assemble = [&]() {
    Matrix plan(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        plan(i, j) = std::exp(f(i) + log_k(i, j) + g(j));
      }
    }
    return plan;
  };
  auto marginal_error = [&](const Matrix& plan) {
    const double row_err = (plan.rowwise().sum() - mu).cwiseAbs().sum();
    const double col_err =
        (plan.colwise().sum().transpose() - nu).cwiseAbs().sum();
    return row_err + col_err;
  };

  Vector scratch_n(n), scratch_m(m);
  Coupling out;
  out.row_marginal = mu;
  out.col_marginal = nu;
  for (int it = 0; it < max_iter; ++it) {
    lse_rows(scratch_n);
    f = log_mu - scratch_n;
    lse_cols(scratch_m);
    g = log_nu - scratch_m;

    if (it % 10 == 9 || it == max_iter - 1) {
      const Matrix plan = assemble();
      const double err = marginal_error(plan);
      if (err <= tol) {
        out.values = plan;
        out.iterations = it + 1;
        out.marginal_error = err;
        return out;
      }
    }
  }

  const Matrix plan = assemble();
  std::ostringstream oss;
  oss << "sinkhorn: failed to reach tol " << tol << " within " << max_iter
      << " iterations (achieved marginal error " << marginal_error(plan)
      << ")";
  throw NumericError(oss.str());
}

DistanceMatrix pairwise_distances(const Matrix& points) {
  const Eigen::Index n = points.rows();
  const Vector sq = points.rowwise().squaredNorm();
  Matrix d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
              2.0 * (points * points.transpose());
  DistanceMatrix out;
  out.values = d2.cwiseMax(0.0).cwiseSqrt();
  out.values.diagonal().setZero();
  // Gram-trick asymmetry is at rounding level; make symmetry exact.
  out.values = 0.5 * (out.values + out.values.transpose()).eval();
  out.metric_tag = "euclidean";
  return out;
}

}  // namespace gma
