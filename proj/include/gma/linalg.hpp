#pragma once

#include "gma/types.hpp"

namespace gma {

enum class EigOrder { Smallest, Largest };

struct EigResult {
  Vector values;   // k, sorted per requested order
  Matrix vectors;  // n x k, orthonormal columns
};

// Symmetric eigendecomposition. A is symmetrized internally but must be
// symmetric within 1e-8 to begin with.
EigResult sym_eig(const Matrix& a, int k, EigOrder order);

// Classical MDS: double-center the squared distances and embed with the
// top-`dim` eigenpairs, clamping negative eigenvalues to zero.
Matrix classical_mds(const DistanceMatrix& d, int dim);

struct ProcrustesResult {
  Matrix rotation;  // m x m orthogonal (reflections allowed)
  Matrix aligned;   // source * rotation
  double residual;  // ||aligned - target||_F
};

// argmin over orthogonal Q of ||source*Q - target||_F.
ProcrustesResult procrustes_align(const Matrix& source, const Matrix& target);

// Similarity transform s*(source - mu_s)*Q + mu_t fitted on corresponding
// rows; used by MAPA. `with_scaling` toggles the uniform scale factor.
struct SimilarityTransform {
  Matrix rotation;
  Vector source_mean;
  Vector target_mean;
  double scale = 1.0;

  Matrix apply(const Matrix& pts) const;
};
SimilarityTransform fit_similarity(const Matrix& source, const Matrix& target,
                                   bool with_scaling);

// Haar-ish random orthogonal matrix via QR of a Gaussian matrix, sign-fixed
// so R has a positive diagonal.
Matrix random_rotation(int d, std::uint64_t seed);

// Log-domain Sinkhorn for entropic optimal transport. Marginals must sum
// to 1 within 1e-12. Throws NumericError when the marginal residual does
// not reach `tol` within `max_iter` iterations.
Coupling sinkhorn(const Matrix& cost, const Vector& mu, const Vector& nu,
                  double epsilon, double tol, int max_iter);

// Pairwise Euclidean distances between rows.
DistanceMatrix pairwise_distances(const Matrix& points);

}  // namespace gma
