#pragma once

#include "gma/types.hpp"

#include <functional>

namespace gma {

using WarnFn = std::function<void(const std::string&)>;

// All aligners emit embeddings rescaled to unit coordinate variance (a
// single global factor across both domains); spectral and MDS coordinate
// scales are otherwise arbitrary, which would make the autoencoder's
// alignment loss incomparable across methods.

// Joint-Laplacian alignment: per-domain adaptive kernels bridged by anchor
// edges, embedded with the eigenvectors of the smallest nonzero
// eigenvalues of the normalized joint Laplacian.
AlignedEmbedding align_jlma(const DomainPair& pair, const AnchorSet& anchors,
                            const AlignerConfig& cfg, const WarnFn& warn = nullptr);

// Independent Laplacian-Eigenmaps embeddings aligned with a similarity
// transform (Procrustes on anchor rows, optional uniform scale).
AlignedEmbedding align_mapa(const DomainPair& pair, const AnchorSet& anchors,
                            const AlignerConfig& cfg, const WarnFn& warn = nullptr);

// Shortest paths over the anchored union graph with -log affinity edge
// lengths, embedded by classical MDS.
AlignedEmbedding align_spud(const DomainPair& pair, const AnchorSet& anchors,
                            const AlignerConfig& cfg, const WarnFn& warn = nullptr);

// Multi-step diffusion over the anchored joint graph; diffusion distances
// embedded by classical MDS.
AlignedEmbedding align_mash(const DomainPair& pair, const AnchorSet& anchors,
                            const AlignerConfig& cfg, const WarnFn& warn = nullptr);

// Per-domain diffusion profiles restricted to anchor columns feed an
// entropic-OT coupling; within-domain diffusion distances and
// coupling-derived cross distances are embedded together by classical MDS.
AlignedEmbedding align_dta(const DomainPair& pair, const AnchorSet& anchors,
                           const AlignerConfig& cfg, const WarnFn& warn = nullptr);

AlignedEmbedding run_aligner(AlignMethod method, const DomainPair& pair,
                             const AnchorSet& anchors, const AlignerConfig& cfg,
                             const WarnFn& warn = nullptr);

// Weighted-average projection: projected(i,.) = sum_j w(i,j) targets(j,.).
// Rows are renormalized to sum to 1; an all-zero row is an error.
Matrix barycentric_project(const Matrix& weights, const Matrix& targets);

// The X-rows x Y-columns block of the powered joint diffusion operator,
// used as MASH's cross-domain projection weights.
Matrix mash_cross_weights(const DomainPair& pair, const AnchorSet& anchors,
                          const AlignerConfig& cfg);

// DTA's coupling between X and Y rows (uniform marginals).
Coupling dta_coupling(const DomainPair& pair, const AnchorSet& anchors,
                      const AlignerConfig& cfg);

}  // namespace gma
