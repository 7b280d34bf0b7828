#pragma once

#include "gma/types.hpp"

namespace gma {

enum class Activation { Tanh, Relu };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Fully connected network: linear layers with `activation` on hidden
// layers and a linear output.
struct MlpParams {
  std::vector<int> layer_dims;  // input, hidden..., output
  std::vector<Matrix> weights;  // per layer, out x in
  std::vector<Vector> biases;   // per layer, out
  Activation activation = Activation::Tanh;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t layer_count() const { return weights.size(); }
};

Matrix mlp_forward(const MlpParams& net, const Matrix& input);

struct MlpGrads {
  std::vector<Matrix> dw;
  std::vector<Vector> db;
};

// Per-feature standardization parameters fitted on training rows.
struct Scaler {
  Vector mean;
  Vector stddev;  // zero-variance columns pinned to 1

  Matrix transform(const Matrix& rows) const;
  Matrix inverse(const Matrix& rows) const;
};
Scaler fit_scaler(const Matrix& rows);

enum class Domain { X, Y };

struct TwinModel {
  MlpParams encoder_x, decoder_x;
  MlpParams encoder_y, decoder_y;
  int latent_dim = 0;
  double lambda = 10.0;
  Scaler scaler_x, scaler_y;
  std::string embedding_hash;  // provenance of the regularizing embedding
};

enum class Optimizer { SgdMomentum, Adam };

const char* to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 2000;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::Adam;
  int batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  double lambda = 10.0;
  std::optional<double> grad_clip = 10.0;  // global-norm clip per network
  // Extension beyond the independent-training scheme: alternate which AE
  // takes a step each epoch instead of stepping both.
  bool joint_alternating = false;
};

// Loss terms for one epoch. All terms are means of squared Euclidean
// norms; totals satisfy total = recon + lambda*align + anchor exactly.
struct LossReport {
  double recon_x = 0.0, recon_y = 0.0;
  double align_x = 0.0, align_y = 0.0;
  double anchor_x = 0.0, anchor_y = 0.0;
  double total = 0.0;

  double recon() const { return recon_x + recon_y; }
  double align() const { return align_x + align_y; }
  double anchor() const { return anchor_x + anchor_y; }
};

struct TwinGrads {
  MlpGrads encoder_x, decoder_x, encoder_y, decoder_y;
};

// Fan-in-scaled uniform initialization, deterministic per seed. `hidden`
// lists the encoder's hidden widths; the decoder mirrors them.
TwinModel init_twin(int d_x, int d_y, int latent_dim,
                    const std::vector<int>& hidden, std::uint64_t seed);

// Three-term loss and reverse-mode gradients for both autoencoders.
// Batches are in the model's standardized input space; embedding targets
// are row-aligned with the batches. `anchors` index into the batch rows.
// The x-side anchor target for pair (i,j) is ey_targets.row(j), the
// embedding coordinate of x_i's correspondent (and symmetrically for y).
std::pair<LossReport, TwinGrads> loss_and_grads(
    const TwinModel& model, const Matrix& x_batch, const Matrix& y_batch,
    const Matrix& ex_targets, const Matrix& ey_targets,
    const AnchorSet& anchors, double lambda);

// Full training loop over the training pair against a precomputed aligned
// embedding (rows matching the training rows). Returns the per-epoch loss
// history; history[e] is the loss evaluated before update e.
std::vector<LossReport> train_twin(TwinModel& model,
                                   const DomainPair& pair_train,
                                   const AlignedEmbedding& aligned,
                                   const AnchorSet& anchors,
                                   const TrainConfig& cfg);

// Deterministic encoder pass; `points` are in pair units and are run
// through the stored scaler first.
Matrix encode(const TwinModel& model, Domain domain, const Matrix& points);

// Decoder pass; output is inverse-standardized back to pair units.
Matrix decode(const TwinModel& model, Domain domain, const Matrix& coords);

// Decoder swap: g_other(f_from(points)).
Matrix cross_map(const TwinModel& model, Domain from_domain,
                 const Matrix& points);

}  // namespace gma
