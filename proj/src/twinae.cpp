#include "gma/twinae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace gma {

namespace {

Matrix activate(const Matrix& z, Activation act) {
  if (act == Activation::Tanh) return z.array().tanh();
  return z.cwiseMax(0.0);
}

// Derivative expressed through the activation output.
Matrix activate_grad(const Matrix& a, Activation act) {
  if (act == Activation::Tanh) return 1.0 - a.array().square();
  return (a.array() > 0.0).cast<double>();
}

struct ForwardTrace {
  std::vector<Matrix> activations;  // activations[0] = input, back() = output
};

ForwardTrace forward_trace(const MlpParams& net, const Matrix& input) {
  ForwardTrace trace;
  trace.activations.reserve(net.layer_count() + 1);
  trace.activations.push_back(input);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Matrix z = trace.activations.back() * net.weights[l].transpose();
    z.rowwise() += net.biases[l].transpose();
    const bool hidden = l + 1 < net.layer_count();
    trace.activations.push_back(hidden ? activate(z, net.activation)
                                       : std::move(z));
  }
  return trace;
}

// Backpropagate dL/d(output) through the traced network, accumulating
// parameter gradients and returning dL/d(input).
Matrix backprop(const MlpParams& net, const ForwardTrace& trace,
                Matrix delta, MlpGrads& grads) {
  for (int l = static_cast<int>(net.layer_count()) - 1; l >= 0; --l) {
    grads.dw[l] += delta.transpose() * trace.activations[l];
    grads.db[l] += delta.colwise().sum().transpose();
    if (l > 0) {
      delta = (delta * net.weights[l]).cwiseProduct(
          activate_grad(trace.activations[l], net.activation));
    } else {
      delta = delta * net.weights[l];
    }
  }
  return delta;
}

MlpGrads zero_grads(const MlpParams& net) {
  MlpGrads g;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    g.dw.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.db.push_back(Vector::Zero(net.biases[l].size()));
  }
  return g;
}

MlpParams init_mlp(const std::vector<int>& dims, std::mt19937_64& rng) {
  MlpParams net;
  net.layer_dims = dims;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> uni(-bound, bound);
    Matrix w(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) w(r, c) = uni(rng);
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(out));
  }
  return net;
}

// One autoencoder's three-term loss and gradients.
struct SideLoss {
  double recon = 0.0, align = 0.0, anchor = 0.0;
};

SideLoss side_loss_and_grads(const MlpParams& encoder, const MlpParams& decoder,
                             const Matrix& batch, const Matrix& targets,
                             const std::vector<int>& anchor_rows,
                             const Matrix& anchor_targets, double lambda,
                             MlpGrads& enc_grads, MlpGrads& dec_grads) {
  const double n = static_cast<double>(batch.rows());
  const ForwardTrace enc_trace = forward_trace(encoder, batch);
  const Matrix& latent = enc_trace.activations.back();
  const ForwardTrace dec_trace = forward_trace(decoder, latent);
  const Matrix& recon = dec_trace.activations.back();

  if (!latent.allFinite()) {
    throw NumericError("loss_and_grads: non-finite encoder output");
  }
  if (!recon.allFinite()) {
    throw NumericError("loss_and_grads: non-finite decoder output");
  }

  SideLoss loss;
  const Matrix recon_err = recon - batch;
  loss.recon = recon_err.squaredNorm() / n;

  const Matrix align_err = latent - targets;
  loss.align = align_err.squaredNorm() / n;

  Matrix latent_delta = Matrix::Zero(latent.rows(), latent.cols());
  latent_delta += (2.0 * lambda / n) * align_err;

  if (!anchor_rows.empty()) {
    const double na = static_cast<double>(anchor_rows.size());
    for (std::size_t a = 0; a < anchor_rows.size(); ++a) {
      const int row = anchor_rows[a];
      const Vector err =
          latent.row(row).transpose() -
          anchor_targets.row(static_cast<Eigen::Index>(a)).transpose();
      loss.anchor += err.squaredNorm() / na;
      latent_delta.row(row) += (2.0 / na) * err.transpose();
    }
  }

  // Reconstruction path: through the decoder, then into the latent.
  latent_delta += backprop(decoder, dec_trace, (2.0 / n) * recon_err,
                           dec_grads);
  backprop(encoder, enc_trace, std::move(latent_delta), enc_grads);
  return loss;
}

struct AdamState {
  std::vector<Matrix> mw, vw;
  std::vector<Vector> mb, vb;
  long step = 0;
};

AdamState make_adam(const MlpParams& net) {
  AdamState s;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    s.mw.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
    s.vw.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
    s.mb.push_back(Vector::Zero(net.biases[l].size()));
    s.vb.push_back(Vector::Zero(net.biases[l].size()));
  }
  return s;
}

double grads_squared_norm(const MlpGrads& g) {
  double acc = 0.0;
  for (const auto& w : g.dw) acc += w.squaredNorm();
  for (const auto& b : g.db) acc += b.squaredNorm();
  return acc;
}

void clip_network_grads(MlpGrads& enc, MlpGrads& dec, double max_norm) {
  const double norm = std::sqrt(grads_squared_norm(enc) + grads_squared_norm(dec));
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (auto& w : enc.dw) w *= scale;
  for (auto& b : enc.db) b *= scale;
  for (auto& w : dec.dw) w *= scale;
  for (auto& b : dec.db) b *= scale;
}

void adam_update(MlpParams& net, const MlpGrads& g, AdamState& s, double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  s.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(s.step));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    s.mw[l] = beta1 * s.mw[l] + (1.0 - beta1) * g.dw[l];
    s.vw[l] = beta2 * s.vw[l].array() + (1.0 - beta2) * g.dw[l].array().square();
    net.weights[l].array() -=
        lr * (s.mw[l].array() / bc1) /
        ((s.vw[l].array() / bc2).sqrt() + eps);
    s.mb[l] = beta1 * s.mb[l] + (1.0 - beta1) * g.db[l];
    s.vb[l] = beta2 * s.vb[l].array() + (1.0 - beta2) * g.db[l].array().square();
    net.biases[l].array() -=
        lr * (s.mb[l].array() / bc1) /
        ((s.vb[l].array() / bc2).sqrt() + eps);
  }
}

void sgd_update(MlpParams& net, const MlpGrads& g, MlpGrads& velocity,
                double lr) {
  constexpr double momentum = 0.9;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    velocity.dw[l] = momentum * velocity.dw[l] - lr * g.dw[l];
    velocity.db[l] = momentum * velocity.db[l] - lr * g.db[l];
    net.weights[l] += velocity.dw[l];
    net.biases[l] += velocity.db[l];
  }
}

}  // namespace

Matrix mlp_forward(const MlpParams& net, const Matrix& input) {
  if (input.cols() != net.input_dim()) {
    throw NumericError("mlp_forward: input dimension mismatch");
  }
  return forward_trace(net, input).activations.back();
}

Matrix Scaler::transform(const Matrix& rows) const {
  if (rows.cols() != mean.size()) {
    throw NumericError("scaler: dimension mismatch");
  }
  return (rows.rowwise() - mean.transpose()).array().rowwise() /
         stddev.transpose().array();
}

Matrix Scaler::inverse(const Matrix& rows) const {
  if (rows.cols() != mean.size()) {
    throw NumericError("scaler: dimension mismatch");
  }
  return (rows.array().rowwise() * stddev.transpose().array()).matrix()
             .rowwise() +
         mean.transpose();
}

Scaler fit_scaler(const Matrix& rows) {
  Scaler s;
  const double n = static_cast<double>(rows.rows());
  s.mean = rows.colwise().mean();
  s.stddev.resize(rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const double var =
        (rows.col(j).array() - s.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    s.stddev(j) = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

TwinModel init_twin(int d_x, int d_y, int latent_dim,
                    const std::vector<int>& hidden, std::uint64_t seed) {
  if (latent_dim < 1) {
    throw NumericError("init_twin: latent dim must be >= 1");
  }
  auto dims = [&](int in, int out, bool mirror) {
    std::vector<int> v;
    v.push_back(in);
    if (mirror) {
      v.insert(v.end(), hidden.rbegin(), hidden.rend());
    } else {
      v.insert(v.end(), hidden.begin(), hidden.end());
    }
    v.push_back(out);
    return v;
  };
  std::mt19937_64 rng(seed);
  TwinModel model;
  model.latent_dim = latent_dim;
  model.encoder_x = init_mlp(dims(d_x, latent_dim, false), rng);
  model.decoder_x = init_mlp(dims(latent_dim, d_x, true), rng);
  model.encoder_y = init_mlp(dims(d_y, latent_dim, false), rng);
  model.decoder_y = init_mlp(dims(latent_dim, d_y, true), rng);
  model.scaler_x.mean = Vector::Zero(d_x);
  model.scaler_x.stddev = Vector::Ones(d_x);
  model.scaler_y.mean = Vector::Zero(d_y);
  model.scaler_y.stddev = Vector::Ones(d_y);
  return model;
}

std::pair<LossReport, TwinGrads> loss_and_grads(
    const TwinModel& model, const Matrix& x_batch, const Matrix& y_batch,
    const Matrix& ex_targets, const Matrix& ey_targets,
    const AnchorSet& anchors, double lambda) {
  if (ex_targets.rows() != x_batch.rows() ||
      ey_targets.rows() != y_batch.rows()) {
    throw NumericError("loss_and_grads: embedding targets not row-aligned");
  }

  std::vector<int> anchor_x_rows, anchor_y_rows;
  Matrix anchor_x_targets(static_cast<Eigen::Index>(anchors.size()),
                          model.latent_dim);
  Matrix anchor_y_targets(static_cast<Eigen::Index>(anchors.size()),
                          model.latent_dim);
  Eigen::Index a = 0;
  for (const auto& [i, j] : anchors.pairs) {
    if (i < 0 || i >= x_batch.rows() || j < 0 || j >= y_batch.rows()) {
      throw NumericError("loss_and_grads: anchor index outside batch");
    }
    anchor_x_rows.push_back(i);
    anchor_y_rows.push_back(j);
    // Target is the correspondent's precomputed coordinate in the other
    // domain.
    anchor_x_targets.row(a) = ey_targets.row(j);
    anchor_y_targets.row(a) = ex_targets.row(i);
    ++a;
  }

  TwinGrads grads;
  grads.encoder_x = zero_grads(model.encoder_x);
  grads.decoder_x = zero_grads(model.decoder_x);
  grads.encoder_y = zero_grads(model.encoder_y);
  grads.decoder_y = zero_grads(model.decoder_y);

  const SideLoss lx = side_loss_and_grads(
      model.encoder_x, model.decoder_x, x_batch, ex_targets, anchor_x_rows,
      anchor_x_targets, lambda, grads.encoder_x, grads.decoder_x);
  const SideLoss ly = side_loss_and_grads(
      model.encoder_y, model.decoder_y, y_batch, ey_targets, anchor_y_rows,
      anchor_y_targets, lambda, grads.encoder_y, grads.decoder_y);

  LossReport report;
  report.recon_x = lx.recon;
  report.recon_y = ly.recon;
  report.align_x = lx.align;
  report.align_y = ly.align;
  report.anchor_x = lx.anchor;
  report.anchor_y = ly.anchor;
  report.total = report.recon() + lambda * report.align() + report.anchor();
  return {report, std::move(grads)};
}

std::vector<LossReport> train_twin(TwinModel& model,
                                   const DomainPair& pair_train,
                                   const AlignedEmbedding& aligned,
                                   const AnchorSet& anchors,
                                   const TrainConfig& cfg) {
  if (cfg.epochs < 0) {
    throw NumericError("train_twin: epochs must be >= 0");
  }
  if (cfg.learning_rate <= 0.0) {
    throw NumericError("train_twin: learning rate must be positive");
  }
  if (aligned.ex.rows() != pair_train.x.rows() ||
      aligned.ey.rows() != pair_train.y.rows()) {
    throw NumericError("train_twin: aligned embedding rows do not match "
                       "training rows");
  }
  if (aligned.dim != model.latent_dim) {
    throw NumericError("train_twin: embedding dim != model latent dim");
  }
  if (cfg.epochs == 0) {
    return {};
  }

  model.lambda = cfg.lambda;
  model.scaler_x = fit_scaler(pair_train.x);
  model.scaler_y = fit_scaler(pair_train.y);
  const Matrix xs = model.scaler_x.transform(pair_train.x);
  const Matrix ys = model.scaler_y.transform(pair_train.y);

  AdamState adam_ex = make_adam(model.encoder_x);
  AdamState adam_dx = make_adam(model.decoder_x);
  AdamState adam_ey = make_adam(model.encoder_y);
  AdamState adam_dy = make_adam(model.decoder_y);
  MlpGrads vel_ex = zero_grads(model.encoder_x);
  MlpGrads vel_dx = zero_grads(model.decoder_x);
  MlpGrads vel_ey = zero_grads(model.encoder_y);
  MlpGrads vel_dy = zero_grads(model.decoder_y);

  const int n = static_cast<int>(xs.rows());
  const int batch = cfg.batch_size > 0 ? std::min(cfg.batch_size, n) : n;
  std::mt19937_64 rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);

  std::vector<LossReport> history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));

  auto apply = [&](bool update_x, bool update_y, TwinGrads& grads) {
    if (cfg.grad_clip) {
      if (update_x) clip_network_grads(grads.encoder_x, grads.decoder_x,
                                       *cfg.grad_clip);
      if (update_y) clip_network_grads(grads.encoder_y, grads.decoder_y,
                                       *cfg.grad_clip);
    }
    if (cfg.optimizer == Optimizer::Adam) {
      if (update_x) {
        adam_update(model.encoder_x, grads.encoder_x, adam_ex,
                    cfg.learning_rate);
        adam_update(model.decoder_x, grads.decoder_x, adam_dx,
                    cfg.learning_rate);
      }
      if (update_y) {
        adam_update(model.encoder_y, grads.encoder_y, adam_ey,
                    cfg.learning_rate);
        adam_update(model.decoder_y, grads.decoder_y, adam_dy,
                    cfg.learning_rate);
      }
    } else {
      if (update_x) {
        sgd_update(model.encoder_x, grads.encoder_x, vel_ex,
                   cfg.learning_rate);
        sgd_update(model.decoder_x, grads.decoder_x, vel_dx,
                   cfg.learning_rate);
      }
      if (update_y) {
        sgd_update(model.encoder_y, grads.encoder_y, vel_ey,
                   cfg.learning_rate);
        sgd_update(model.decoder_y, grads.decoder_y, vel_dy,
                   cfg.learning_rate);
      }
    }
  };

  TwinModel last_good = model;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const bool update_x = !cfg.joint_alternating || epoch % 2 == 0;
    const bool update_y = !cfg.joint_alternating || epoch % 2 == 1;

    if (batch == n) {
      LossReport report;
      TwinGrads grads;
      try {
        std::tie(report, grads) = loss_and_grads(
            model, xs, ys, aligned.ex, aligned.ey, anchors, cfg.lambda);
      } catch (const NumericError&) {
        model = last_good;
        break;
      }
      if (!std::isfinite(report.total)) {
        model = last_good;
        break;
      }
      history.push_back(report);
      last_good = model;
      apply(update_x, update_y, grads);
    } else {
      // Minibatch mode: epoch loss is accumulated over batches before any
      // update uses that batch, keeping the reported decomposition exact.
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);

      std::vector<int> batch_of(n, -1);
      const int n_batches = (n + batch - 1) / batch;
      for (int i = 0; i < n; ++i) batch_of[order[i]] = i / batch;

      LossReport epoch_report;
      bool diverged = false;
      last_good = model;
      for (int b = 0; b < n_batches && !diverged; ++b) {
        std::vector<int> rows;
        for (int i = 0; i < n; ++i) {
          if (batch_of[i] == b) rows.push_back(i);
        }
        Matrix xb(static_cast<Eigen::Index>(rows.size()), xs.cols());
        Matrix yb(static_cast<Eigen::Index>(rows.size()), ys.cols());
        Matrix exb(static_cast<Eigen::Index>(rows.size()), aligned.ex.cols());
        Matrix eyb(static_cast<Eigen::Index>(rows.size()), aligned.ey.cols());
        std::vector<int> row_in_batch(n, -1);
        for (std::size_t r = 0; r < rows.size(); ++r) {
          xb.row(static_cast<Eigen::Index>(r)) = xs.row(rows[r]);
          yb.row(static_cast<Eigen::Index>(r)) = ys.row(rows[r]);
          exb.row(static_cast<Eigen::Index>(r)) = aligned.ex.row(rows[r]);
          eyb.row(static_cast<Eigen::Index>(r)) = aligned.ey.row(rows[r]);
          row_in_batch[rows[r]] = static_cast<int>(r);
        }
        AnchorSet batch_anchors;
        batch_anchors.fraction = anchors.fraction;
        for (const auto& [i, j] : anchors.pairs) {
          if (row_in_batch[i] >= 0 && row_in_batch[j] >= 0) {
            batch_anchors.pairs.emplace_back(row_in_batch[i],
                                             row_in_batch[j]);
          }
        }
        LossReport report;
        TwinGrads grads;
        try {
          std::tie(report, grads) = loss_and_grads(model, xb, yb, exb, eyb,
                                                   batch_anchors, cfg.lambda);
        } catch (const NumericError&) {
          model = last_good;
          diverged = true;
          break;
        }
        if (!std::isfinite(report.total)) {
          model = last_good;
          diverged = true;
          break;
        }
        const double w =
            static_cast<double>(rows.size()) / static_cast<double>(n);
        epoch_report.recon_x += w * report.recon_x;
        epoch_report.recon_y += w * report.recon_y;
        epoch_report.align_x += w * report.align_x;
        epoch_report.align_y += w * report.align_y;
        epoch_report.anchor_x += w * report.anchor_x;
        epoch_report.anchor_y += w * report.anchor_y;
        apply(update_x, update_y, grads);
      }
      if (diverged) break;
      epoch_report.total = epoch_report.recon() +
                           cfg.lambda * epoch_report.align() +
                           epoch_report.anchor();
      history.push_back(epoch_report);
    }
  }
  return history;
}

Matrix encode(const TwinModel& model, Domain domain, const Matrix& points) {
  const MlpParams& enc =
      domain == Domain::X ? model.encoder_x : model.encoder_y;
  const Scaler& scaler = domain == Domain::X ? model.scaler_x : model.scaler_y;
  if (points.cols() != enc.input_dim()) {
    throw NumericError("encode: point dimension does not match domain");
  }
  return mlp_forward(enc, scaler.transform(points));
}

Matrix decode(const TwinModel& model, Domain domain, const Matrix& coords) {
  const MlpParams& dec =
      domain == Domain::X ? model.decoder_x : model.decoder_y;
  const Scaler& scaler = domain == Domain::X ? model.scaler_x : model.scaler_y;
  if (coords.cols() != model.latent_dim) {
    throw NumericError("decode: coords dimension != latent dim");
  }
  return scaler.inverse(mlp_forward(dec, coords));
}

Matrix cross_map(const TwinModel& model, Domain from_domain,
                 const Matrix& points) {
  const Domain to = from_domain == Domain::X ? Domain::Y : Domain::X;
  return decode(model, to, encode(model, from_domain, points));
}

const char* to_string(Activation a) {
  return a == Activation::Tanh ? "tanh" : "relu";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + s + "'");
}

const char* to_string(Optimizer o) {
  return o == Optimizer::Adam ? "adam" : "sgd_momentum";
}

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "adam") return Optimizer::Adam;
  if (s == "sgd_momentum") return Optimizer::SgdMomentum;
  throw ConfigError("unknown optimizer '" + s + "'");
}

}  // namespace gma
