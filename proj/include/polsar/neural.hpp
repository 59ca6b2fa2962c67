#pragma once

// Dense feed-forward networks with tanh activations, sparse-autoencoder
// losses with hand-written backpropagation, and a softmax classifier head.
// Samples are stored column-wise: a batch is an (input dim x N) matrix.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "polsar/error.hpp"

namespace polsar::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Activation { Tanh, Linear };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;  // out x in
  Vector<Scalar> bias;     // out
  Activation activation = Activation::Tanh;

  DenseLayer() = default;
  DenseLayer(int in, int out, Activation act = Activation::Tanh)
      : weights(Matrix<Scalar>::Zero(out, in)), bias(Vector<Scalar>::Zero(out)), activation(act) {}

  int in_dim() const { return static_cast<int>(weights.cols()); }
  int out_dim() const { return static_cast<int>(weights.rows()); }

  Matrix<Scalar> pre_activation(const Matrix<Scalar>& x) const {
    return (weights * x).colwise() + bias;
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x) const {
    if (x.rows() != weights.cols()) {
      fail(ErrorCode::ShapeMismatch, "layer expects " + std::to_string(in_dim()) + " inputs, got " +
                                         std::to_string(x.rows()));
    }
    Matrix<Scalar> z = pre_activation(x);
    if (activation == Activation::Tanh) z = z.array().tanh().matrix();
    return z;
  }

  bool all_finite() const { return weights.allFinite() && bias.allFinite(); }
  bool operator==(const DenseLayer&) const = default;
};

/// Ordered stack of dense layers.
template <typename Scalar>
struct FeedForward {
  std::vector<DenseLayer<Scalar>> layers;

  int in_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  int out_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  Matrix<Scalar> operator()(const Matrix<Scalar>& x) const {
    Matrix<Scalar> a = x;
    for (const auto& layer : layers) a = layer.forward(a);
    return a;
  }

  bool operator==(const FeedForward&) const = default;
};

/// Coefficients of the sparse-autoencoder objective
///   l2 * sum ||W||^2 + reconstruction * (1/N) sum ||x - x'||^2
///     + sparsity * sum_t KL(rho || rho_t).
template <typename Scalar>
struct SparseAeWeights {
  Scalar reconstruction = 1;
  Scalar l2 = Scalar(1e-4);
  Scalar sparsity = Scalar(0.1);
  Scalar rho = Scalar(0.15);

  bool operator==(const SparseAeWeights&) const = default;
};

template <typename Scalar>
struct SparseAutoencoder {
  FeedForward<Scalar> encoder;
  FeedForward<Scalar> decoder;
  SparseAeWeights<Scalar> weights;

  int input_dim() const { return encoder.in_dim(); }
  int code_dim() const { return encoder.out_dim(); }

  /// Decoder mirrors the encoder shapes; rho lies in (0, 1).
  void validate() const {
    if (encoder.layers.empty() || decoder.layers.empty()) fail(ErrorCode::ShapeMismatch, "autoencoder has no layers");
    if (decoder.in_dim() != encoder.out_dim() || decoder.out_dim() != encoder.in_dim()) {
      fail(ErrorCode::ShapeMismatch, "decoder shape does not mirror encoder");
    }
    auto chain = [](const FeedForward<Scalar>& net) {
      for (std::size_t i = 1; i < net.layers.size(); ++i) {
        if (net.layers[i].in_dim() != net.layers[i - 1].out_dim()) return false;
      }
      return true;
    };
    if (!chain(encoder) || !chain(decoder)) fail(ErrorCode::ShapeMismatch, "layer dimensions do not chain");
    if (!(weights.rho > Scalar(0) && weights.rho < Scalar(1))) fail(ErrorCode::InvalidArgument, "rho must lie in (0,1)");
  }

  bool operator==(const SparseAutoencoder&) const = default;
};

struct TrainConfig {
  double step_size = 0.01;
  int batch_size = 64;
  int epochs = 200;
  std::uint64_t seed = 1;
  /// Half-width of the uniform weight initialization; <= 0 selects 1/sqrt(fan_in).
  double init_scale = 0;

  void validate() const {
    if (!(step_size > 0)) fail(ErrorCode::InvalidArgument, "step size must be > 0");
    if (batch_size < 1) fail(ErrorCode::InvalidArgument, "batch size must be >= 1");
    if (epochs < 0) fail(ErrorCode::InvalidArgument, "epochs must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Construction

template <typename Scalar>
void initialize(DenseLayer<Scalar>& layer, std::mt19937_64& rng, double init_scale) {
  const double scale = init_scale > 0 ? init_scale : 1.0 / std::sqrt(static_cast<double>(layer.in_dim()));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) layer.weights(i, j) = static_cast<Scalar>(u(rng));
  }
  layer.bias.setZero();
}

/// Autoencoder with encoder sizes e.g. {99, 32, 5} and a mirrored decoder,
/// all tanh, initialized from `seed`.
template <typename Scalar>
SparseAutoencoder<Scalar> make_autoencoder(const std::vector<int>& encoder_sizes, const SparseAeWeights<Scalar>& w,
                                           std::uint64_t seed, double init_scale = 0) {
  if (encoder_sizes.size() < 2) fail(ErrorCode::ShapeMismatch, "autoencoder needs at least input and code sizes");
  SparseAutoencoder<Scalar> ae;
  ae.weights = w;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 1; i < encoder_sizes.size(); ++i) {
    ae.encoder.layers.emplace_back(encoder_sizes[i - 1], encoder_sizes[i]);
    initialize(ae.encoder.layers.back(), rng, init_scale);
  }
  for (std::size_t i = encoder_sizes.size() - 1; i > 0; --i) {
    ae.decoder.layers.emplace_back(encoder_sizes[i], encoder_sizes[i - 1]);
    initialize(ae.decoder.layers.back(), rng, init_scale);
  }
  ae.validate();
  return ae;
}

// ---------------------------------------------------------------------------
// Forward passes

template <typename Scalar>
Matrix<Scalar> encode(const SparseAutoencoder<Scalar>& ae, const Matrix<Scalar>& x) {
  return ae.encoder(x);
}

template <typename Scalar>
Matrix<Scalar> decode(const SparseAutoencoder<Scalar>& ae, const Matrix<Scalar>& h) {
  return ae.decoder(h);
}

// ---------------------------------------------------------------------------
// Sparsity penalty

inline constexpr double kRhoClampLow = 1e-6;
inline constexpr double kRhoClampHigh = 1 - 1e-6;

/// KL(rho || rho_t) between Bernoulli means; rho_t is clamped to
/// [1e-6, 1 - 1e-6].
template <typename Scalar>
Scalar kl_sparsity(Scalar rho, Scalar rho_t) {
  rho_t = std::clamp(rho_t, Scalar(kRhoClampLow), Scalar(kRhoClampHigh));
  return rho * std::log(rho / rho_t) + (Scalar(1) - rho) * std::log((Scalar(1) - rho) / (Scalar(1) - rho_t));
}

/// Mean activation per hidden unit after remapping tanh output to [0, 1]
/// via (h + 1) / 2. Not clamped.
template <typename Scalar>
Vector<Scalar> mean_remapped_activation(const Matrix<Scalar>& h) {
  return ((h.array() + Scalar(1)) / Scalar(2)).rowwise().mean().matrix();
}

// ---------------------------------------------------------------------------
// Losses and gradients

template <typename Scalar>
struct LossBreakdown {
  Scalar total{};
  Scalar l2{};
  Scalar reconstruction{};
  Scalar sparsity{};
};

template <typename Scalar>
struct LayerGradient {
  Matrix<Scalar> weights;
  Vector<Scalar> bias;
};

/// Gradients for every layer in forward order (encoder then decoder).
template <typename Scalar>
struct Gradients {
  LossBreakdown<Scalar> loss;
  std::vector<LayerGradient<Scalar>> layers;
};

namespace detail {

template <typename Scalar>
Scalar weight_l2(const FeedForward<Scalar>& net) {
  Scalar s = 0;
  for (const auto& l : net.layers) s += l.weights.squaredNorm();
  return s;
}

}  // namespace detail

/// Evaluates the sparse-autoencoder objective on a batch (columns).
template <typename Scalar>
LossBreakdown<Scalar> sparse_ae_loss(const SparseAutoencoder<Scalar>& ae, const Matrix<Scalar>& batch) {
  if (batch.cols() == 0) fail(ErrorCode::InvalidArgument, "empty batch");
  const auto& w = ae.weights;
  const Matrix<Scalar> h = encode(ae, batch);
  const Matrix<Scalar> recon = decode(ae, h);
  const Scalar n = static_cast<Scalar>(batch.cols());

  LossBreakdown<Scalar> out;
  out.l2 = w.l2 * (detail::weight_l2(ae.encoder) + detail::weight_l2(ae.decoder));
  out.reconstruction = w.reconstruction * (batch - recon).squaredNorm() / n;
  const Vector<Scalar> rho_t = mean_remapped_activation(h);
  for (Eigen::Index t = 0; t < rho_t.size(); ++t) out.sparsity += kl_sparsity(w.rho, rho_t(t));
  out.sparsity *= w.sparsity;
  out.total = out.l2 + out.reconstruction + out.sparsity;
  return out;
}

/// Objective of the two-layer first-stage autoencoder (coefficients
/// beta = l2, alpha = reconstruction, gamma = sparsity).
template <typename Scalar>
LossBreakdown<Scalar> loss_j1(const SparseAutoencoder<Scalar>& ae, const Matrix<Scalar>& batch) {
  return sparse_ae_loss(ae, batch);
}

/// Objective of the single-layer second-stage autoencoder (coefficients
/// beta = l2, lambda = reconstruction, alpha = sparsity).
template <typename Scalar>
LossBreakdown<Scalar> loss_j2(const SparseAutoencoder<Scalar>& ae, const Matrix<Scalar>& batch) {
  if (ae.encoder.layers.size() != 1 || ae.decoder.layers.size() != 1) {
    fail(ErrorCode::ShapeMismatch, "second-stage autoencoder must have one encoder and one decoder layer");
  }
  return sparse_ae_loss(ae, batch);
}

/// Backpropagation of sparse_ae_loss. The KL term contributes
/// sparsity * dKL/drho_t / (2N) to each code unit's gradient; it is zero
/// where rho_t sits at a clamp.
template <typename Scalar>
Gradients<Scalar> sparse_ae_gradients(const SparseAutoencoder<Scalar>& ae, const Matrix<Scalar>& batch) {
  if (batch.rows() != ae.input_dim()) fail(ErrorCode::ShapeMismatch, "batch dimension does not match autoencoder");
  if (batch.cols() == 0) fail(ErrorCode::InvalidArgument, "empty batch");
  const auto& w = ae.weights;
  const Scalar n = static_cast<Scalar>(batch.cols());

  std::vector<const DenseLayer<Scalar>*> layers;
  for (const auto& l : ae.encoder.layers) layers.push_back(&l);
  for (const auto& l : ae.decoder.layers) layers.push_back(&l);
  const std::size_t code_index = ae.encoder.layers.size();  // activations[code_index] is h

  std::vector<Matrix<Scalar>> activations{batch};
  for (const auto* l : layers) activations.push_back(l->forward(activations.back()));
  const Matrix<Scalar>& h = activations[code_index];
  const Matrix<Scalar>& out = activations.back();

  Gradients<Scalar> g;
  g.loss.l2 = w.l2 * (detail::weight_l2(ae.encoder) + detail::weight_l2(ae.decoder));
  g.loss.reconstruction = w.reconstruction * (batch - out).squaredNorm() / n;
  const Vector<Scalar> rho_t = mean_remapped_activation(h);
  Vector<Scalar> kl_slope(rho_t.size());
  for (Eigen::Index t = 0; t < rho_t.size(); ++t) {
    g.loss.sparsity += kl_sparsity(w.rho, rho_t(t));
    const bool clamped = rho_t(t) < Scalar(kRhoClampLow) || rho_t(t) > Scalar(kRhoClampHigh);
    kl_slope(t) = clamped ? Scalar(0) : -w.rho / rho_t(t) + (Scalar(1) - w.rho) / (Scalar(1) - rho_t(t));
  }
  g.loss.sparsity *= w.sparsity;
  g.loss.total = g.loss.l2 + g.loss.reconstruction + g.loss.sparsity;

  g.layers.resize(layers.size());
  Matrix<Scalar> upstream = (out - batch) * (Scalar(2) * w.reconstruction / n);  // dL/d(output)
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& layer = *layers[li];
    const Matrix<Scalar>& a_out = activations[li + 1];
    const Matrix<Scalar>& a_in = activations[li];
    Matrix<Scalar> delta = upstream;
    if (layer.activation == Activation::Tanh) delta.array() *= (Scalar(1) - a_out.array().square());
    g.layers[li].weights = delta * a_in.transpose() + Scalar(2) * w.l2 * layer.weights;
    g.layers[li].bias = delta.rowwise().sum();
    if (li > 0) {
      upstream = layer.weights.transpose() * delta;
      if (li == code_index) {
        upstream.colwise() += kl_slope * (w.sparsity / (Scalar(2) * n));
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Softmax classifier

template <typename Scalar>
struct SoftmaxClassifier {
  DenseLayer<Scalar> layer{0, 0, Activation::Linear};
  Scalar l2 = Scalar(1e-4);

  int class_count() const { return layer.out_dim(); }
  bool operator==(const SoftmaxClassifier&) const = default;
};

template <typename Scalar>
SoftmaxClassifier<Scalar> make_softmax(int in_dim, int classes, Scalar l2, std::uint64_t seed, double init_scale = 0) {
  SoftmaxClassifier<Scalar> clf;
  clf.layer = DenseLayer<Scalar>(in_dim, classes, Activation::Linear);
  clf.l2 = l2;
  std::mt19937_64 rng(seed);
  initialize(clf.layer, rng, init_scale);
  return clf;
}

/// Column-wise softmax with max subtraction.
template <typename Scalar>
Matrix<Scalar> softmax(const Matrix<Scalar>& logits) {
  Matrix<Scalar> p = logits.rowwise() - logits.colwise().maxCoeff();
  p = p.array().exp().matrix();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

/// Class probabilities, one column per sample.
template <typename Scalar>
Matrix<Scalar> softmax_predict(const SoftmaxClassifier<Scalar>& clf, const Matrix<Scalar>& x) {
  if (x.rows() != clf.layer.in_dim()) fail(ErrorCode::ShapeMismatch, "classifier input dimension mismatch");
  return softmax<Scalar>(clf.layer.pre_activation(x));
}

/// Labels are 1..C.
template <typename Scalar>
void check_labels(const std::vector<int>& labels, Eigen::Index samples, int classes) {
  if (static_cast<Eigen::Index>(labels.size()) != samples) fail(ErrorCode::ShapeMismatch, "label count mismatch");
  for (int y : labels) {
    if (y < 1 || y > classes) fail(ErrorCode::InvalidArgument, "label " + std::to_string(y) + " outside 1..C");
  }
}

/// Mean cross-entropy plus l2 * ||W||^2.
template <typename Scalar>
Gradients<Scalar> softmax_gradients(const SoftmaxClassifier<Scalar>& clf, const Matrix<Scalar>& x,
                                    const std::vector<int>& labels) {
  check_labels<Scalar>(labels, x.cols(), clf.class_count());
  const Scalar n = static_cast<Scalar>(x.cols());
  Matrix<Scalar> p = softmax_predict(clf, x);
  Gradients<Scalar> g;
  Scalar ce = 0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const int c = labels[i] - 1;
    ce -= std::log(std::max(p(c, i), std::numeric_limits<Scalar>::min()));
    p(c, i) -= Scalar(1);
  }
  g.loss.reconstruction = ce / n;
  g.loss.l2 = clf.l2 * clf.layer.weights.squaredNorm();
  g.loss.total = g.loss.reconstruction + g.loss.l2;
  p /= n;
  g.layers.push_back({p * x.transpose() + Scalar(2) * clf.l2 * clf.layer.weights, p.rowwise().sum()});
  return g;
}

template <typename Scalar>
LossBreakdown<Scalar> softmax_loss(const SoftmaxClassifier<Scalar>& clf, const Matrix<Scalar>& x,
                                   const std::vector<int>& labels) {
  return softmax_gradients(clf, x, labels).loss;
}

// ---------------------------------------------------------------------------
// Mini-batch gradient descent

template <typename Scalar>
struct TrainResult {
  std::vector<LossBreakdown<Scalar>> history;  // one entry per epoch, full-data loss
};

namespace detail {

/// Shared loop: `step(batch_indices)` returns gradients for the model whose
/// parameters are exposed by `params()` in forward order.
template <typename Scalar, typename GradFn, typename ParamFn, typename LossFn>
TrainResult<Scalar> gradient_descent(Eigen::Index samples, const TrainConfig& config, GradFn&& gradients,
                                     ParamFn&& params, LossFn&& full_loss) {
  config.validate();
  if (samples == 0) fail(ErrorCode::InvalidArgument, "training data is empty");
  TrainResult<Scalar> result;
  std::mt19937_64 rng(config.seed ^ 0x5deece66dULL);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(samples));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Scalar step = static_cast<Scalar>(config.step_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      const auto g = gradients(idx);
      auto layers = params();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l]->weights -= step * g.layers[l].weights;
        layers[l]->bias -= step * g.layers[l].bias;
      }
    }
    const auto loss = full_loss();
    if (!std::isfinite(static_cast<double>(loss.total))) {
      fail(ErrorCode::DivergenceDetected, "loss became non-finite at epoch " + std::to_string(epoch + 1));
    }
    for (auto* l : params()) {
      if (!l->all_finite()) fail(ErrorCode::DivergenceDetected, "parameters became non-finite");
    }
    result.history.push_back(loss);
  }
  return result;
}

template <typename Scalar>
Matrix<Scalar> gather(const Matrix<Scalar>& data, const std::vector<Eigen::Index>& idx) {
  Matrix<Scalar> out(data.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = data.col(idx[i]);
  return out;
}

}  // namespace detail

/// Trains `ae` in place on the columns of `data`. Shuffling is driven by
/// config.seed; identical inputs give bit-identical parameters.
template <typename Scalar>
TrainResult<Scalar> train(SparseAutoencoder<Scalar>& ae, const Matrix<Scalar>& data, const TrainConfig& config) {
  ae.validate();
  if (data.rows() != ae.input_dim()) fail(ErrorCode::ShapeMismatch, "training data dimension mismatch");
  auto params = [&ae] {
    std::vector<DenseLayer<Scalar>*> p;
    for (auto& l : ae.encoder.layers) p.push_back(&l);
    for (auto& l : ae.decoder.layers) p.push_back(&l);
    return p;
  };
  return detail::gradient_descent<Scalar>(
      data.cols(), config,
      [&](const std::vector<Eigen::Index>& idx) { return sparse_ae_gradients(ae, detail::gather(data, idx)); }, params,
      [&] { return sparse_ae_loss(ae, data); });
}

template <typename Scalar>
TrainResult<Scalar> softmax_train(SoftmaxClassifier<Scalar>& clf, const Matrix<Scalar>& features,
                                  const std::vector<int>& labels, const TrainConfig& config) {
  check_labels<Scalar>(labels, features.cols(), clf.class_count());
  if (features.rows() != clf.layer.in_dim()) fail(ErrorCode::ShapeMismatch, "classifier input dimension mismatch");
  auto params = [&clf] { return std::vector<DenseLayer<Scalar>*>{&clf.layer}; };
  return detail::gradient_descent<Scalar>(
      features.cols(), config,
      [&](const std::vector<Eigen::Index>& idx) {
        std::vector<int> y(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) y[i] = labels[static_cast<std::size_t>(idx[i])];
        return softmax_gradients(clf, detail::gather(features, idx), y);
      },
      params, [&] { return softmax_loss(clf, features, labels); });
}

/// Index of the most probable class per column, reported as 1..C.
template <typename Scalar>
std::vector<int> argmax_classes(const Matrix<Scalar>& probabilities) {
  std::vector<int> out(static_cast<std::size_t>(probabilities.cols()));
  for (Eigen::Index i = 0; i < probabilities.cols(); ++i) {
    Eigen::Index best = 0;
    probabilities.col(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
  }
  return out;
}

}  // namespace polsar::nn
