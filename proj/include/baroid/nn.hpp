#pragma once

#include "baroid/pca.hpp"
#include "baroid/rng.hpp"
#include "baroid/types.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace baroid {

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

enum class Activation { kRelu, kSoftplus, kSelu };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kSoftplus: return "softplus";
    case Activation::kSelu: return "selu";
  }
  return "unknown";
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "softplus") return Activation::kSoftplus;
  if (name == "selu") return Activation::kSelu;
  throw InvalidParams("unknown activation '" + name + "'");
}

namespace detail {

inline constexpr Scalar kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr Scalar kSeluAlpha = 1.6732632423543772848170429916717;

inline Scalar activate(Activation a, Scalar z) {
  switch (a) {
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kSoftplus:
      // overflow-safe log(1 + e^z)
      return z > 30.0 ? z : std::log1p(std::exp(z));
    case Activation::kSelu:
      return z > 0.0 ? kSeluLambda * z : kSeluLambda * kSeluAlpha * std::expm1(z);
  }
  return z;
}

// Derivative recovered from the activation value, so the forward pass only
// needs to cache activations.
inline Scalar activation_slope(Activation a, Scalar value) {
  switch (a) {
    case Activation::kRelu:
      return value > 0.0 ? 1.0 : 0.0;
    case Activation::kSoftplus:
      return 1.0 - std::exp(-value);  // sigmoid(z) given value = softplus(z)
    case Activation::kSelu:
      return value > 0.0 ? kSeluLambda : value + kSeluLambda * kSeluAlpha;
  }
  return 1.0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Fully connected network; nonlinearity after every layer except the last.
struct FcnModel {
  std::vector<Index> layer_sizes;
  std::vector<Mat> weights;  // weights[l]: layer_sizes[l+1] x layer_sizes[l]
  std::vector<Vec> biases;
  Activation activation = Activation::kSelu;

  Index n_layers() const { return static_cast<Index>(weights.size()); }
  Index input_size() const { return layer_sizes.front(); }
  Index output_size() const { return layer_sizes.back(); }

  static std::vector<Index> default_layers() { return {50, 500, 1000, 2000, 1000, 500, 7}; }

  bool all_finite() const {
    for (const auto& w : weights) {
      if (!w.allFinite()) return false;
    }
    for (const auto& b : biases) {
      if (!b.allFinite()) return false;
    }
    return true;
  }
};

/// Fan-in-scaled uniform initialization (variance 1/fan_in), seeded.
inline FcnModel init_fcn(const std::vector<Index>& layer_sizes, Activation activation,
                         std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw InvalidParams("network needs at least two layers");
  FcnModel model;
  model.layer_sizes = layer_sizes;
  model.activation = activation;
  SplitMix64 rng(derive_stream(seed, 0x696e6974ull));  // 'init'
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const Index fan_in = layer_sizes[l];
    const Index fan_out = layer_sizes[l + 1];
    if (fan_in < 1 || fan_out < 1) throw InvalidParams("layer sizes must be positive");
    const Scalar limit = std::sqrt(3.0 / static_cast<Scalar>(fan_in));
    Mat w(fan_out, fan_in);
    for (Index j = 0; j < fan_in; ++j) {
      for (Index i = 0; i < fan_out; ++i) w(i, j) = rng.uniform(-limit, limit);
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Vec::Zero(fan_out));
  }
  return model;
}

/// Batched forward pass; samples are columns.  Returns the activations of
/// every layer (front() is the input, back() the network output).
inline std::vector<Mat> forward_cached(const FcnModel& model, const Mat& input) {
  if (input.rows() != model.input_size()) {
    throw DimensionMismatch("input size " + std::to_string(input.rows()) +
                            " does not match first layer " +
                            std::to_string(model.input_size()));
  }
  std::vector<Mat> acts;
  acts.reserve(static_cast<std::size_t>(model.n_layers()) + 1);
  acts.push_back(input);
  for (Index l = 0; l < model.n_layers(); ++l) {
    Mat z = model.weights[static_cast<std::size_t>(l)] * acts.back();
    z.colwise() += model.biases[static_cast<std::size_t>(l)];
    if (l + 1 < model.n_layers()) {
      const Activation a = model.activation;
      z = z.unaryExpr([a](Scalar v) { return detail::activate(a, v); });
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

inline Vec forward(const FcnModel& model, const Vec& input) {
  return forward_cached(model, input).back().col(0);
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

/// Mean over components of the absolute relative error |mu - mu_hat| / |mu|.
inline Scalar sample_loss(const Vec& mu, const Vec& mu_hat) {
  if (mu.size() != mu_hat.size()) throw DimensionMismatch("loss operands differ in length");
  if ((mu.array() == 0.0).any()) throw ZeroTarget("relative loss undefined for zero target");
  return ((mu - mu_hat).array().abs() / mu.array().abs()).mean();
}

/// Arithmetic mean of sample_loss over (target, prediction) pairs.
inline Scalar batch_loss(const std::vector<std::pair<Vec, Vec>>& pairs) {
  if (pairs.empty()) throw EmptyBatch("batch loss of an empty batch");
  Scalar acc = 0.0;
  for (const auto& [mu, mu_hat] : pairs) acc += sample_loss(mu, mu_hat);
  return acc / static_cast<Scalar>(pairs.size());
}

/// Batched loss over columns; targets must be nonzero everywhere.
inline Scalar batch_loss_columns(const Mat& targets, const Mat& predictions) {
  if (targets.rows() != predictions.rows() || targets.cols() != predictions.cols()) {
    throw DimensionMismatch("loss operands differ in shape");
  }
  if (targets.cols() == 0) throw EmptyBatch("batch loss of an empty batch");
  if ((targets.array() == 0.0).any()) throw ZeroTarget("relative loss undefined for zero target");
  return ((targets - predictions).array().abs() / targets.array().abs()).mean();
}

/// Per-output-component mean relative error over a column batch.
inline Vec per_param_loss(const Mat& targets, const Mat& predictions) {
  if (targets.cols() == 0) throw EmptyBatch("per-parameter loss of an empty batch");
  return ((targets - predictions).array().abs() / targets.array().abs())
      .rowwise()
      .mean()
      .matrix();
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

struct Gradients {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
};

/// Reverse-mode gradient of batch_loss over a column batch.  The |.|
/// subgradient is sign(residual), 0 at the kink.
inline Gradients backward(const FcnModel& model, const Mat& inputs, const Mat& targets,
                          Scalar* loss_out = nullptr) {
  if (targets.cols() != inputs.cols()) throw DimensionMismatch("batch inputs/targets differ");
  if (inputs.cols() == 0) throw EmptyBatch("backward over an empty batch");
  if ((targets.array() == 0.0).any()) throw ZeroTarget("relative loss undefined for zero target");

  const std::vector<Mat> acts = forward_cached(model, inputs);
  const Mat& y = acts.back();
  const Index batch = inputs.cols();
  const Scalar denom =
      static_cast<Scalar>(model.output_size()) * static_cast<Scalar>(batch);

  if (loss_out != nullptr) {
    *loss_out = ((targets - y).array().abs() / targets.array().abs()).sum() / denom;
  }

  // dL/dy = sign(y - mu) / (d_mu * batch * |mu|)
  Mat delta = ((y - targets).array().sign() / (targets.array().abs() * denom)).matrix();

  Gradients grads;
  grads.weights.resize(static_cast<std::size_t>(model.n_layers()));
  grads.biases.resize(static_cast<std::size_t>(model.n_layers()));
  for (Index l = model.n_layers() - 1; l >= 0; --l) {
    const std::size_t ul = static_cast<std::size_t>(l);
    grads.weights[ul].noalias() = delta * acts[ul].transpose();
    grads.biases[ul] = delta.rowwise().sum();
    if (l > 0) {
      Mat back = model.weights[ul].transpose() * delta;
      const Activation a = model.activation;
      delta = back.array() *
              acts[ul].array().unaryExpr(
                  [a](Scalar v) { return detail::activation_slope(a, v); });
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
};

struct AdamState {
  std::vector<Mat> m_weights, v_weights;
  std::vector<Vec> m_biases, v_biases;
  std::int64_t step = 0;

  static AdamState zeros_like(const FcnModel& model) {
    AdamState s;
    for (const auto& w : model.weights) {
      s.m_weights.push_back(Mat::Zero(w.rows(), w.cols()));
      s.v_weights.push_back(Mat::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : model.biases) {
      s.m_biases.push_back(Vec::Zero(b.size()));
      s.v_biases.push_back(Vec::Zero(b.size()));
    }
    return s;
  }
};

/// One bias-corrected Adam update, in place.
inline void adam_step(FcnModel& model, const Gradients& grads, AdamState& state,
                      Scalar learning_rate, const AdamConfig& cfg = {}) {
  state.step += 1;
  const Scalar bc1 = 1.0 - std::pow(cfg.beta1, static_cast<Scalar>(state.step));
  const Scalar bc2 = 1.0 - std::pow(cfg.beta2, static_cast<Scalar>(state.step));

  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    auto& m = state.m_weights[l];
    auto& v = state.v_weights[l];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grads.weights[l];
    v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * grads.weights[l].array().square()).matrix();
    model.weights[l].array() -=
        learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.epsilon);

    auto& mb = state.m_biases[l];
    auto& vb = state.v_biases[l];
    mb = cfg.beta1 * mb + (1.0 - cfg.beta1) * grads.biases[l];
    vb = (cfg.beta2 * vb.array() + (1.0 - cfg.beta2) * grads.biases[l].array().square()).matrix();
    model.biases[l].array() -=
        learning_rate * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + cfg.epsilon);
  }
}

// ---------------------------------------------------------------------------
// Target scaling
// ---------------------------------------------------------------------------

/// Per-parameter target scaling applied before training, bringing every
/// component to the same order of magnitude so none is favored by the
/// optimizer.  The default multiplies the four order-one parameters by 1000;
/// the min-max variant maps each sampling interval affinely onto
/// [1000, 2000] (a zero-based range would break the relative loss).
struct ParamScaler {
  Vec7 scale;
  Vec7 offset = Vec7::Zero();

  ParamScaler() { scale << 1000.0, 1000.0, 1000.0, 1.0, 1.0, 1.0, 1000.0; }

  static ParamScaler ones() {
    ParamScaler s;
    s.scale.setOnes();
    return s;
  }

  static ParamScaler minmax(const Vec7& lower, const Vec7& upper) {
    ParamScaler s;
    s.scale = (1000.0 / (upper - lower).array()).matrix();
    s.offset = (1000.0 - s.scale.array() * lower.array()).matrix();
    return s;
  }

  void validate() const {
    if (!(scale.array() > 0.0).all()) throw InvalidParams("scaler entries must be positive");
    if (!offset.allFinite()) throw InvalidParams("scaler offsets must be finite");
  }

  Vec7 apply(const Vec7& mu) const {
    return (mu.array() * scale.array() + offset.array()).matrix();
  }
  Vec7 invert(const Vec7& scaled) const {
    return ((scaled - offset).array() / scale.array()).matrix();
  }
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
  Scalar learning_rate = 1e-3;
  Index batch_size = 64;
  Index epochs = 500;
  AdamConfig adam;
  std::uint64_t seed = 0;
  Index lr_decay_epochs = 100;  // halve the learning rate this often; 0 = never
  std::optional<Index> patience;  // stop after this many epochs without test improvement
  std::vector<Index> layer_sizes = FcnModel::default_layers();
  Activation activation = Activation::kSelu;

  void validate() const {
    if (!(learning_rate > 0.0)) throw InvalidParams("learning rate must be positive");
    if (batch_size < 1) throw InvalidParams("batch size must be >= 1");
    if (epochs < 0) throw InvalidParams("epochs must be >= 0");
  }
};

/// Per-epoch loss record; row 0 is the evaluation of the freshly initialized
/// network.  Per-parameter columns are mean relative errors; avg is their
/// mean, i.e. the optimized loss.
struct LossHistory {
  std::vector<Vec> train_per_param;
  std::vector<Scalar> train_avg;
  std::vector<Vec> test_per_param;  // empty when no held-out set was given
  std::vector<Scalar> test_avg;

  Index n_rows() const { return static_cast<Index>(train_avg.size()); }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    const Index n_out = train_per_param.empty() ? 0 : train_per_param.front().size();
    // material-parameter names for the 7-output identification network,
    // generic names otherwise
    const auto column = [n_out](Index j) {
      return n_out == 7 ? std::string(kParamNames[j]) : "p" + std::to_string(j);
    };
    out << "# epoch";
    for (Index j = 0; j < n_out; ++j) out << ",train_" << column(j);
    out << ",train_avg";
    if (!test_avg.empty()) {
      for (Index j = 0; j < n_out; ++j) out << ",test_" << column(j);
      out << ",test_avg";
    }
    out << '\n';
    char buf[32];
    for (Index r = 0; r < n_rows(); ++r) {
      out << r;
      const auto write_val = [&](Scalar v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
      };
      const std::size_t ur = static_cast<std::size_t>(r);
      for (Index j = 0; j < n_out; ++j) write_val(train_per_param[ur][j]);
      write_val(train_avg[ur]);
      if (!test_avg.empty()) {
        for (Index j = 0; j < n_out; ++j) write_val(test_per_param[ur][j]);
        write_val(test_avg[ur]);
      }
      out << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
  }
};

struct TrainResult {
  FcnModel model;
  LossHistory history;
};

/// Mini-batch Adam on the average relative loss.  Inputs are columns of
/// `train_inputs`; `train_targets` are pre-scaled.  The optional held-out
/// set is evaluated every epoch and never trained on.
inline TrainResult train_fcn(const Mat& train_inputs, const Mat& train_targets,
                             const Mat& test_inputs, const Mat& test_targets,
                             const TrainConfig& config) {
  config.validate();
  const Index n = train_inputs.cols();
  if (n == 0) throw EmptyBatch("training set is empty");
  if (train_targets.cols() != n) throw DimensionMismatch("training inputs/targets differ");
  const bool have_test = test_inputs.cols() > 0;

  TrainResult result;
  result.model = init_fcn(config.layer_sizes, config.activation, config.seed);
  AdamState opt = AdamState::zeros_like(result.model);
  SplitMix64 shuffle_rng(derive_stream(config.seed, 0x73687566ull));  // 'shuf'

  const auto evaluate = [&](Index epoch) {
    const Mat train_pred = forward_cached(result.model, train_inputs).back();
    const Vec train_pp = per_param_loss(train_targets, train_pred);
    result.history.train_per_param.push_back(train_pp);
    result.history.train_avg.push_back(train_pp.mean());
    if (have_test) {
      const Mat test_pred = forward_cached(result.model, test_inputs).back();
      const Vec test_pp = per_param_loss(test_targets, test_pred);
      result.history.test_per_param.push_back(test_pp);
      result.history.test_avg.push_back(test_pp.mean());
    }
    const Scalar check = result.history.train_avg.back();
    if (!std::isfinite(check)) {
      throw NonFiniteLoss("training loss became non-finite at epoch " + std::to_string(epoch),
                          epoch);
    }
  };

  evaluate(0);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  Scalar best_test = std::numeric_limits<Scalar>::infinity();
  Index since_best = 0;

  for (Index epoch = 1; epoch <= config.epochs; ++epoch) {
    Scalar lr = config.learning_rate;
    if (config.lr_decay_epochs > 0) {
      lr *= std::pow(0.5, static_cast<Scalar>((epoch - 1) / config.lr_decay_epochs));
    }

    // Fisher-Yates with the seeded stream keeps runs bit-reproducible.
    for (Index i = n - 1; i > 0; --i) {
      const Index j = static_cast<Index>(shuffle_rng.next_u64() %
                                         static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    for (Index start = 0; start < n; start += config.batch_size) {
      const Index b = std::min(config.batch_size, n - start);
      Mat xb(train_inputs.rows(), b);
      Mat tb(train_targets.rows(), b);
      for (Index c = 0; c < b; ++c) {
        xb.col(c) = train_inputs.col(order[static_cast<std::size_t>(start + c)]);
        tb.col(c) = train_targets.col(order[static_cast<std::size_t>(start + c)]);
      }
      const Gradients grads = backward(result.model, xb, tb);
      adam_step(result.model, grads, opt, lr, config.adam);
    }

    evaluate(epoch);

    if (config.patience && have_test) {
      if (result.history.test_avg.back() < best_test) {
        best_test = result.history.test_avg.back();
        since_best = 0;
      } else if (++since_best >= *config.patience) {
        break;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Prediction and checkpointing
// ---------------------------------------------------------------------------

/// PCA basis, network and scaler bundled; everything needed to go from a
/// stress series to physical-unit parameters.  The digest and split size of
/// the training dataset are recorded so downstream stages can tell held-out
/// samples from training ones.
struct Checkpoint {
  PcaModel pca;
  FcnModel fcn;
  ParamScaler scaler;
  std::uint64_t seed = 0;
  std::string dataset_digest;
  Index n_train = 0;
};

/// series -> PCA coefficients -> network -> unscale.
inline MaterialParams predict(const Checkpoint& ckpt, const Vec& series) {
  const Vec coeffs = pca_transform(ckpt.pca, series);
  const Vec raw = forward(ckpt.fcn, coeffs);
  if (raw.size() != 7) throw DimensionMismatch("network output is not 7-dimensional");
  return MaterialParams::from_vector(ckpt.scaler.invert(Vec7(raw)));
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Container c;
  c.set("kind", "checkpoint");
  c.set_int("version", 1);
  c.set_uint("seed", ckpt.seed);
  c.set("dataset_digest", ckpt.dataset_digest.empty() ? "-" : ckpt.dataset_digest);
  c.set_int("n_train", ckpt.n_train);
  c.set("activation", activation_name(ckpt.fcn.activation));
  std::ostringstream layers;
  for (std::size_t i = 0; i < ckpt.fcn.layer_sizes.size(); ++i) {
    layers << (i ? " " : "") << ckpt.fcn.layer_sizes[i];
  }
  c.set("fcn_layers", layers.str());
  detail::pca_to_container(ckpt.pca, c, "pca_");
  c.append(Vec(ckpt.scaler.scale));
  c.append(Vec(ckpt.scaler.offset));
  for (std::size_t l = 0; l < ckpt.fcn.weights.size(); ++l) {
    c.append_row_major(ckpt.fcn.weights[l]);
    c.append(ckpt.fcn.biases[l]);
  }
  c.write(path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  const Container c = Container::read(path);
  if (c.get("kind") != "checkpoint") {
    throw FormatError(path + ": kind is '" + c.get("kind") + "', expected 'checkpoint'");
  }

  Checkpoint ckpt;
  ckpt.seed = c.get_uint("seed");
  ckpt.dataset_digest = c.get("dataset_digest");
  if (ckpt.dataset_digest == "-") ckpt.dataset_digest.clear();
  ckpt.n_train = c.get_int("n_train");
  std::size_t offset = 0;
  ckpt.pca = detail::pca_from_container(c, "pca_", offset, path);

  ckpt.fcn.activation = activation_from_name(c.get("activation"));
  std::istringstream layers_in(c.get("fcn_layers"));
  Index size = 0;
  while (layers_in >> size) ckpt.fcn.layer_sizes.push_back(size);
  if (ckpt.fcn.layer_sizes.size() < 2) throw FormatError(path + ": malformed fcn_layers");

  const std::vector<Scalar>& data = c.payload();
  const auto take = [&](std::size_t count) {
    if (offset + count > data.size()) {
      throw FormatError(path + ": checkpoint payload truncated at offset " +
                        std::to_string(offset));
    }
    const Scalar* ptr = data.data() + offset;
    offset += count;
    return ptr;
  };

  ckpt.scaler.scale = Eigen::Map<const Vec7>(take(7));
  ckpt.scaler.offset = Eigen::Map<const Vec7>(take(7));
  for (std::size_t l = 0; l + 1 < ckpt.fcn.layer_sizes.size(); ++l) {
    const Index rows = ckpt.fcn.layer_sizes[l + 1];
    const Index cols = ckpt.fcn.layer_sizes[l];
    const std::size_t ucount = static_cast<std::size_t>(rows * cols);
    ckpt.fcn.weights.push_back(
        Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            take(ucount), rows, cols));
    ckpt.fcn.biases.push_back(Eigen::Map<const Vec>(take(static_cast<std::size_t>(rows)), rows));
  }
  c.expect_payload(offset, path);
  return ckpt;
}

}  // namespace baroid
