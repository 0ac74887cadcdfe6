#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chainlens/error.hpp"
#include "chainlens/rng.hpp"

namespace chainlens {

enum class Activation { ReLU, Tanh, Sigmoid, Identity };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Identity: return "identity";
  }
  fail(Errc::config, "unknown activation");
}

inline Eigen::MatrixXd apply_activation(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::ReLU: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Sigmoid: return (1.0 / (1.0 + (-z.array()).exp())).matrix();
    case Activation::Identity: return z;
  }
  fail(Errc::config, "unknown activation");
}

// Derivative expressed in terms of the activation output; for ReLU the
// output-positivity test matches the pre-activation sign.
inline Eigen::MatrixXd activation_grad_from_output(Activation a, const Eigen::MatrixXd& y) {
  switch (a) {
    case Activation::ReLU:
      return (y.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh: return (1.0 - y.array().square()).matrix();
    case Activation::Sigmoid: return (y.array() * (1.0 - y.array())).matrix();
    case Activation::Identity: return Eigen::MatrixXd::Ones(y.rows(), y.cols());
  }
  fail(Errc::config, "unknown activation");
}

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::Identity;

  Eigen::Index in_width() const { return weight.cols(); }
  Eigen::Index out_width() const { return weight.rows(); }
};

inline DenseLayer make_dense(Eigen::Index out, Eigen::Index in, Activation act, Rng& rng) {
  require(out >= 1 && in >= 1, Errc::config, "layer widths must be >= 1");
  DenseLayer layer;
  layer.weight.resize(out, in);
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (Eigen::Index c = 0; c < in; ++c)
    for (Eigen::Index r = 0; r < out; ++r) layer.weight(r, c) = rng.uniform(-bound, bound);
  layer.bias = Eigen::VectorXd::Zero(out);
  layer.activation = act;
  return layer;
}

struct Mlp {
  std::vector<DenseLayer> layers;

  Eigen::Index in_width() const { return layers.empty() ? 0 : layers.front().in_width(); }
  Eigen::Index out_width() const { return layers.empty() ? 0 : layers.back().out_width(); }

  void check_chained() const {
    for (std::size_t i = 1; i < layers.size(); ++i)
      require(layers[i].in_width() == layers[i - 1].out_width(), Errc::shape,
              "layer " + std::to_string(i) + " input width " +
                  std::to_string(layers[i].in_width()) + " != previous output width " +
                  std::to_string(layers[i - 1].out_width()));
  }
};

inline Mlp make_mlp(const std::vector<Eigen::Index>& widths,
                    const std::vector<Activation>& activations, Rng& rng) {
  require(widths.size() >= 2, Errc::config, "mlp needs at least one layer");
  require(activations.size() == widths.size() - 1, Errc::config,
          "one activation per layer required");
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    mlp.layers.push_back(make_dense(widths[i + 1], widths[i], activations[i], rng));
  return mlp;
}

// Forward cache: layer inputs and activation outputs, enough to replay the
// chain in reverse. Inputs are column-per-item matrices.
struct MlpCache {
  std::vector<Eigen::MatrixXd> inputs;   // inputs[i]: in_i x batch
  std::vector<Eigen::MatrixXd> outputs;  // outputs[i]: out_i x batch
};

inline Eigen::MatrixXd mlp_forward(const Mlp& mlp, const Eigen::MatrixXd& input,
                                   MlpCache* cache = nullptr) {
  require(!mlp.layers.empty(), Errc::shape, "mlp has no layers");
  require(input.rows() == mlp.in_width(), Errc::shape,
          "mlp input width " + std::to_string(input.rows()) + " != expected " +
              std::to_string(mlp.in_width()));
  if (cache) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  Eigen::MatrixXd x = input;
  for (const DenseLayer& layer : mlp.layers) {
    if (cache) cache->inputs.push_back(x);
    Eigen::MatrixXd z = layer.weight * x;
    z.colwise() += layer.bias;
    x = apply_activation(layer.activation, z);
    if (cache) cache->outputs.push_back(x);
  }
  return x;
}

inline Eigen::VectorXd mlp_forward(const Mlp& mlp, const Eigen::VectorXd& input,
                                   MlpCache* cache = nullptr) {
  return mlp_forward(mlp, Eigen::MatrixXd(input), cache).col(0);
}

struct MlpGrads {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
};

inline MlpGrads zero_grads(const Mlp& mlp) {
  MlpGrads g;
  for (const DenseLayer& layer : mlp.layers) {
    g.weight.emplace_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
    g.bias.emplace_back(Eigen::VectorXd::Zero(layer.bias.size()));
  }
  return g;
}

inline void accumulate(MlpGrads& into, const MlpGrads& from, double scale = 1.0) {
  require(into.weight.size() == from.weight.size(), Errc::shape, "gradient layer count mismatch");
  for (std::size_t i = 0; i < into.weight.size(); ++i) {
    into.weight[i] += scale * from.weight[i];
    into.bias[i] += scale * from.bias[i];
  }
}

// Reverse-mode pass. `upstream` is dL/d(output), column per item; returns
// dL/d(input) and fills parameter gradients (summed over the batch).
inline Eigen::MatrixXd mlp_backward(const Mlp& mlp, const MlpCache& cache,
                                    const Eigen::MatrixXd& upstream, MlpGrads& grads) {
  require(cache.inputs.size() == mlp.layers.size() && cache.outputs.size() == mlp.layers.size(),
          Errc::stale_cache, "cache does not match mlp layer count");
  require(grads.weight.size() == mlp.layers.size(), Errc::shape, "grads not sized for mlp");
  require(upstream.rows() == mlp.out_width() && upstream.cols() == cache.outputs.back().cols(),
          Errc::shape, "upstream gradient shape mismatch");
  Eigen::MatrixXd dy = upstream;
  for (std::size_t i = mlp.layers.size(); i-- > 0;) {
    const DenseLayer& layer = mlp.layers[i];
    require(cache.inputs[i].rows() == layer.in_width() &&
                cache.outputs[i].rows() == layer.out_width(),
            Errc::stale_cache, "cache shapes do not match layer " + std::to_string(i));
    const Eigen::MatrixXd dz =
        dy.cwiseProduct(activation_grad_from_output(layer.activation, cache.outputs[i]));
    grads.weight[i] += dz * cache.inputs[i].transpose();
    grads.bias[i] += dz.rowwise().sum();
    dy = layer.weight.transpose() * dz;
  }
  return dy;
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

// Stable cross-entropy over one item; gradient wrt logits = softmax - onehot.
inline std::pair<double, Eigen::VectorXd> softmax_cross_entropy(const Eigen::VectorXd& logits,
                                                                int label) {
  require(label >= 0 && label < logits.size(), Errc::bad_index,
          "class index " + std::to_string(label) + " out of range for " +
              std::to_string(logits.size()) + " logits");
  const double m = logits.maxCoeff();
  const Eigen::ArrayXd shifted = logits.array() - m;
  const double log_z = std::log(shifted.exp().sum());
  const double loss = log_z - shifted(label);
  Eigen::VectorXd grad = (shifted - log_z).exp().matrix();
  grad(label) -= 1.0;
  return {loss, std::move(grad)};
}

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 16;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    require(learning_rate > 0.0, Errc::config, "learning_rate must be > 0");
    require(epochs >= 0, Errc::config, "epochs must be >= 0");
    require(batch_size >= 1, Errc::config, "batch_size must be >= 1");
    if (optimizer == OptimizerKind::Adam) {
      require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, Errc::config,
              "adam betas must be in (0, 1)");
      require(epsilon > 0.0, Errc::config, "adam epsilon must be > 0");
    }
  }
};

// Flat view over one parameter tensor; rank/dims drive serialization.
struct ParamView {
  double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 1;
  int rank = 2;  // 1 for vectors
  std::string path;

  Eigen::Index size() const { return rows * cols; }
};

inline std::vector<ParamView> mlp_param_views(Mlp& mlp, const std::string& prefix) {
  std::vector<ParamView> views;
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    DenseLayer& l = mlp.layers[i];
    views.push_back({l.weight.data(), l.weight.rows(), l.weight.cols(), 2,
                     prefix + ".layer" + std::to_string(i) + ".weight"});
    views.push_back(
        {l.bias.data(), l.bias.size(), 1, 1, prefix + ".layer" + std::to_string(i) + ".bias"});
  }
  return views;
}

inline std::vector<ParamView> mlp_grad_views(MlpGrads& grads, const std::string& prefix) {
  std::vector<ParamView> views;
  for (std::size_t i = 0; i < grads.weight.size(); ++i) {
    views.push_back({grads.weight[i].data(), grads.weight[i].rows(), grads.weight[i].cols(), 2,
                     prefix + ".layer" + std::to_string(i) + ".weight"});
    views.push_back({grads.bias[i].data(), grads.bias[i].size(), 1, 1,
                     prefix + ".layer" + std::to_string(i) + ".bias"});
  }
  return views;
}

// SGD or bias-corrected Adam over flat parameter views. A non-finite gradient
// aborts the step before any parameter changes.
class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& config) : config_(config) { config_.validate(); }

  void step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads) {
    require(params.size() == grads.size(), Errc::shape,
            "optimizer: parameter/gradient view count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      require(params[i].size() == grads[i].size(), Errc::shape,
              "optimizer: size mismatch at " + params[i].path);
      for (Eigen::Index j = 0; j < grads[i].size(); ++j)
        require(std::isfinite(grads[i].data[j]), Errc::numeric,
                "non-finite gradient at " + params[i].path);
    }
    if (config_.optimizer == OptimizerKind::Sgd) {
      for (std::size_t i = 0; i < params.size(); ++i)
        for (Eigen::Index j = 0; j < params[i].size(); ++j)
          params[i].data[j] -= config_.learning_rate * grads[i].data[j];
      return;
    }
    if (m_.empty()) {
      for (const ParamView& p : params) {
        m_.emplace_back(Eigen::ArrayXd::Zero(p.size()));
        v_.emplace_back(Eigen::ArrayXd::Zero(p.size()));
      }
    }
    require(m_.size() == params.size(), Errc::shape, "optimizer state does not match parameters");
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Eigen::Map<Eigen::ArrayXd> p(params[i].data, params[i].size());
      Eigen::Map<const Eigen::ArrayXd> g(grads[i].data, grads[i].size());
      m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
      v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.square();
      p -= config_.learning_rate * (m_[i] / bc1) / ((v_[i] / bc2).sqrt() + config_.epsilon);
    }
  }

 private:
  TrainConfig config_;
  std::vector<Eigen::ArrayXd> m_, v_;
  long t_ = 0;
};

// --- model blob -------------------------------------------------------------
// Little-endian layout: magic u64 "CLNSMODL", version u32, section u32,
// tensor count u64, then per tensor {rank u32, dims u64..., raw f64 data in
// column-major storage order}.

inline constexpr std::uint64_t kModelMagic = 0x4c444f4d534e4c43ull;  // "CLNSMODL"
inline constexpr std::uint32_t kModelVersion = 1;

enum class ModelSection : std::uint32_t { Generic = 0, Gfn = 1, Lstm = 2 };

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class BlobReader {
 public:
  explicit BlobReader(const std::string& blob) : blob_(blob) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  std::uint64_t u64() { return take(8); }
  double f64() { return std::bit_cast<double>(take(8)); }

 private:
  std::uint64_t take(int bytes) {
    require(pos_ + static_cast<std::size_t>(bytes) <= blob_.size(), Errc::format,
            "model blob truncated at byte " + std::to_string(pos_));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }

  const std::string& blob_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string save_model(ModelSection section, const std::vector<ParamView>& tensors) {
  std::string blob;
  detail::put_u64(blob, kModelMagic);
  detail::put_u32(blob, kModelVersion);
  detail::put_u32(blob, static_cast<std::uint32_t>(section));
  detail::put_u64(blob, tensors.size());
  for (const ParamView& t : tensors) {
    detail::put_u32(blob, static_cast<std::uint32_t>(t.rank));
    if (t.rank == 1) {
      detail::put_u64(blob, static_cast<std::uint64_t>(t.size()));
    } else {
      detail::put_u64(blob, static_cast<std::uint64_t>(t.rows));
      detail::put_u64(blob, static_cast<std::uint64_t>(t.cols));
    }
    for (Eigen::Index j = 0; j < t.size(); ++j) detail::put_f64(blob, t.data[j]);
  }
  return blob;
}

// Loads into an existing architecture: tensor shapes must match the views.
inline void load_model(const std::string& blob, ModelSection section,
                       const std::vector<ParamView>& tensors) {
  detail::BlobReader r(blob);
  require(r.u64() == kModelMagic, Errc::format, "model blob: bad magic");
  const std::uint32_t version = r.u32();
  require(version == kModelVersion, Errc::format,
          "model blob: unsupported version " + std::to_string(version));
  const std::uint32_t tag = r.u32();
  require(tag == static_cast<std::uint32_t>(section), Errc::format,
          "model blob: section tag " + std::to_string(tag) + " does not match expected " +
              std::to_string(static_cast<std::uint32_t>(section)));
  const std::uint64_t count = r.u64();
  require(count == tensors.size(), Errc::format,
          "model blob: tensor count " + std::to_string(count) + " != expected " +
              std::to_string(tensors.size()));
  for (const ParamView& t : tensors) {
    const std::uint32_t rank = r.u32();
    require(rank == static_cast<std::uint32_t>(t.rank), Errc::format,
            "model blob: rank mismatch at " + t.path);
    if (rank == 1) {
      const std::uint64_t n = r.u64();
      require(n == static_cast<std::uint64_t>(t.size()), Errc::format,
              "model blob: length mismatch at " + t.path);
    } else {
      const std::uint64_t rows = r.u64();
      const std::uint64_t cols = r.u64();
      require(rows == static_cast<std::uint64_t>(t.rows) &&
                  cols == static_cast<std::uint64_t>(t.cols),
              Errc::format, "model blob: shape mismatch at " + t.path);
    }
    for (Eigen::Index j = 0; j < t.size(); ++j) t.data[j] = r.f64();
  }
}

inline void save_model_file(const std::string& path, ModelSection section,
                            const std::vector<ParamView>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Errc::io, "cannot open '" + path + "' for writing");
  const std::string blob = save_model(section, tensors);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  require(out.good(), Errc::io, "write failed for '" + path + "'");
}

inline void load_model_file(const std::string& path, ModelSection section,
                            const std::vector<ParamView>& tensors) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io, "cannot open '" + path + "' for reading");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  load_model(blob, section, tensors);
}

}  // namespace chainlens
