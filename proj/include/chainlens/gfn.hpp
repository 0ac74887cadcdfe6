#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chainlens/centrality.hpp"
#include "chainlens/error.hpp"
#include "chainlens/features.hpp"
#include "chainlens/graph.hpp"
#include "chainlens/nn.hpp"
#include "chainlens/rng.hpp"

namespace chainlens {

struct GfnConfig {
  int k = 3;            // propagation order
  int node_hidden = 64; // node MLP width
  int embed_dim = 64;   // graph embedding width
  int class_count = 4;

  void validate() const {
    require(k >= 0, Errc::config, "k must be >= 0");
    require(node_hidden >= 1 && embed_dim >= 1 && class_count >= 1, Errc::config,
            "gfn widths must be >= 1");
  }

  int augmented_width(int feature_width = kNodeFeatureWidth) const {
    return 1 + (k + 1) * feature_width;
  }
};

// Symmetrically normalized self-looped adjacency of the undirected simple
// projection: D^{-1/2} (A + I) D^{-1/2} with D the degree of (A + I).
inline Eigen::MatrixXd normalized_adjacency(const AddressGraph& g) {
  const auto adj = undirected_adjacency(g);
  const Eigen::Index n = static_cast<Eigen::Index>(adj.size());
  require(n >= 1, Errc::malformed_graph, "normalized adjacency needs at least one node");
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j : adj[static_cast<std::size_t>(i)]) a(i, j) = 1.0;
  const Eigen::VectorXd inv_sqrt_deg = a.rowwise().sum().cwiseSqrt().cwiseInverse();
  return inv_sqrt_deg.asDiagonal() * a * inv_sqrt_deg.asDiagonal();
}

// Multi-hop augmentation [d | X | ÃX | Ã²X | ... | ÃᵏX], one row per node.
inline Eigen::MatrixXd augment_features(const Eigen::MatrixXd& x, const Eigen::MatrixXd& atilde,
                                        const Eigen::VectorXd& degree, int k) {
  require(k >= 0, Errc::config, "k must be >= 0");
  const Eigen::Index n = x.rows();
  const Eigen::Index f = x.cols();
  require(atilde.rows() == n && atilde.cols() == n, Errc::shape,
          "adjacency does not match feature row count");
  require(degree.size() == n, Errc::shape, "degree vector does not match feature row count");
  Eigen::MatrixXd out(n, 1 + (static_cast<Eigen::Index>(k) + 1) * f);
  out.col(0) = degree;
  out.block(0, 1, n, f) = x;
  Eigen::MatrixXd hop = x;
  for (int i = 1; i <= k; ++i) {
    hop = atilde * hop;
    out.block(0, 1 + static_cast<Eigen::Index>(i) * f, n, f) = hop;
  }
  return out;
}

// Fully assembled encoder input for one compressed graph.
inline Eigen::MatrixXd gfn_input(const AddressGraph& g, int k,
                                 const CentralityConfig& centrality_config = {}) {
  const Centralities c = compute_centralities(g, centrality_config);
  const Eigen::MatrixXd x = assemble_node_features(g, c);
  return augment_features(x, normalized_adjacency(g), c.degree, k);
}

struct GfnModel {
  GfnConfig config;
  Mlp node_mlp;          // augmented width -> node_hidden (ReLU layers)
  DenseLayer post_pool;  // node_hidden -> embed_dim, ReLU
  DenseLayer head;       // embed_dim -> class_count, Identity (pretraining only)
};

inline GfnModel make_gfn_model(const GfnConfig& config, Rng& rng) {
  config.validate();
  GfnModel model;
  model.config = config;
  const Eigen::Index aug = config.augmented_width();
  model.node_mlp = make_mlp({aug, config.node_hidden, config.node_hidden},
                            {Activation::ReLU, Activation::ReLU}, rng);
  model.post_pool = make_dense(config.embed_dim, config.node_hidden, Activation::ReLU, rng);
  model.head = make_dense(config.class_count, config.embed_dim, Activation::Identity, rng);
  return model;
}

struct GfnGrads {
  MlpGrads node_mlp;
  Eigen::MatrixXd post_pool_weight;
  Eigen::VectorXd post_pool_bias;
  Eigen::MatrixXd head_weight;
  Eigen::VectorXd head_bias;
};

inline GfnGrads zero_grads(const GfnModel& model) {
  GfnGrads g;
  g.node_mlp = zero_grads(model.node_mlp);
  g.post_pool_weight =
      Eigen::MatrixXd::Zero(model.post_pool.weight.rows(), model.post_pool.weight.cols());
  g.post_pool_bias = Eigen::VectorXd::Zero(model.post_pool.bias.size());
  g.head_weight = Eigen::MatrixXd::Zero(model.head.weight.rows(), model.head.weight.cols());
  g.head_bias = Eigen::VectorXd::Zero(model.head.bias.size());
  return g;
}

inline std::vector<ParamView> gfn_param_views(GfnModel& model) {
  std::vector<ParamView> views = mlp_param_views(model.node_mlp, "gfn.node_mlp");
  views.push_back({model.post_pool.weight.data(), model.post_pool.weight.rows(),
                   model.post_pool.weight.cols(), 2, "gfn.post_pool.weight"});
  views.push_back(
      {model.post_pool.bias.data(), model.post_pool.bias.size(), 1, 1, "gfn.post_pool.bias"});
  views.push_back({model.head.weight.data(), model.head.weight.rows(), model.head.weight.cols(),
                   2, "gfn.head.weight"});
  views.push_back({model.head.bias.data(), model.head.bias.size(), 1, 1, "gfn.head.bias"});
  return views;
}

inline std::vector<ParamView> gfn_grad_views(GfnGrads& grads) {
  std::vector<ParamView> views = mlp_grad_views(grads.node_mlp, "gfn.node_mlp");
  views.push_back({grads.post_pool_weight.data(), grads.post_pool_weight.rows(),
                   grads.post_pool_weight.cols(), 2, "gfn.post_pool.weight"});
  views.push_back(
      {grads.post_pool_bias.data(), grads.post_pool_bias.size(), 1, 1, "gfn.post_pool.bias"});
  views.push_back({grads.head_weight.data(), grads.head_weight.rows(), grads.head_weight.cols(),
                   2, "gfn.head.weight"});
  views.push_back({grads.head_bias.data(), grads.head_bias.size(), 1, 1, "gfn.head.bias"});
  return views;
}

struct GfnForwardCache {
  MlpCache node_mlp;
  Eigen::VectorXd pooled;     // sum over node_mlp outputs
  Eigen::VectorXd embedding;  // post_pool output
  Eigen::VectorXd logits;     // head output
  Eigen::Index node_count = 0;
};

// Forward through node MLP, SUM readout, post-pool, and (optionally) head.
// `xg` holds one augmented feature row per node.
inline GfnForwardCache gfn_forward(const GfnModel& model, const Eigen::MatrixXd& xg) {
  require(xg.cols() == model.config.augmented_width(), Errc::shape,
          "augmented width " + std::to_string(xg.cols()) + " != expected " +
              std::to_string(model.config.augmented_width()));
  require(xg.rows() >= 1, Errc::shape, "graph has no nodes");
  GfnForwardCache cache;
  cache.node_count = xg.rows();
  const Eigen::MatrixXd h = mlp_forward(model.node_mlp, Eigen::MatrixXd(xg.transpose()),
                                        &cache.node_mlp);
  cache.pooled = h.rowwise().sum();
  const Eigen::VectorXd z_pool = model.post_pool.weight * cache.pooled + model.post_pool.bias;
  cache.embedding = apply_activation(model.post_pool.activation, z_pool);
  const Eigen::VectorXd z_head = model.head.weight * cache.embedding + model.head.bias;
  cache.logits = apply_activation(model.head.activation, z_head);
  return cache;
}

inline Eigen::VectorXd encode_graph(const GfnModel& model, const Eigen::MatrixXd& xg) {
  return gfn_forward(model, xg).embedding;
}

inline Eigen::VectorXd encode_graph(const GfnModel& model, const AddressGraph& g,
                                    const CentralityConfig& centrality_config = {}) {
  return encode_graph(model, gfn_input(g, model.config.k, centrality_config));
}

// Reverse pass from dL/dlogits; accumulates into `grads`.
inline void gfn_backward(const GfnModel& model, const GfnForwardCache& cache,
                         const Eigen::VectorXd& dlogits, GfnGrads& grads) {
  const Eigen::VectorXd dz_head =
      dlogits.cwiseProduct(activation_grad_from_output(model.head.activation,
                                                       Eigen::MatrixXd(cache.logits))
                               .col(0));
  grads.head_weight += dz_head * cache.embedding.transpose();
  grads.head_bias += dz_head;
  const Eigen::VectorXd d_embedding = model.head.weight.transpose() * dz_head;

  const Eigen::VectorXd dz_pool =
      d_embedding.cwiseProduct(activation_grad_from_output(model.post_pool.activation,
                                                           Eigen::MatrixXd(cache.embedding))
                                   .col(0));
  grads.post_pool_weight += dz_pool * cache.pooled.transpose();
  grads.post_pool_bias += dz_pool;
  const Eigen::VectorXd d_pooled = model.post_pool.weight.transpose() * dz_pool;

  const Eigen::MatrixXd upstream = d_pooled.replicate(1, cache.node_count);
  mlp_backward(model.node_mlp, cache.node_mlp, upstream, grads.node_mlp);
}

// Graph-level pretraining: head over the embedding, softmax cross-entropy
// against the slice's inherited address label. Returns per-epoch mean loss.
inline std::pair<GfnModel, std::vector<double>> pretrain_gfn(
    const std::vector<Eigen::MatrixXd>& inputs, const std::vector<int>& labels,
    const GfnConfig& config, const TrainConfig& train) {
  config.validate();
  train.validate();
  require(!inputs.empty(), Errc::data, "gfn pretraining set is empty");
  require(inputs.size() == labels.size(), Errc::input, "inputs/labels length mismatch");
  for (int label : labels)
    require(label >= 0 && label < config.class_count, Errc::bad_index,
            "label " + std::to_string(label) + " out of range");

  Rng rng(train.seed);
  GfnModel model = make_gfn_model(config, rng);
  Optimizer optimizer(train);
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(train.epochs));

  std::vector<std::size_t> order(inputs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(train.batch_size));
      GfnGrads grads = zero_grads(model);
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t item = order[i];
        const GfnForwardCache cache = gfn_forward(model, inputs[item]);
        auto [loss, dlogits] = softmax_cross_entropy(cache.logits, labels[item]);
        epoch_loss += loss;
        dlogits /= static_cast<double>(stop - start);
        gfn_backward(model, cache, dlogits, grads);
      }
      const auto params = gfn_param_views(model);
      const auto gviews = gfn_grad_views(grads);
      optimizer.step(params, gviews);
    }
    history.push_back(epoch_loss / static_cast<double>(inputs.size()));
  }
  return {std::move(model), std::move(history)};
}

inline void save_gfn(const std::string& path, GfnModel& model) {
  save_model_file(path, ModelSection::Gfn, gfn_param_views(model));
}

inline void load_gfn(const std::string& path, GfnModel& model) {
  load_model_file(path, ModelSection::Gfn, gfn_param_views(model));
}

}  // namespace chainlens
