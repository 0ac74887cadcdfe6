#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <string>
#include <vector>

#include "chainlens/gfn.hpp"
#include "chainlens/rng.hpp"
#include "oracles.hpp"

using namespace chainlens;

namespace {

struct GraphFixture {
  std::vector<Transaction> txs;
  AddressGraph graph;

  GraphFixture(std::vector<Transaction> list, const std::string& target)
      : txs(std::move(list)) {
    TxWindow window;
    window.index = 0;
    for (const auto& tx : txs) window.transactions.push_back(&tx);
    graph = build_window_graph(window, target);
  }
};

Transaction make_tx(std::string id, std::vector<TxEntry> ins, std::vector<TxEntry> outs) {
  Transaction tx;
  tx.tx_id = std::move(id);
  tx.inputs = std::move(ins);
  tx.outputs = std::move(outs);
  return tx;
}

GraphFixture random_fixture(Rng& rng, int max_txs = 8) {
  std::vector<Transaction> txs;
  const int tx_count = static_cast<int>(rng.uniform_int(1, max_txs));
  for (int i = 0; i < tx_count; ++i) {
    Transaction tx;
    tx.tx_id = "t" + std::to_string(i);
    const std::size_t nin = rng.uniform_int(0, 3);
    const std::size_t nout = rng.uniform_int(1, 3);
    for (std::size_t k = 0; k < nin; ++k)
      tx.inputs.push_back({"v" + std::to_string(rng.uniform_int(0, 9)),
                           static_cast<std::int64_t>(rng.uniform_int(1, 1000))});
    for (std::size_t k = 0; k < nout; ++k)
      tx.outputs.push_back({"v" + std::to_string(rng.uniform_int(0, 9)),
                            static_cast<std::int64_t>(rng.uniform_int(1, 1000))});
    if (i == 0) tx.outputs.push_back({"v0", 7});
    txs.push_back(std::move(tx));
  }
  return GraphFixture(std::move(txs), "v0");
}

// Dense reference: D̃^{-1/2} (A+I) D̃^{-1/2} assembled with explicit algebra.
Eigen::MatrixXd dense_normalized(const std::vector<std::vector<int>>& adj) {
  const Eigen::Index n = static_cast<Eigen::Index>(adj.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j : adj[static_cast<std::size_t>(i)]) a(i, j) = 1.0;
  Eigen::MatrixXd d_inv_sqrt = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) d_inv_sqrt(i, i) = 1.0 / std::sqrt(a.row(i).sum());
  return d_inv_sqrt * a * d_inv_sqrt;
}

// Random node relabeling of a graph: new index of node i is perm[i].
AddressGraph permute_graph(const AddressGraph& g, const std::vector<int>& perm) {
  AddressGraph out;
  out.window_index = g.window_index;
  out.nodes.resize(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    out.nodes[static_cast<std::size_t>(perm[i])] = g.nodes[i];
  for (const Edge& e : g.edges)
    out.edges.push_back(Edge{perm[static_cast<std::size_t>(e.address_node)],
                             perm[static_cast<std::size_t>(e.tx_node)], e.direction, e.value});
  out.target_node = perm[static_cast<std::size_t>(g.target_node)];
  return out;
}

}  // namespace

TEST_CASE("normalized adjacency of an isolated node is the identity") {
  AddressGraph g;
  Node n;
  n.kind = NodeKind::PlainAddress;
  n.key = "a";
  n.is_target = true;
  n.raw_values = {1};
  g.nodes.push_back(n);
  g.target_node = 0;
  const Eigen::MatrixXd atilde = normalized_adjacency(g);
  REQUIRE(atilde.rows() == 1);
  REQUIRE(atilde(0, 0) == 1.0);
}

TEST_CASE("normalized adjacency of one edge is constant one half") {
  GraphFixture fx({make_tx("t0", {}, {{"a", 5}})}, "a");
  const Eigen::MatrixXd atilde = normalized_adjacency(fx.graph);
  REQUIRE(atilde.rows() == 2);
  for (Eigen::Index r = 0; r < 2; ++r)
    for (Eigen::Index c = 0; c < 2; ++c)
      REQUIRE(atilde(r, c) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("normalized adjacency matches the dense oracle and is symmetric") {
  Rng rng(1001);
  for (int trial = 0; trial < 30; ++trial) {
    const GraphFixture fx = random_fixture(rng);
    const Eigen::MatrixXd atilde = normalized_adjacency(fx.graph);
    const Eigen::MatrixXd want = dense_normalized(undirected_adjacency(fx.graph));
    REQUIRE((atilde - want).lpNorm<Eigen::Infinity>() <= 1e-12);
    REQUIRE((atilde - atilde.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("augmentation stacks degree and propagated feature blocks") {
  // Isolated node: Ã = [1], degree 0, so every hop equals the raw features.
  Eigen::MatrixXd x(1, 3);
  x << 2.0, -1.0, 0.5;
  const Eigen::MatrixXd atilde = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd degree(1);
  degree << 0.0;
  const Eigen::MatrixXd xg = augment_features(x, atilde, degree, 3);
  REQUIRE(xg.rows() == 1);
  REQUIRE(xg.cols() == 1 + 4 * 3);
  REQUIRE(xg(0, 0) == 0.0);
  for (int hop = 0; hop < 4; ++hop)
    for (int f = 0; f < 3; ++f) REQUIRE(xg(0, 1 + hop * 3 + f) == x(0, f));
}

TEST_CASE("augmented width is 105 for 26 features at three hops") {
  GfnConfig config;
  REQUIRE(config.k == 3);
  REQUIRE(config.augmented_width() == 105);
  REQUIRE(GfnConfig{1, 8, 8, 4}.augmented_width(3) == 7);
}

TEST_CASE("augmentation matches an explicit matrix-power oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const GraphFixture fx = random_fixture(rng);
    const Eigen::Index n = static_cast<Eigen::Index>(fx.graph.nodes.size());
    Eigen::MatrixXd x(n, 4);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < 4; ++c) x(r, c) = rng.uniform(-2.0, 2.0);
    const Eigen::MatrixXd atilde = normalized_adjacency(fx.graph);
    Eigen::VectorXd degree(n);
    for (Eigen::Index i = 0; i < n; ++i) degree(i) = rng.uniform(0.0, 5.0);

    const Eigen::MatrixXd xg = augment_features(x, atilde, degree, 2);
    REQUIRE(xg.cols() == 1 + 3 * 4);
    REQUIRE(xg.col(0) == degree);
    const Eigen::MatrixXd a2 = atilde * atilde;  // explicit power, not iterated
    REQUIRE((xg.block(0, 1, n, 4) - x).lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE((xg.block(0, 5, n, 4) - atilde * x).lpNorm<Eigen::Infinity>() <= 1e-10);
    REQUIRE((xg.block(0, 9, n, 4) - a2 * x).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("negative propagation order is rejected") {
  Eigen::MatrixXd x(1, 2);
  x << 1.0, 2.0;
  try {
    augment_features(x, Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), -1);
    FAIL("expected config error");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::config);
  }
}

TEST_CASE("graph encoding is invariant under node permutation") {
  Rng rng(555);
  const GfnConfig config{2, 12, 10, 4};
  Rng model_rng(9);
  const GfnModel model = make_gfn_model(config, model_rng);
  for (int trial = 0; trial < 20; ++trial) {
    const GraphFixture fx = random_fixture(rng);
    const Eigen::VectorXd base = encode_graph(model, fx.graph);
    REQUIRE(base.size() == config.embed_dim);

    std::vector<int> perm(fx.graph.nodes.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (int p = 0; p < 20; ++p) {
      rng.shuffle(perm);
      const AddressGraph shuffled = permute_graph(fx.graph, perm);
      const Eigen::VectorXd other = encode_graph(model, shuffled);
      REQUIRE((base - other).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
  }
}

TEST_CASE("single-node encoding composes node mlp and post pool") {
  const GfnConfig config{1, 6, 5, 4};
  Rng rng(3);
  const GfnModel model = make_gfn_model(config, rng);
  Eigen::MatrixXd xg(1, config.augmented_width());
  for (Eigen::Index c = 0; c < xg.cols(); ++c) xg(0, c) = rng.uniform(-1.0, 1.0);

  const Eigen::VectorXd got = encode_graph(model, xg);
  const Eigen::VectorXd h = mlp_forward(model.node_mlp, Eigen::VectorXd(xg.row(0)));
  const Eigen::VectorXd want = apply_activation(
      model.post_pool.activation,
      Eigen::MatrixXd(model.post_pool.weight * h + model.post_pool.bias));
  REQUIRE((got - want).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("encoding the same graph twice is bitwise identical") {
  Rng rng(12);
  const GraphFixture fx = random_fixture(rng);
  const GfnConfig config{2, 8, 8, 4};
  Rng model_rng(13);
  const GfnModel model = make_gfn_model(config, model_rng);
  const Eigen::VectorXd a = encode_graph(model, fx.graph);
  const Eigen::VectorXd b = encode_graph(model, fx.graph);
  REQUIRE(a == b);
}

TEST_CASE("wrong augmented width is a shape error") {
  const GfnConfig config{1, 6, 5, 4};
  Rng rng(4);
  const GfnModel model = make_gfn_model(config, rng);
  Eigen::MatrixXd xg(2, config.augmented_width() + 1);
  xg.setZero();
  try {
    gfn_forward(model, xg);
    FAIL("expected shape error");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::shape);
  }
}

TEST_CASE("gfn gradients agree with finite differences") {
  const GfnConfig config{1, 8, 8, 4};
  const Eigen::Index width = config.augmented_width();
  for (std::uint64_t seed : {201ull, 202ull, 203ull}) {
    Rng rng(seed);
    GfnModel model = make_gfn_model(config, rng);
    std::vector<Eigen::MatrixXd> inputs;
    std::vector<int> labels;
    for (int gi = 0; gi < 2; ++gi) {
      Eigen::MatrixXd xg(3, width);
      for (Eigen::Index r = 0; r < 3; ++r)
        for (Eigen::Index c = 0; c < width; ++c) xg(r, c) = rng.uniform(-1.0, 1.0);
      inputs.push_back(std::move(xg));
      labels.push_back(static_cast<int>(rng.uniform_int(0, 3)));
    }

    auto loss_fn = [&]() {
      double total = 0.0;
      for (std::size_t i = 0; i < inputs.size(); ++i)
        total += softmax_cross_entropy(gfn_forward(model, inputs[i]).logits, labels[i]).first;
      return total;
    };

    GfnGrads grads = zero_grads(model);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const GfnForwardCache cache = gfn_forward(model, inputs[i]);
      gfn_backward(model, cache, softmax_cross_entropy(cache.logits, labels[i]).second, grads);
    }

    const double err = oracles::max_relative_gradient_error(gfn_param_views(model),
                                                            gfn_grad_views(grads), loss_fn);
    REQUIRE(err <= 1e-4);
  }
}

TEST_CASE("zero-epoch pretraining returns the seeded initialization") {
  const GfnConfig config{1, 6, 5, 4};
  Rng data_rng(8);
  std::vector<Eigen::MatrixXd> inputs{
      Eigen::MatrixXd::Constant(2, config.augmented_width(), 0.3)};
  std::vector<int> labels{1};
  TrainConfig train;
  train.epochs = 0;
  train.seed = 4242;

  auto [model, history] = pretrain_gfn(inputs, labels, config, train);
  REQUIRE(history.empty());

  Rng init_rng(train.seed);
  GfnModel want = make_gfn_model(config, init_rng);
  REQUIRE(model.node_mlp.layers[0].weight == want.node_mlp.layers[0].weight);
  REQUIRE(model.node_mlp.layers[1].weight == want.node_mlp.layers[1].weight);
  REQUIRE(model.post_pool.weight == want.post_pool.weight);
  REQUIRE(model.head.weight == want.head.weight);
}

TEST_CASE("pretraining memorizes a tiny labeled set") {
  const GfnConfig config{1, 16, 16, 4};
  Rng rng(606);
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    const Eigen::Index n = static_cast<Eigen::Index>(rng.uniform_int(1, 5));
    Eigen::MatrixXd xg(n, config.augmented_width());
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < xg.cols(); ++c) xg(r, c) = rng.uniform(-1.0, 1.0);
    inputs.push_back(std::move(xg));
    labels.push_back(i % 4);
  }
  TrainConfig train;
  train.epochs = 200;
  train.learning_rate = 1e-2;
  train.batch_size = 16;
  train.seed = 77;

  auto [model, history] = pretrain_gfn(inputs, labels, config, train);
  REQUIRE(history.size() == 200);
  int correct = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Eigen::VectorXd logits = gfn_forward(model, inputs[i]).logits;
    Eigen::Index argmax = 0;
    logits.maxCoeff(&argmax);
    correct += (static_cast<int>(argmax) == labels[i]) ? 1 : 0;
  }
  REQUIRE(correct == 10);
  REQUIRE(history.back() < history.front());
}

TEST_CASE("full-batch sgd at a small rate never increases the loss") {
  const GfnConfig config{1, 8, 8, 4};
  Rng rng(31);
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    Eigen::MatrixXd xg(2, config.augmented_width());
    for (Eigen::Index r = 0; r < 2; ++r)
      for (Eigen::Index c = 0; c < xg.cols(); ++c) xg(r, c) = rng.uniform(-1.0, 1.0);
    inputs.push_back(std::move(xg));
    labels.push_back(i % 4);
  }
  TrainConfig train;
  train.optimizer = OptimizerKind::Sgd;
  train.learning_rate = 1e-4;
  train.epochs = 50;
  train.batch_size = 100;  // full batch
  train.seed = 5;

  auto [model, history] = pretrain_gfn(inputs, labels, config, train);
  for (std::size_t e = 1; e < history.size(); ++e)
    REQUIRE(history[e] <= history[e - 1] + 1e-12);
}

TEST_CASE("pretraining rejects bad input sets") {
  const GfnConfig config{1, 4, 4, 4};
  TrainConfig train;
  try {
    pretrain_gfn({}, {}, config, train);
    FAIL("expected data error");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::data);
  }
  std::vector<Eigen::MatrixXd> inputs{Eigen::MatrixXd::Zero(1, config.augmented_width())};
  try {
    pretrain_gfn(inputs, {0, 1}, config, train);
    FAIL("expected input error");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::input);
  }
  try {
    pretrain_gfn(inputs, {7}, config, train);
    FAIL("expected bad_index");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::bad_index);
  }
}

TEST_CASE("gfn models persist through the blob format") {
  const GfnConfig config{1, 6, 5, 3};
  Rng rng(21);
  GfnModel a = make_gfn_model(config, rng);
  const std::string path = "test_gfn_tmp.bin";
  save_gfn(path, a);
  Rng rng2(22);
  GfnModel b = make_gfn_model(config, rng2);
  load_gfn(path, b);
  REQUIRE(a.node_mlp.layers[0].weight == b.node_mlp.layers[0].weight);
  REQUIRE(a.post_pool.weight == b.post_pool.weight);
  REQUIRE(a.head.bias == b.head.bias);
  std::remove(path.c_str());
}

TEST_CASE("pipeline-shaped gfn input has the declared width") {
  Rng rng(91);
  const GraphFixture fx = random_fixture(rng);
  const Eigen::MatrixXd xg = gfn_input(fx.graph, 3);
  REQUIRE(xg.rows() == static_cast<Eigen::Index>(fx.graph.nodes.size()));
  REQUIRE(xg.cols() == 105);
  // Column 0 is the degree centrality.
  const Centralities c = compute_centralities(fx.graph);
  REQUIRE(xg.col(0) == c.degree);
}
