#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chainlens/error.hpp"
#include "chainlens/nn.hpp"
#include "chainlens/rng.hpp"

namespace chainlens {

// Gate weights act on the concatenation [h_prev, x].
struct LstmParams {
  Eigen::MatrixXd w_forget, w_input, w_candidate, w_output;  // hidden x (hidden + embed)
  Eigen::VectorXd b_forget, b_input, b_candidate, b_output;  // hidden

  Eigen::Index hidden() const { return w_forget.rows(); }
  Eigen::Index embed() const { return w_forget.cols() - w_forget.rows(); }
};

struct LstmState {
  Eigen::VectorXd h, c;
};

inline LstmState zero_state(Eigen::Index hidden) {
  return {Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(hidden)};
}

inline LstmParams make_lstm(Eigen::Index hidden, Eigen::Index embed, Rng& rng) {
  require(hidden >= 1 && embed >= 1, Errc::config, "lstm widths must be >= 1");
  LstmParams p;
  const Eigen::Index in = hidden + embed;
  const double bound = std::sqrt(6.0 / static_cast<double>(in + hidden));
  auto init = [&](Eigen::MatrixXd& w, Eigen::VectorXd& b) {
    w.resize(hidden, in);
    for (Eigen::Index c = 0; c < in; ++c)
      for (Eigen::Index r = 0; r < hidden; ++r) w(r, c) = rng.uniform(-bound, bound);
    b = Eigen::VectorXd::Zero(hidden);
  };
  init(p.w_forget, p.b_forget);
  init(p.w_input, p.b_input);
  init(p.w_candidate, p.b_candidate);
  init(p.w_output, p.b_output);
  return p;
}

namespace detail {

inline Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& z) { return 1.0 / (1.0 + (-z).exp()); }

}  // namespace detail

// Per-step intermediates kept for backpropagation through time.
struct LstmStepCache {
  Eigen::VectorXd z;       // [h_prev, x]
  Eigen::ArrayXd f, i, g, o;  // gate activations (g = candidate)
  Eigen::VectorXd c_prev, c, tanh_c, h;
};

inline LstmStepCache lstm_cell_forward(const LstmParams& p, const Eigen::VectorXd& x,
                                       const LstmState& state) {
  require(x.size() == p.embed(), Errc::shape,
          "lstm input width " + std::to_string(x.size()) + " != expected " +
              std::to_string(p.embed()));
  require(state.h.size() == p.hidden() && state.c.size() == p.hidden(), Errc::shape,
          "lstm state width mismatch");
  LstmStepCache s;
  s.z.resize(p.hidden() + p.embed());
  s.z << state.h, x;
  s.f = detail::sigmoid((p.w_forget * s.z + p.b_forget).array());
  s.i = detail::sigmoid((p.w_input * s.z + p.b_input).array());
  s.g = (p.w_candidate * s.z + p.b_candidate).array().tanh();
  s.o = detail::sigmoid((p.w_output * s.z + p.b_output).array());
  s.c_prev = state.c;
  s.c = (s.f * state.c.array() + s.i * s.g).matrix();
  s.tanh_c = s.c.array().tanh().matrix();
  s.h = (s.o * s.tanh_c.array()).matrix();
  return s;
}

inline LstmState lstm_cell_step(const LstmParams& p, const Eigen::VectorXd& x,
                                const LstmState& state) {
  const LstmStepCache s = lstm_cell_forward(p, x, state);
  return {s.h, s.c};
}

struct LstmGrads {
  Eigen::MatrixXd w_forget, w_input, w_candidate, w_output;
  Eigen::VectorXd b_forget, b_input, b_candidate, b_output;
};

inline LstmGrads zero_grads(const LstmParams& p) {
  LstmGrads g;
  auto zero = [&](Eigen::MatrixXd& w, Eigen::VectorXd& b) {
    w = Eigen::MatrixXd::Zero(p.hidden(), p.hidden() + p.embed());
    b = Eigen::VectorXd::Zero(p.hidden());
  };
  zero(g.w_forget, g.b_forget);
  zero(g.w_input, g.b_input);
  zero(g.w_candidate, g.b_candidate);
  zero(g.w_output, g.b_output);
  return g;
}

// Backward through one cell step. dh/dc are gradients flowing into this
// step's outputs; returns gradients for the previous state, accumulates
// parameter gradients, and reports dL/dx through `dx`.
inline LstmState lstm_cell_backward(const LstmParams& p, const LstmStepCache& s,
                                    const Eigen::VectorXd& dh, const Eigen::VectorXd& dc,
                                    LstmGrads& grads, Eigen::VectorXd* dx = nullptr) {
  const Eigen::ArrayXd do_ = dh.array() * s.tanh_c.array();
  const Eigen::ArrayXd dct = dc.array() + dh.array() * s.o * (1.0 - s.tanh_c.array().square());
  const Eigen::ArrayXd df = dct * s.c_prev.array();
  const Eigen::ArrayXd di = dct * s.g;
  const Eigen::ArrayXd dg = dct * s.i;
  const Eigen::VectorXd dc_prev = (dct * s.f).matrix();

  const Eigen::VectorXd da_f = (df * s.f * (1.0 - s.f)).matrix();
  const Eigen::VectorXd da_i = (di * s.i * (1.0 - s.i)).matrix();
  const Eigen::VectorXd da_g = (dg * (1.0 - s.g.square())).matrix();
  const Eigen::VectorXd da_o = (do_ * s.o * (1.0 - s.o)).matrix();

  grads.w_forget += da_f * s.z.transpose();
  grads.b_forget += da_f;
  grads.w_input += da_i * s.z.transpose();
  grads.b_input += da_i;
  grads.w_candidate += da_g * s.z.transpose();
  grads.b_candidate += da_g;
  grads.w_output += da_o * s.z.transpose();
  grads.b_output += da_o;

  const Eigen::VectorXd dz = p.w_forget.transpose() * da_f + p.w_input.transpose() * da_i +
                             p.w_candidate.transpose() * da_g + p.w_output.transpose() * da_o;
  if (dx) *dx = dz.tail(p.embed());
  return {dz.head(p.hidden()), dc_prev};
}

struct SeqModel {
  LstmParams lstm;
  Mlp head;  // hidden -> class_count
};

inline SeqModel make_seq_model(Eigen::Index hidden, Eigen::Index embed, Eigen::Index class_count,
                               Rng& rng) {
  SeqModel model;
  model.lstm = make_lstm(hidden, embed, rng);
  model.head = make_mlp({hidden, hidden, class_count}, {Activation::ReLU, Activation::Identity},
                        rng);
  return model;
}

inline std::vector<ParamView> lstm_param_views(LstmParams& p, const std::string& prefix) {
  std::vector<ParamView> views;
  auto add = [&](Eigen::MatrixXd& w, Eigen::VectorXd& b, const std::string& gate) {
    views.push_back({w.data(), w.rows(), w.cols(), 2, prefix + "." + gate + ".weight"});
    views.push_back({b.data(), b.size(), 1, 1, prefix + "." + gate + ".bias"});
  };
  add(p.w_forget, p.b_forget, "forget");
  add(p.w_input, p.b_input, "input");
  add(p.w_candidate, p.b_candidate, "candidate");
  add(p.w_output, p.b_output, "output");
  return views;
}

inline std::vector<ParamView> lstm_grad_views(LstmGrads& g, const std::string& prefix) {
  std::vector<ParamView> views;
  auto add = [&](Eigen::MatrixXd& w, Eigen::VectorXd& b, const std::string& gate) {
    views.push_back({w.data(), w.rows(), w.cols(), 2, prefix + "." + gate + ".weight"});
    views.push_back({b.data(), b.size(), 1, 1, prefix + "." + gate + ".bias"});
  };
  add(g.w_forget, g.b_forget, "forget");
  add(g.w_input, g.b_input, "input");
  add(g.w_candidate, g.b_candidate, "candidate");
  add(g.w_output, g.b_output, "output");
  return views;
}

inline std::vector<ParamView> seq_param_views(SeqModel& model) {
  std::vector<ParamView> views = lstm_param_views(model.lstm, "seq.lstm");
  const std::vector<ParamView> head = mlp_param_views(model.head, "seq.head");
  views.insert(views.end(), head.begin(), head.end());
  return views;
}

struct SeqGrads {
  LstmGrads lstm;
  MlpGrads head;
};

inline SeqGrads zero_grads(const SeqModel& model) {
  return {zero_grads(model.lstm), zero_grads(model.head)};
}

inline std::vector<ParamView> seq_grad_views(SeqGrads& grads) {
  std::vector<ParamView> views = lstm_grad_views(grads.lstm, "seq.lstm");
  const std::vector<ParamView> head = mlp_grad_views(grads.head, "seq.head");
  views.insert(views.end(), head.begin(), head.end());
  return views;
}

// Keeps the most recent `max_len` elements, order preserved.
inline std::vector<Eigen::VectorXd> truncate_recent(const std::vector<Eigen::VectorXd>& seq,
                                                    std::size_t max_len) {
  if (seq.size() <= max_len) return seq;
  return {seq.end() - static_cast<std::ptrdiff_t>(max_len), seq.end()};
}

// Left-to-right recurrence from zero state; head logits on the final h.
inline Eigen::VectorXd seq_logits(const SeqModel& model,
                                  const std::vector<Eigen::VectorXd>& sequence,
                                  std::vector<LstmStepCache>* steps = nullptr,
                                  MlpCache* head_cache = nullptr) {
  require(!sequence.empty(), Errc::empty_input, "embedding sequence is empty");
  LstmState state = zero_state(model.lstm.hidden());
  if (steps) steps->clear();
  for (const Eigen::VectorXd& x : sequence) {
    LstmStepCache s = lstm_cell_forward(model.lstm, x, state);
    state = {s.h, s.c};
    if (steps) steps->push_back(std::move(s));
  }
  return mlp_forward(model.head, state.h, head_cache);
}

inline Eigen::VectorXd classify_sequence(const SeqModel& model,
                                         const std::vector<Eigen::VectorXd>& sequence) {
  return softmax(seq_logits(model, sequence));
}

// Full-sequence BPTT from dL/dlogits; accumulates into `grads`.
inline void seq_backward(const SeqModel& model, const std::vector<LstmStepCache>& steps,
                         const MlpCache& head_cache, const Eigen::VectorXd& dlogits,
                         SeqGrads& grads) {
  require(!steps.empty(), Errc::stale_cache, "no cached lstm steps");
  const Eigen::MatrixXd dh_final =
      mlp_backward(model.head, head_cache, Eigen::MatrixXd(dlogits), grads.head);
  Eigen::VectorXd dh = dh_final.col(0);
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(model.lstm.hidden());
  for (std::size_t t = steps.size(); t-- > 0;) {
    const LstmState prev = lstm_cell_backward(model.lstm, steps[t], dh, dc, grads.lstm);
    dh = prev.h;
    dc = prev.c;
  }
}

struct SequenceSample {
  std::vector<Eigen::VectorXd> embeddings;  // chronological
  int label = 0;
};

struct SeqTrainOptions {
  Eigen::Index hidden = 64;
  Eigen::Index class_count = 4;
  std::size_t max_seq_len = 64;
};

// Trains LSTM+head on labeled embedding sequences with softmax cross-entropy
// on the final-state logits. Sequences are truncated to the most recent
// max_seq_len entries. Returns per-epoch mean loss.
inline std::pair<SeqModel, std::vector<double>> train_classifier(
    const std::vector<SequenceSample>& samples, const SeqTrainOptions& options,
    const TrainConfig& train) {
  train.validate();
  require(!samples.empty(), Errc::data, "classifier training set is empty");
  require(options.hidden >= 1 && options.class_count >= 1 && options.max_seq_len >= 1,
          Errc::config, "invalid sequence trainer options");
  const Eigen::Index embed = samples.front().embeddings.empty()
                                 ? 0
                                 : samples.front().embeddings.front().size();
  require(embed >= 1, Errc::data, "first sample has no embeddings");
  std::vector<std::vector<Eigen::VectorXd>> sequences;
  sequences.reserve(samples.size());
  for (const SequenceSample& s : samples) {
    require(!s.embeddings.empty(), Errc::data, "sample with empty embedding sequence");
    require(s.label >= 0 && s.label < options.class_count, Errc::bad_index,
            "label " + std::to_string(s.label) + " out of range");
    for (const Eigen::VectorXd& e : s.embeddings)
      require(e.size() == embed, Errc::shape, "inconsistent embedding width");
    sequences.push_back(truncate_recent(s.embeddings, options.max_seq_len));
  }

  Rng rng(train.seed);
  SeqModel model = make_seq_model(options.hidden, embed, options.class_count, rng);
  Optimizer optimizer(train);
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(train.epochs));

  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<LstmStepCache> steps;
  MlpCache head_cache;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(train.batch_size));
      SeqGrads grads = zero_grads(model);
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t item = order[i];
        const Eigen::VectorXd logits = seq_logits(model, sequences[item], &steps, &head_cache);
        auto [loss, dlogits] = softmax_cross_entropy(logits, samples[item].label);
        epoch_loss += loss;
        dlogits /= static_cast<double>(stop - start);
        seq_backward(model, steps, head_cache, dlogits, grads);
      }
      const auto params = seq_param_views(model);
      const auto gviews = seq_grad_views(grads);
      optimizer.step(params, gviews);
    }
    history.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  return {std::move(model), std::move(history)};
}

inline void save_seq_model(const std::string& path, SeqModel& model) {
  save_model_file(path, ModelSection::Lstm, seq_param_views(model));
}

inline void load_seq_model(const std::string& path, SeqModel& model) {
  load_model_file(path, ModelSection::Lstm, seq_param_views(model));
}

}  // namespace chainlens
