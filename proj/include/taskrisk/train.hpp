// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "taskrisk/checkpoint.hpp"
#include "taskrisk/eval.hpp"
#include "taskrisk/model.hpp"
#include "taskrisk/tokenizer.hpp"

namespace taskrisk {

struct EncodedExample {
  TokenSequence seq;
  Label label = Label::Substitution;
};

inline std::vector<EncodedExample> encode_examples(const std::vector<std::pair<std::string, Label>>& rows,
                                                   const Vocabulary& vocab, std::size_t max_len) {
  std::vector<EncodedExample> out;
  out.reserve(rows.size());
  for (const auto& [text, label] : rows) out.push_back({encode(text, vocab, max_len), label});
  return out;
}

// ---------------------------------------------------------------------------
// Backpropagation

namespace detail {

// Gradient of y = gain * xhat + bias w.r.t. its input, given dL/dy.
inline Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache, const Matrix& gain,
                                  Matrix& dgain, Matrix& dbias) {
  const auto n = dy.cols();
  Matrix dx(dy.rows(), n);
  std::vector<double> dxhat(n);
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    double mean_d = 0.0, mean_dx = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      dgain[c] += dy(r, c) * cache.xhat(r, c);
      dbias[c] += dy(r, c);
      dxhat[c] = dy(r, c) * gain[c];
      mean_d += dxhat[c];
      mean_dx += dxhat[c] * cache.xhat(r, c);
    }
    mean_d /= static_cast<double>(n);
    mean_dx /= static_cast<double>(n);
    for (std::size_t c = 0; c < n; ++c)
      dx(r, c) = cache.inv_std[r] * (dxhat[c] - mean_d - cache.xhat(r, c) * mean_dx);
  }
  return dx;
}

}  // namespace detail

// Adds `scale` times the gradient of cross_entropy(trace, label) to `grads`.
inline void accumulate_gradient(const ModelParams& params, const ForwardTrace& trace, Label label, double scale,
                                ModelParams& grads) {
  const auto& cfg = params.config;
  const auto d = cfg.d_model, dk = cfg.d_k();
  const auto T = trace.length();
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  std::array<double, kNumClasses> dz{};
  for (int c = 0; c < kNumClasses; ++c)
    dz[c] = scale * (trace.probabilities[c] - (c == index_of(label) ? 1.0 : 0.0));

  Matrix dx(T, d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
      grads.w_cls(i, c) += trace.pooled[i] * dz[c];
      s += params.w_cls(i, c) * dz[c];
    }
    dx(0, i) = s;
  }
  for (int c = 0; c < kNumClasses; ++c) grads.b_cls[c] += dz[c];

  const bool dropout = !trace.masks.empty();
  for (std::size_t l = cfg.n_layers; l-- > 0;) {
    const auto& lp = params.layers[l];
    auto& gl = grads.layers[l];
    const auto& c = trace.layers[l];

    // out = LN2(y1 + drop(g W2 + b2))
    Matrix dr2 = detail::layer_norm_backward(dx, c.ln2, lp.ln2_gain, gl.ln2_gain, gl.ln2_bias);
    Matrix df2 = dr2;
    if (dropout) detail::apply_mask(df2, trace.masks.ffn_out[l]);
    add_inplace(gl.w_2, matmul_tn(c.g, df2));
    add_inplace(gl.b_2, column_sums(df2));
    Matrix df1 = matmul_nt(df2, lp.w_2);
    for (std::size_t i = 0; i < df1.size(); ++i) df1[i] *= gelu_grad(c.f1[i]);
    add_inplace(gl.w_1, matmul_tn(c.y1, df1));
    add_inplace(gl.b_1, column_sums(df1));
    Matrix dy1 = dr2;
    add_inplace(dy1, matmul_nt(df1, lp.w_1));

    // y1 = LN1(x + drop(context W_O))
    Matrix dr1 = detail::layer_norm_backward(dy1, c.ln1, lp.ln1_gain, gl.ln1_gain, gl.ln1_bias);
    Matrix d_o = dr1;
    if (dropout) detail::apply_mask(d_o, trace.masks.attention_out[l]);
    add_inplace(gl.w_o, matmul_tn(c.context, d_o));
    Matrix dcontext = matmul_nt(d_o, lp.w_o);

    Matrix dq(T, d), dk_all(T, d), dv(T, d);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      const Matrix& a = c.attn[h];
      const Matrix qh = columns(c.q, h * dk, dk), kh = columns(c.k, h * dk, dk), vh = columns(c.v, h * dk, dk);
      const Matrix dout = columns(dcontext, h * dk, dk);
      set_columns(dv, h * dk, matmul_tn(a, dout));
      Matrix da = matmul_nt(dout, vh);
      // softmax backward, row by row
      for (std::size_t i = 0; i < T; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < T; ++j) dot += da(i, j) * a(i, j);
        for (std::size_t j = 0; j < T; ++j) da(i, j) = a(i, j) * (da(i, j) - dot) * inv_sqrt_dk;
      }
      set_columns(dq, h * dk, matmul(da, kh));
      set_columns(dk_all, h * dk, matmul_tn(da, qh));
    }
    add_inplace(gl.w_q, matmul_tn(c.x_in, dq));
    add_inplace(gl.w_k, matmul_tn(c.x_in, dk_all));
    add_inplace(gl.w_v, matmul_tn(c.x_in, dv));

    Matrix dx_in = dr1;
    add_inplace(dx_in, matmul_nt(dq, lp.w_q));
    add_inplace(dx_in, matmul_nt(dk_all, lp.w_k));
    add_inplace(dx_in, matmul_nt(dv, lp.w_v));
    dx = std::move(dx_in);
  }

  if (dropout) detail::apply_mask(dx, trace.masks.embedding);
  for (std::size_t t = 0; t < T; ++t) {
    auto tok = grads.token_embedding.row(static_cast<std::size_t>(trace.ids[t]));
    auto pos = grads.position_embedding.row(t);
    for (std::size_t i = 0; i < d; ++i) {
      tok[i] += dx(t, i);
      pos[i] += dx(t, i);
    }
  }
}

inline void check_gradients_finite(const ModelParams& grads) {
  grads.visit([](const std::string& name, const Matrix& m) {
    if (!m.all_finite()) throw Error(ErrorCode::NonFiniteGradient, name);
  });
}

// Gradient of the mean batch cross-entropy. `traces[i]` must come from
// forward() on `batch[i]`.
inline ModelParams backward(const ModelParams& params, const std::vector<EncodedExample>& batch,
                            const std::vector<ForwardTrace>& traces) {
  if (batch.size() != traces.size() || batch.empty())
    throw Error(ErrorCode::ShapeMismatch, "backward: batch and traces differ in size");
  auto grads = ModelParams::zeros(params.config);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    accumulate_gradient(params, traces[i], batch[i].label, scale, grads);
  check_gradients_finite(grads);
  return grads;
}

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { SGD, ADAM };

struct TrainConfig {
  int epochs = 20;
  std::size_t batch_size = 16;
  double learning_rate = 2e-4;
  OptimizerKind optimizer = OptimizerKind::ADAM;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  int early_stop_patience = 5;
  std::optional<double> gradient_clip_norm;
  bool track_train_accuracy = false;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "train config: " + what); };
    if (epochs < 0) bad("epochs must be >= 0");
    if (batch_size < 1) bad("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) bad("learning_rate must be > 0");
    if (early_stop_patience < 0) bad("early_stop_patience must be >= 0");
    if (gradient_clip_norm && !(*gradient_clip_norm > 0.0)) bad("gradient_clip_norm must be > 0");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && epsilon > 0)) bad("adam hyperparameters");
  }
};

inline double global_norm(const ModelParams& g) {
  double s = 0.0;
  g.visit([&](const std::string&, const Matrix& m) { s += squared_norm(m); });
  return std::sqrt(s);
}

inline void clip_gradients(ModelParams& grads, double max_norm) {
  const double n = global_norm(grads);
  if (n <= max_norm || n == 0.0) return;
  const double f = max_norm / n;
  grads.visit([&](const std::string&, Matrix& m) {
    for (auto& v : m.values()) v *= f;
  });
}

namespace detail {
// Applies `fn(param, grad, slot_a, slot_b)` to every scalar in lockstep.
template <typename F>
void for_each_scalar(ModelParams& params, const ModelParams& grads, ModelParams* a, ModelParams* b, F&& fn) {
  std::vector<Matrix*> pp, aa, bb;
  std::vector<const Matrix*> gg;
  params.visit([&](const std::string&, Matrix& m) { pp.push_back(&m); });
  grads.visit([&](const std::string&, const Matrix& m) { gg.push_back(&m); });
  if (a) a->visit([&](const std::string&, Matrix& m) { aa.push_back(&m); });
  if (b) b->visit([&](const std::string&, Matrix& m) { bb.push_back(&m); });
  for (std::size_t t = 0; t < pp.size(); ++t)
    for (std::size_t i = 0; i < pp[t]->size(); ++i)
      fn((*pp[t])[i], (*gg[t])[i], a ? &(*aa[t])[i] : nullptr, b ? &(*bb[t])[i] : nullptr);
}
}  // namespace detail

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, const ModelConfig& model)
      : cfg_(cfg), m_(ModelParams::zeros(model)), v_(ModelParams::zeros(model)) {}

  void step(ModelParams& params, const ModelParams& grads) {
    if (cfg_.optimizer == OptimizerKind::SGD) {
      const double lr = cfg_.learning_rate;
      detail::for_each_scalar(params, grads, nullptr, nullptr,
                              [lr](double& p, double g, double*, double*) { p -= lr * g; });
      return;
    }
    ++t_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2, eps = cfg_.epsilon, lr = cfg_.learning_rate;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    detail::for_each_scalar(params, grads, &m_, &v_, [&](double& p, double g, double* m, double* v) {
      *m = b1 * *m + (1.0 - b1) * g;
      *v = b2 * *v + (1.0 - b2) * g * g;
      p -= lr * (*m / c1) / (std::sqrt(*v / c2) + eps);
    });
  }

 private:
  TrainConfig cfg_;
  ModelParams m_, v_;
  long t_ = 0;
};

// ---------------------------------------------------------------------------
// Training loop

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double eval_loss = 0.0;
  double eval_f1 = 0.0;
  std::optional<double> train_accuracy;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;  // 1-based; 0 means the initialization was kept
  std::string best_checkpoint;
  double wall_seconds = 0.0;
};

struct TrainResult {
  TrainReport report;
  ModelParams best;
};

struct EvalOutcome {
  double loss = 0.0;
  MetricsReport metrics;
};

inline EvalOutcome evaluate(const ModelParams& params, const std::vector<EncodedExample>& data) {
  EvalOutcome out;
  ConfusionMatrix cm;
  for (const auto& ex : data) {
    const auto tr = forward(params, ex.seq);
    out.loss += cross_entropy(tr.probabilities, ex.label);
    cm.add(ex.label, tr.predicted());
  }
  if (!data.empty()) out.loss /= static_cast<double>(data.size());
  out.metrics = metrics(cm);
  return out;
}

inline double accuracy(const ModelParams& params, const std::vector<EncodedExample>& data) {
  return evaluate(params, data).metrics.accuracy;
}

// Mini-batch training from a seeded initialization. The parameters with the
// best eval macro-F1 are kept (earliest epoch on ties) and written to
// `checkpoint_stem` when given.
inline TrainResult train(const std::vector<EncodedExample>& train_set, const std::vector<EncodedExample>& eval_set,
                         const ModelConfig& model_cfg, const TrainConfig& cfg,
                         const std::optional<std::filesystem::path>& checkpoint_stem = std::nullopt,
                         const std::function<void(const EpochStats&)>& on_epoch = {}) {
  cfg.validate();
  model_cfg.validate();
  if (train_set.empty()) throw Error(ErrorCode::EmptySplit, "training split is empty");
  if (eval_set.empty()) throw Error(ErrorCode::EmptySplit, "evaluation split is empty");
  const auto started = std::chrono::steady_clock::now();

  auto params = init_params(model_cfg, cfg.seed);
  TrainResult result{{}, params};
  Optimizer opt(cfg, model_cfg);
  Rng order_rng(mix_seed(cfg.seed, 0x0de7));
  Rng dropout_rng(mix_seed(cfg.seed, 0xd409));

  std::vector<std::size_t> order(train_set.size());
  double best_f1 = -1.0;
  int bad_epochs = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      auto grads = ModelParams::zeros(model_cfg);
      for (std::size_t b = start; b < end; ++b) {
        const auto& ex = train_set[order[b]];
        const auto tr = forward(params, ex.seq, true, &dropout_rng);
        loss_sum += cross_entropy(tr.probabilities, ex.label);
        accumulate_gradient(params, tr, ex.label, scale, grads);
      }
      check_gradients_finite(grads);
      if (cfg.gradient_clip_norm) clip_gradients(grads, *cfg.gradient_clip_norm);
      opt.step(params, grads);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train_set.size());
    const auto ev = evaluate(params, eval_set);
    stats.eval_loss = ev.loss;
    stats.eval_f1 = ev.metrics.f1;
    if (cfg.track_train_accuracy) stats.train_accuracy = accuracy(params, train_set);
    result.report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (stats.eval_f1 > best_f1) {
      best_f1 = stats.eval_f1;
      result.best = params;
      result.report.best_epoch = epoch;
      bad_epochs = 0;
    } else if (++bad_epochs >= std::max(cfg.early_stop_patience, 1)) {
      break;
    }
  }

  if (checkpoint_stem) {
    save_checkpoint(result.best, cfg.seed, *checkpoint_stem);
    result.report.best_checkpoint = checkpoint_stem->string();
  }
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

inline void write_train_log(const TrainReport& report, const std::filesystem::path& path) {
  csv::Writer w({"epoch", "train_loss", "eval_loss", "eval_f1"});
  for (const auto& e : report.epochs)
    w.row({std::to_string(e.epoch), fmt::format("{:.10f}", e.train_loss), fmt::format("{:.10f}", e.eval_loss),
           fmt::format("{:.10f}", e.eval_f1)});
  w.save(path);
}

// ---------------------------------------------------------------------------
// Gradient verification

struct TensorCheck {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t entries = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double tolerance = 0.0;
  bool pass = true;

  const TensorCheck* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
};

struct GradCheckOptions {
  double tolerance = 1e-6;
  double epsilon = 1e-5;
  // Lower bound on the relative-error denominator. Central differences at
  // epsilon = 1e-5 carry ~1e-11 of round-off, so entries whose true gradient
  // is near zero cannot be compared purely relatively.
  double denominator_floor = 1e-4;
  std::size_t sequence_length = 6;  // including [CLS] and [SEP]
  // Test hook: perturbs the analytic gradient before comparison.
  std::function<void(ModelParams&)> corrupt;
};

// |a - n| / max(|a|, |n|, floor)
inline double relative_error(double analytic, double numeric, double floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff == 0.0) return 0.0;
  return diff / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Tiny model used for gradient verification. The wider init keeps layer
// norm away from near-constant inputs, where third derivatives are large
// enough that an epsilon = 1e-5 central difference is no longer accurate to
// 1e-6.
inline ModelConfig gradcheck_config() {
  ModelConfig c;
  c.vocab_size = 20;
  c.max_len = 8;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_layers = 1;
  c.d_ff = 16;
  c.dropout_rate = 0.1;
  c.init_std = 0.3;
  return c;
}

// Compares analytic gradients of a single random example against central
// finite differences on every parameter entry. Dropout masks drawn during
// the analytic pass are replayed for every perturbed evaluation.
inline GradCheckReport gradient_check(const ModelConfig& cfg, std::uint64_t seed, const GradCheckOptions& opt = {}) {
  cfg.validate();
  auto params = init_params(cfg, seed);
  Rng rng(mix_seed(seed, 0x6c));

  const std::size_t len = std::clamp<std::size_t>(opt.sequence_length, 3, cfg.max_len);
  TokenSequence seq;
  seq.ids.assign(cfg.max_len, Vocabulary::kPad);
  seq.mask.assign(cfg.max_len, 0);
  seq.ids[0] = Vocabulary::kCls;
  for (std::size_t t = 1; t + 1 < len; ++t) {
    const auto span = cfg.vocab_size > Vocabulary::kNumSpecial ? cfg.vocab_size - Vocabulary::kNumSpecial : 1;
    seq.ids[t] = static_cast<int>(std::min<std::size_t>(Vocabulary::kNumSpecial + rng.below(span), cfg.vocab_size - 1));
  }
  seq.ids[len - 1] = Vocabulary::kSep;
  seq.true_length = static_cast<int>(len);
  std::fill(seq.mask.begin(), seq.mask.begin() + static_cast<std::ptrdiff_t>(len), 1);
  const Label label = label_from_index(static_cast<int>(rng.below(kNumClasses)));

  Rng dropout_rng(mix_seed(seed, 0xd0));
  const auto trace = forward(params, seq, true, &dropout_rng);
  const DropoutMasks masks = trace.masks;
  auto grads = backward(params, {{seq, label}}, {trace});
  if (opt.corrupt) opt.corrupt(grads);

  auto loss_at = [&](const ModelParams& p) {
    return cross_entropy(forward(p, seq, true, nullptr, &masks).probabilities, label);
  };

  GradCheckReport report;
  report.tolerance = opt.tolerance;
  std::vector<Matrix*> param_tensors;
  std::vector<std::string> names;
  params.visit([&](const std::string& name, Matrix& m) {
    param_tensors.push_back(&m);
    names.push_back(name);
  });
  std::vector<const Matrix*> grad_tensors;
  grads.visit([&](const std::string&, const Matrix& m) { grad_tensors.push_back(&m); });

  for (std::size_t t = 0; t < param_tensors.size(); ++t) {
    TensorCheck tc;
    tc.name = names[t];
    Matrix& m = *param_tensors[t];
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double orig = m[i];
      m[i] = orig + opt.epsilon;
      const double up = loss_at(params);
      m[i] = orig - opt.epsilon;
      const double down = loss_at(params);
      m[i] = orig;
      const double numeric = (up - down) / (2.0 * opt.epsilon);
      const double analytic = (*grad_tensors[t])[i];
      tc.max_abs_error = std::max(tc.max_abs_error, std::abs(analytic - numeric));
      tc.max_rel_error = std::max(tc.max_rel_error, relative_error(analytic, numeric, opt.denominator_floor));
      ++tc.entries;
    }
    tc.pass = tc.max_rel_error <= opt.tolerance;
    report.pass = report.pass && tc.pass;
    report.tensors.push_back(std::move(tc));
  }
  return report;
}

}  // namespace taskrisk
