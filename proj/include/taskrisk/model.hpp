// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "taskrisk/core.hpp"
#include "taskrisk/tensor.hpp"
#include "taskrisk/tokenizer.hpp"

namespace taskrisk {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t max_len = 64;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t d_ff = 128;
  std::size_t n_classes = kNumClasses;
  double dropout_rate = 0.1;
  double init_std = 0.02;
  double layer_norm_eps = 1e-12;

  std::size_t d_k() const { return d_model / n_heads; }

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "model config: " + what); };
    if (vocab_size == 0 || max_len == 0 || d_model == 0 || n_heads == 0 || n_layers == 0 || d_ff == 0)
      bad("sizes must be positive");
    if (d_model % n_heads != 0) bad("d_model must be divisible by n_heads");
    if (n_classes != kNumClasses) bad("n_classes is fixed at 3");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) bad("dropout_rate must be in [0,1)");
    if (!(init_std > 0.0)) bad("init_std must be positive");
    if (!(layer_norm_eps > 0.0)) bad("layer_norm_eps must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LayerParams {
  Matrix w_q, w_k, w_v, w_o;    // d_model x d_model
  Matrix w_1, b_1;              // d_model x d_ff, 1 x d_ff
  Matrix w_2, b_2;              // d_ff x d_model, 1 x d_model
  Matrix ln1_gain, ln1_bias;    // 1 x d_model
  Matrix ln2_gain, ln2_bias;    // 1 x d_model

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

// Every learnable tensor of the encoder and the classification head. The
// same type doubles as the gradient container.
struct ModelParams {
  ModelConfig config;
  Matrix token_embedding;     // vocab_size x d_model
  Matrix position_embedding;  // max_len x d_model
  std::vector<LayerParams> layers;
  Matrix w_cls;  // d_model x 3
  Matrix b_cls;  // 1 x 3

  static ModelParams zeros(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams p;
    p.config = cfg;
    const auto d = cfg.d_model, f = cfg.d_ff;
    p.token_embedding = Matrix(cfg.vocab_size, d);
    p.position_embedding = Matrix(cfg.max_len, d);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
      LayerParams lp;
      lp.w_q = lp.w_k = lp.w_v = lp.w_o = Matrix(d, d);
      lp.w_1 = Matrix(d, f);
      lp.b_1 = Matrix(1, f);
      lp.w_2 = Matrix(f, d);
      lp.b_2 = Matrix(1, d);
      lp.ln1_gain = lp.ln1_bias = lp.ln2_gain = lp.ln2_bias = Matrix(1, d);
      p.layers.push_back(std::move(lp));
    }
    p.w_cls = Matrix(d, cfg.n_classes);
    p.b_cls = Matrix(1, cfg.n_classes);
    return p;
  }

  // Visits (name, tensor) in a fixed order; checkpoints rely on it.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Matrix& m) { n += m.size(); });
    return n;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    f(std::string("token_embedding"), self.token_embedding);
    f(std::string("position_embedding"), self.position_embedding);
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      auto& lp = self.layers[l];
      const std::string pre = "layer" + std::to_string(l) + ".";
      f(pre + "W_Q", lp.w_q);
      f(pre + "W_K", lp.w_k);
      f(pre + "W_V", lp.w_v);
      f(pre + "W_O", lp.w_o);
      f(pre + "W1", lp.w_1);
      f(pre + "b1", lp.b_1);
      f(pre + "W2", lp.w_2);
      f(pre + "b2", lp.b_2);
      f(pre + "ln1_gain", lp.ln1_gain);
      f(pre + "ln1_bias", lp.ln1_bias);
      f(pre + "ln2_gain", lp.ln2_gain);
      f(pre + "ln2_bias", lp.ln2_bias);
    }
    f(std::string("W_cls"), self.w_cls);
    f(std::string("b_cls"), self.b_cls);
  }
};

// Weights and embeddings ~ N(0, init_std^2); biases 0; layer-norm gains 1.
inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  auto p = ModelParams::zeros(cfg);
  Rng rng(mix_seed(seed, 0x1417));
  p.visit([&](const std::string& name, Matrix& m) {
    const bool is_gain = name.find("_gain") != std::string::npos;
    const bool is_bias = name.find("bias") != std::string::npos || name.ends_with(".b1") ||
                         name.ends_with(".b2") || name == "b_cls";
    if (is_gain) {
      m.fill(1.0);
    } else if (!is_bias) {
      for (auto& x : m.values()) x = cfg.init_std * rng.normal();
    }
  });
  return p;
}

// ---------------------------------------------------------------------------
// Primitives

// Max-subtracted softmax. Entries equal to -inf map to exactly 0.
inline std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> out(z.size(), 0.0);
  if (z.empty()) return out;
  double m = -std::numeric_limits<double>::infinity();
  for (double v : z) m = std::max(m, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = z[i] == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(z[i] - m);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

inline std::array<double, kNumClasses> softmax3(const std::array<double, kNumClasses>& z) {
  const auto v = softmax(z);
  return {v[0], v[1], v[2]};
}

// -log p[label], with p floored at 1e-12.
inline double cross_entropy(const std::array<double, kNumClasses>& probabilities, Label true_label) {
  return -std::log(std::max(probabilities[index_of(true_label)], 1e-12));
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline double gelu_grad(double x) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

struct AttentionResult {
  Matrix output;   // L x d_v
  Matrix weights;  // L x L, row-stochastic over unmasked columns
};

// softmax(Q K^T / sqrt(d_k)) V with masked key columns excluded.
inline AttentionResult attention(const Matrix& q, const Matrix& k, const Matrix& v,
                                 std::span<const int> mask) {
  if (q.cols() != k.cols() || q.rows() != k.rows() || k.rows() != v.rows() || mask.size() != k.rows())
    throw Error(ErrorCode::ShapeMismatch, "attention: Q " + q.shape_string() + ", K " +
                                              k.shape_string() + ", V " + v.shape_string() +
                                              ", mask " + std::to_string(mask.size()));
  if (std::none_of(mask.begin(), mask.end(), [](int m) { return m != 0; }))
    throw Error(ErrorCode::InvalidArgument, "attention: every position is masked");

  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Matrix scores = matmul_nt(q, k);
  AttentionResult res;
  res.weights = Matrix(q.rows(), k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    auto s = scores.row(i);
    for (std::size_t j = 0; j < k.rows(); ++j)
      s[j] = mask[j] ? s[j] * scale : -std::numeric_limits<double>::infinity();
    const auto w = softmax(s);
    std::copy(w.begin(), w.end(), res.weights.row(i).begin());
  }
  res.output = matmul(res.weights, v);
  return res;
}

namespace detail {

struct LayerNormCache {
  Matrix xhat;
  std::vector<double> inv_std;
};

inline Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps,
                         LayerNormCache& cache) {
  const auto n = x.cols();
  Matrix y(x.rows(), n);
  cache.xhat = Matrix(x.rows(), n);
  cache.inv_std.assign(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    cache.inv_std[r] = inv;
    for (std::size_t c = 0; c < n; ++c) {
      const double xh = (row[c] - mean) * inv;
      cache.xhat(r, c) = xh;
      y(r, c) = gain[c] * xh + bias[c];
    }
  }
  return y;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Forward pass

// Inverted-dropout multipliers (0 or 1/(1-p)) for each dropout site. Empty
// matrices mean the site is inactive.
struct DropoutMasks {
  Matrix embedding;
  std::vector<Matrix> attention_out;
  std::vector<Matrix> ffn_out;

  bool empty() const { return embedding.size() == 0; }
};

struct LayerCache {
  Matrix x_in;
  Matrix q, k, v;
  std::vector<Matrix> attn;  // per head, T x T
  Matrix context;
  detail::LayerNormCache ln1;
  Matrix y1;
  Matrix f1;  // pre-activation
  Matrix g;   // GELU(f1)
  detail::LayerNormCache ln2;
  Matrix out;
};

struct ForwardTrace {
  std::array<double, kNumClasses> logits{};
  std::array<double, kNumClasses> probabilities{};
  std::vector<double> pooled;  // hidden state at [CLS]
  std::vector<int> ids;        // the T unpadded ids that were processed
  std::vector<LayerCache> layers;
  DropoutMasks masks;

  std::size_t length() const { return ids.size(); }
  const Matrix& attention(std::size_t layer, std::size_t head) const { return layers[layer].attn[head]; }

  Label predicted() const {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
      if (probabilities[c] > probabilities[best]) best = c;
    return label_from_index(best);
  }
};

namespace detail {

inline Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  Matrix m(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  for (auto& x : m.values()) x = rng.uniform() < rate ? 0.0 : keep;
  return m;
}

inline void apply_mask(Matrix& x, const Matrix& mask) {
  if (mask.size() == 0) return;
  detail::require(x.same_shape(mask), "dropout mask shape");
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= mask[i];
}

inline void check_finite(const Matrix& m, const std::string& where) {
  if (!m.all_finite()) throw Error(ErrorCode::NonFiniteActivation, where);
}

}  // namespace detail

// Runs the encoder over the unpadded prefix of `seq` (padded positions are
// masked as keys and cannot influence the [CLS] state). Dropout is active
// when `train_mode` is set and draws from `rng`, unless `replay` supplies
// previously recorded masks.
inline ForwardTrace forward(const ModelParams& params, const TokenSequence& seq, bool train_mode = false,
                            Rng* rng = nullptr, const DropoutMasks* replay = nullptr) {
  const auto& cfg = params.config;
  const auto d = cfg.d_model, dk = cfg.d_k();
  if (seq.ids.size() != seq.mask.size() || seq.true_length < 1 ||
      static_cast<std::size_t>(seq.true_length) > seq.ids.size())
    throw Error(ErrorCode::ShapeMismatch, "token sequence is inconsistent");
  const auto T = static_cast<std::size_t>(seq.true_length);
  if (T > cfg.max_len)
    throw Error(ErrorCode::ShapeMismatch, "sequence length " + std::to_string(T) +
                                              " exceeds max_len " + std::to_string(cfg.max_len));
  for (std::size_t t = 0; t < seq.ids.size(); ++t)
    if ((seq.mask[t] != 0) != (t < T))
      throw Error(ErrorCode::ShapeMismatch, "mask must cover exactly the first true_length positions");

  const bool use_dropout = replay ? !replay->empty() : (train_mode && cfg.dropout_rate > 0.0);
  if (use_dropout && !replay && !rng)
    throw Error(ErrorCode::InvalidArgument, "train-mode dropout needs a generator");

  ForwardTrace tr;
  tr.ids.assign(seq.ids.begin(), seq.ids.begin() + static_cast<std::ptrdiff_t>(T));

  Matrix x(T, d);
  for (std::size_t t = 0; t < T; ++t) {
    const int id = tr.ids[t];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size)
      throw Error(ErrorCode::ShapeMismatch, "token id " + std::to_string(id) + " outside vocabulary");
    auto tok = params.token_embedding.row(static_cast<std::size_t>(id));
    auto pos = params.position_embedding.row(t);
    for (std::size_t c = 0; c < d; ++c) x(t, c) = tok[c] + pos[c];
  }
  if (use_dropout) {
    tr.masks = replay ? *replay : DropoutMasks{};
    if (!replay) tr.masks.embedding = detail::dropout_mask(T, d, cfg.dropout_rate, *rng);
    detail::apply_mask(x, tr.masks.embedding);
  }
  detail::check_finite(x, "embeddings");

  const std::vector<int> all_visible(T, 1);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const auto& lp = params.layers[l];
    LayerCache c;
    c.x_in = x;
    c.q = matmul(x, lp.w_q);
    c.k = matmul(x, lp.w_k);
    c.v = matmul(x, lp.w_v);
    c.context = Matrix(T, d);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      auto res = attention(columns(c.q, h * dk, dk), columns(c.k, h * dk, dk), columns(c.v, h * dk, dk),
                           all_visible);
      set_columns(c.context, h * dk, res.output);
      c.attn.push_back(std::move(res.weights));
    }
    Matrix o = matmul(c.context, lp.w_o);
    if (use_dropout) {
      if (!replay) tr.masks.attention_out.push_back(detail::dropout_mask(T, d, cfg.dropout_rate, *rng));
      detail::apply_mask(o, tr.masks.attention_out.at(l));
    }
    add_inplace(o, x);
    c.y1 = detail::layer_norm(o, lp.ln1_gain, lp.ln1_bias, cfg.layer_norm_eps, c.ln1);

    c.f1 = matmul(c.y1, lp.w_1);
    add_row_inplace(c.f1, lp.b_1);
    c.g = c.f1;
    for (auto& v : c.g.values()) v = gelu(v);
    Matrix f2 = matmul(c.g, lp.w_2);
    add_row_inplace(f2, lp.b_2);
    if (use_dropout) {
      if (!replay) tr.masks.ffn_out.push_back(detail::dropout_mask(T, d, cfg.dropout_rate, *rng));
      detail::apply_mask(f2, tr.masks.ffn_out.at(l));
    }
    add_inplace(f2, c.y1);
    c.out = detail::layer_norm(f2, lp.ln2_gain, lp.ln2_bias, cfg.layer_norm_eps, c.ln2);
    detail::check_finite(c.out, "layer " + std::to_string(l));
    x = c.out;
    tr.layers.push_back(std::move(c));
  }

  tr.pooled.assign(x.row(0).begin(), x.row(0).end());
  for (std::size_t j = 0; j < cfg.n_classes; ++j) {
    double z = params.b_cls[j];
    for (std::size_t i = 0; i < d; ++i) z += tr.pooled[i] * params.w_cls(i, j);
    tr.logits[j] = z;
  }
  for (double z : tr.logits)
    if (!std::isfinite(z)) throw Error(ErrorCode::NonFiniteActivation, "classifier logits");
  tr.probabilities = softmax3(tr.logits);
  return tr;
}

// ---------------------------------------------------------------------------
// Attention export

struct TermMass {
  std::string term;
  double mass = 0.0;
};

// Final-layer [CLS] attention averaged over heads, with special tokens
// removed, "##" continuations folded into their word, and the result
// renormalized to sum to 1. Returns words in sentence order.
inline std::vector<TermMass> extract_attention(const ForwardTrace& trace, const Vocabulary& vocab) {
  std::vector<TermMass> out;
  if (trace.layers.empty()) return out;
  const auto& last = trace.layers.back();
  const auto T = trace.length();
  std::vector<double> mass(T, 0.0);
  for (const auto& a : last.attn)
    for (std::size_t t = 0; t < T; ++t) mass[t] += a(0, t) / static_cast<double>(last.attn.size());

  bool open_word = false;
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const int id = trace.ids[t];
    if (Vocabulary::is_special(id)) {
      open_word = false;
      continue;
    }
    const auto& tok = vocab.token(id);
    const bool cont = tok.rfind(kContinuation, 0) == 0;
    if (cont && open_word) {
      out.back().term += tok.substr(kContinuation.size());
      out.back().mass += mass[t];
    } else {
      out.push_back({cont ? tok.substr(kContinuation.size()) : tok, mass[t]});
      open_word = true;
    }
    total += mass[t];
  }
  if (total > 0.0)
    for (auto& tm : out) tm.mass /= total;
  return out;
}

}  // namespace taskrisk
