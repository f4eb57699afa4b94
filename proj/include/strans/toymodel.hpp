// strans/toymodel.hpp
//
// A small trainable transducer: embedding + tanh recurrent encoder with
// mean-pool time reduction, tanh recurrent prediction network, and a
// log-softmax joiner. Gradients are hand-derived, seeded by the lattice
// module's dL/dlogits. Includes a synthetic translation task generator and
// a binary checkpoint format.
//
// Checkpoint layout (little-endian):
//   bytes 0..7   magic "STRNCKPT"
//   u32          version (1)
//   u32          config echo length, then that many raw bytes
//   i32 x4       vocab_src, vocab_tgt, dim, time_reduction
//   per array, in the fixed order source embedding, target embedding,
//   encoder {w_x, w_h, b}, predictor {w_x, w_h, b}, joiner {w_e, w_p, b_j,
//   w_o, b_o}: u64 element count followed by f64 values.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "strans/lattice.hpp"
#include "strans/logmath.hpp"

namespace strans::toy {

using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major

  static Mat make(int rows, int cols) {
    Mat m;
    m.rows = rows;
    m.cols = cols;
    m.a.assign(static_cast<size_t>(rows) * cols, 0.0);
    return m;
  }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  std::span<const double> row(int r) const {
    return {a.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }
  std::span<double> row(int r) {
    return {a.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }
};

// h_t = tanh(w_x x_t + w_h h_{t-1} + b)
struct RecurrentCell {
  Mat w_x, w_h;
  Vec b;
};

struct ModelDims {
  int vocab_src = 16;
  int vocab_tgt = 16;      // joiner output dimension is vocab_tgt + 1
  int dim = 32;
  int time_reduction = 4;  // embeddings are mean-pooled in groups of this size

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct ModelParams {
  ModelDims dims;
  Mat src_embed;       // vocab_src x dim
  Mat tgt_embed;       // (vocab_tgt + 1) x dim; the blank row is unused
  RecurrentCell enc;
  RecurrentCell pred;
  Mat w_e, w_p;        // dim x dim joiner inputs
  Vec b_j;             // dim
  Mat w_o;             // (vocab_tgt + 1) x dim output projection
  Vec b_o;             // vocab_tgt + 1
};

struct Utterance {
  std::vector<int32_t> source_frames;  // symbol ids in [0, vocab_src)
  std::vector<int32_t> target_tokens;  // token ids in [0, vocab_tgt)
};

namespace detail {

inline void check_dims(const ModelDims& d) {
  if (d.vocab_src < 1 || d.vocab_tgt < 1 || d.dim < 1 || d.time_reduction < 1)
    throw std::invalid_argument("bad model dimensions");
}

inline Vec matvec(const Mat& m, std::span<const double> x) {
  Vec y(m.rows, 0.0);
  for (int r = 0; r < m.rows; ++r) {
    double s = 0.0;
    const double* row = m.a.data() + static_cast<size_t>(r) * m.cols;
    for (int c = 0; c < m.cols; ++c) s += row[c] * x[c];
    y[r] = s;
  }
  return y;
}

// out += m^T dy
inline void add_matvec_t(const Mat& m, std::span<const double> dy, std::span<double> out) {
  for (int r = 0; r < m.rows; ++r) {
    const double* row = m.a.data() + static_cast<size_t>(r) * m.cols;
    for (int c = 0; c < m.cols; ++c) out[c] += row[c] * dy[r];
  }
}

// m += dy x^T
inline void add_outer(Mat& m, std::span<const double> dy, std::span<const double> x) {
  for (int r = 0; r < m.rows; ++r) {
    double* row = m.a.data() + static_cast<size_t>(r) * m.cols;
    for (int c = 0; c < m.cols; ++c) row[c] += dy[r] * x[c];
  }
}

inline Vec cell_step(const RecurrentCell& cell, std::span<const double> x,
                     std::span<const double> h_prev) {
  Vec h = matvec(cell.w_x, x);
  const Vec rec = matvec(cell.w_h, h_prev);
  for (size_t i = 0; i < h.size(); ++i) h[i] = std::tanh(h[i] + rec[i] + cell.b[i]);
  return h;
}

// Fixed traversal order of every parameter array; checkpoints, updates,
// clipping, and finite-difference indexing all rely on it.
template <class Params, class Fn>
void for_each_array(Params& p, Fn&& fn) {
  fn(p.src_embed.a);
  fn(p.tgt_embed.a);
  fn(p.enc.w_x.a);
  fn(p.enc.w_h.a);
  fn(p.enc.b);
  fn(p.pred.w_x.a);
  fn(p.pred.w_h.a);
  fn(p.pred.b);
  fn(p.w_e.a);
  fn(p.w_p.a);
  fn(p.b_j);
  fn(p.w_o.a);
  fn(p.b_o);
}

template <class PA, class PB, class Fn>
void for_each_array_pair(PA& pa, PB& pb, Fn&& fn) {
  fn(pa.src_embed.a, pb.src_embed.a);
  fn(pa.tgt_embed.a, pb.tgt_embed.a);
  fn(pa.enc.w_x.a, pb.enc.w_x.a);
  fn(pa.enc.w_h.a, pb.enc.w_h.a);
  fn(pa.enc.b, pb.enc.b);
  fn(pa.pred.w_x.a, pb.pred.w_x.a);
  fn(pa.pred.w_h.a, pb.pred.w_h.a);
  fn(pa.pred.b, pb.pred.b);
  fn(pa.w_e.a, pb.w_e.a);
  fn(pa.w_p.a, pb.w_p.a);
  fn(pa.b_j, pb.b_j);
  fn(pa.w_o.a, pb.w_o.a);
  fn(pa.b_o, pb.b_o);
}

}  // namespace detail

inline ModelParams zero_params(const ModelDims& dims) {
  detail::check_dims(dims);
  ModelParams p;
  p.dims = dims;
  const int d = dims.dim;
  p.src_embed = Mat::make(dims.vocab_src, d);
  p.tgt_embed = Mat::make(dims.vocab_tgt + 1, d);
  p.enc = {Mat::make(d, d), Mat::make(d, d), Vec(d, 0.0)};
  p.pred = {Mat::make(d, d), Mat::make(d, d), Vec(d, 0.0)};
  p.w_e = Mat::make(d, d);
  p.w_p = Mat::make(d, d);
  p.b_j = Vec(d, 0.0);
  p.w_o = Mat::make(dims.vocab_tgt + 1, d);
  p.b_o = Vec(dims.vocab_tgt + 1, 0.0);
  return p;
}

inline ModelParams init_params(const ModelDims& dims, uint64_t seed) {
  ModelParams p = zero_params(dims);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  detail::for_each_array(p, [&](std::vector<double>& a) {
    for (double& v : a) v = dist(rng);
  });
  return p;
}

// Number of scalar parameters; also the length of the flat views below.
inline size_t param_count(const ModelParams& p) {
  size_t n = 0;
  detail::for_each_array(const_cast<ModelParams&>(p),
                         [&](std::vector<double>& a) { n += a.size(); });
  return n;
}

inline double& param_at(ModelParams& p, size_t index) {
  double* found = nullptr;
  detail::for_each_array(p, [&](std::vector<double>& a) {
    if (found == nullptr) {
      if (index < a.size()) {
        found = &a[index];
      } else {
        index -= a.size();
      }
    }
  });
  if (found == nullptr) throw std::out_of_range("parameter index out of range");
  return *found;
}

// Embeds source frames, mean-pools groups of time_reduction embeddings
// (a trailing partial group is dropped), then runs the causal cell.
struct EncodeTrace {
  Mat pooled;  // T' x dim pooled embeddings
  Mat states;  // T' x dim hidden states
};

inline EncodeTrace encode_trace(const ModelParams& p, const std::vector<int32_t>& source_frames) {
  const int tr = p.dims.time_reduction;
  const int T = static_cast<int>(source_frames.size());
  if (T < tr) throw std::invalid_argument("need at least time_reduction source frames");
  for (int32_t s : source_frames) {
    if (s < 0 || s >= p.dims.vocab_src) throw std::out_of_range("source symbol out of range");
  }
  const int Tr = T / tr;
  const int d = p.dims.dim;
  EncodeTrace trace;
  trace.pooled = Mat::make(Tr, d);
  trace.states = Mat::make(Tr, d);
  Vec h(d, 0.0);
  for (int t = 0; t < Tr; ++t) {
    auto pooled = trace.pooled.row(t);
    for (int j = 0; j < tr; ++j) {
      const auto e = p.src_embed.row(source_frames[t * tr + j]);
      for (int c = 0; c < d; ++c) pooled[c] += e[c] / tr;
    }
    h = detail::cell_step(p.enc, pooled, h);
    std::copy(h.begin(), h.end(), trace.states.row(t).begin());
  }
  return trace;
}

inline Mat encode(const ModelParams& p, const std::vector<int32_t>& source_frames) {
  return encode_trace(p, source_frames).states;
}

// Predictor states for every history prefix: row u is the state after
// consuming u tokens; row 0 is the zero-history state.
inline Mat predict_trace(const ModelParams& p, const std::vector<int32_t>& tokens) {
  const int d = p.dims.dim;
  Mat states = Mat::make(static_cast<int>(tokens.size()) + 1, d);
  Vec h(d, 0.0);
  for (size_t u = 0; u < tokens.size(); ++u) {
    const int32_t y = tokens[u];
    if (y < 0 || y >= p.dims.vocab_tgt) throw std::out_of_range("target token out of range");
    h = detail::cell_step(p.pred, p.tgt_embed.row(y), h);
    std::copy(h.begin(), h.end(), states.row(u + 1).begin());
  }
  return states;
}

inline Vec predict(const ModelParams& p, const std::vector<int32_t>& tokens) {
  const Mat states = predict_trace(p, tokens);
  const auto last = states.row(states.rows - 1);
  return {last.begin(), last.end()};
}

// log-softmax(w_o tanh(w_e e + w_p pr + b_j) + b_o)
inline Vec joint(const ModelParams& p, std::span<const double> enc_state,
                 std::span<const double> pred_state) {
  Vec z = detail::matvec(p.w_e, enc_state);
  const Vec zp = detail::matvec(p.w_p, pred_state);
  for (size_t i = 0; i < z.size(); ++i) z[i] = std::tanh(z[i] + zp[i] + p.b_j[i]);
  Vec logits = detail::matvec(p.w_o, z);
  for (size_t v = 0; v < logits.size(); ++v) logits[v] += p.b_o[v];
  const double lse = log_sum(logits);
  for (double& v : logits) v -= lse;
  return logits;
}

inline lattice::LogProbLattice fill_lattice(const ModelParams& p, const Utterance& utt) {
  const Mat enc = encode(p, utt.source_frames);
  const Mat pred = predict_trace(p, utt.target_tokens);
  auto lat = lattice::LogProbLattice::make(enc.rows, pred.rows - 1, p.dims.vocab_tgt + 1);
  for (int t = 0; t < enc.rows; ++t) {
    for (int u = 0; u < pred.rows; ++u) {
      const Vec lp = joint(p, enc.row(t), pred.row(u));
      std::copy(lp.begin(), lp.end(), lat.slice(t, u).begin());
    }
  }
  return lat;
}

struct LossGrad {
  double loss = 0.0;
  ModelParams grad;
};

// Full backward pass: lattice dL/dlogits -> joiner -> both recurrent cells
// (backprop through time) -> embedding tables.
inline LossGrad loss_and_gradient(const ModelParams& p, const Utterance& utt) {
  const int d = p.dims.dim;
  const int V = p.dims.vocab_tgt + 1;
  const EncodeTrace enc = encode_trace(p, utt.source_frames);
  const Mat pred = predict_trace(p, utt.target_tokens);
  const int Tr = enc.states.rows;
  const int U = pred.rows - 1;

  auto lat = lattice::LogProbLattice::make(Tr, U, V);
  std::vector<Vec> joiner_hidden(static_cast<size_t>(Tr) * pred.rows);
  for (int t = 0; t < Tr; ++t) {
    for (int u = 0; u <= U; ++u) {
      Vec z = detail::matvec(p.w_e, enc.states.row(t));
      const Vec zp = detail::matvec(p.w_p, pred.row(u));
      for (int i = 0; i < d; ++i) z[i] = std::tanh(z[i] + zp[i] + p.b_j[i]);
      Vec logits = detail::matvec(p.w_o, z);
      for (int v = 0; v < V; ++v) logits[v] += p.b_o[v];
      const double lse = log_sum(logits);
      auto slice = lat.slice(t, u);
      for (int v = 0; v < V; ++v) slice[v] = logits[v] - lse;
      joiner_hidden[static_cast<size_t>(t) * pred.rows + u] = std::move(z);
    }
  }

  LossGrad out;
  out.loss = lattice::loss(lat, utt.target_tokens);
  out.grad = zero_params(p.dims);
  const std::vector<double> dlogits = lattice::gradient(lat, utt.target_tokens);

  Mat denc = Mat::make(Tr, d);
  Mat dpred = Mat::make(pred.rows, d);
  Vec dz(d), dpre(d);
  for (int t = 0; t < Tr; ++t) {
    for (int u = 0; u <= U; ++u) {
      const double* dl = dlogits.data() + (static_cast<size_t>(t) * (U + 1) + u) * V;
      const std::span<const double> dl_span{dl, static_cast<size_t>(V)};
      const Vec& z = joiner_hidden[static_cast<size_t>(t) * pred.rows + u];
      detail::add_outer(out.grad.w_o, dl_span, z);
      for (int v = 0; v < V; ++v) out.grad.b_o[v] += dl[v];
      std::fill(dz.begin(), dz.end(), 0.0);
      detail::add_matvec_t(p.w_o, dl_span, dz);
      for (int i = 0; i < d; ++i) dpre[i] = dz[i] * (1.0 - z[i] * z[i]);
      detail::add_outer(out.grad.w_e, dpre, enc.states.row(t));
      detail::add_outer(out.grad.w_p, dpre, pred.row(u));
      for (int i = 0; i < d; ++i) out.grad.b_j[i] += dpre[i];
      detail::add_matvec_t(p.w_e, dpre, denc.row(t));
      detail::add_matvec_t(p.w_p, dpre, dpred.row(u));
    }
  }

  // Encoder BPTT over pooled inputs, then spread to source embeddings.
  const int tr = p.dims.time_reduction;
  Vec dpool(d);
  for (int t = Tr - 1; t >= 0; --t) {
    const auto h = enc.states.row(t);
    const auto dh = denc.row(t);
    for (int i = 0; i < d; ++i) dpre[i] = dh[i] * (1.0 - h[i] * h[i]);
    detail::add_outer(out.grad.enc.w_x, dpre, enc.pooled.row(t));
    if (t > 0) {
      detail::add_outer(out.grad.enc.w_h, dpre, enc.states.row(t - 1));
      detail::add_matvec_t(p.enc.w_h, dpre, denc.row(t - 1));
    }
    for (int i = 0; i < d; ++i) out.grad.enc.b[i] += dpre[i];
    std::fill(dpool.begin(), dpool.end(), 0.0);
    detail::add_matvec_t(p.enc.w_x, dpre, dpool);
    for (int j = 0; j < tr; ++j) {
      auto ge = out.grad.src_embed.row(utt.source_frames[t * tr + j]);
      for (int i = 0; i < d; ++i) ge[i] += dpool[i] / tr;
    }
  }

  // Predictor BPTT; row 0 is the constant zero-history state.
  for (int u = U; u >= 1; --u) {
    const auto g = pred.row(u);
    const auto dg = dpred.row(u);
    for (int i = 0; i < d; ++i) dpre[i] = dg[i] * (1.0 - g[i] * g[i]);
    const int32_t y = utt.target_tokens[u - 1];
    detail::add_outer(out.grad.pred.w_x, dpre, p.tgt_embed.row(y));
    detail::add_outer(out.grad.pred.w_h, dpre, pred.row(u - 1));
    for (int i = 0; i < d; ++i) out.grad.pred.b[i] += dpre[i];
    detail::add_matvec_t(p.pred.w_x, dpre, out.grad.tgt_embed.row(y));
    detail::add_matvec_t(p.pred.w_h, dpre, dpred.row(u - 1));
  }
  return out;
}

inline double loss(const ModelParams& p, const Utterance& utt) {
  return lattice::loss(fill_lattice(p, utt), utt.target_tokens);
}

struct TrainStepResult {
  ModelParams params;
  double mean_loss = 0.0;
};

constexpr double kGradClipNorm = 5.0;

// One plain gradient-descent step on the batch mean loss, with global-norm
// clipping. Summation order over the batch is fixed for reproducibility.
inline TrainStepResult train_step(const ModelParams& p, const std::vector<Utterance>& batch,
                                  double learning_rate) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  ModelParams grad = zero_params(p.dims);
  double loss_sum = 0.0;
  for (const Utterance& utt : batch) {
    LossGrad lg = loss_and_gradient(p, utt);
    if (!std::isfinite(lg.loss)) throw std::runtime_error("train_step: non-finite loss");
    loss_sum += lg.loss;
    detail::for_each_array_pair(grad, lg.grad, [](std::vector<double>& acc, std::vector<double>& g) {
      for (size_t k = 0; k < acc.size(); ++k) acc[k] += g[k];
    });
  }

  const double scale = 1.0 / batch.size();
  double sq_norm = 0.0;
  detail::for_each_array(grad, [&](std::vector<double>& a) {
    for (double& v : a) {
      v *= scale;
      sq_norm += v * v;
    }
  });
  const double norm = std::sqrt(sq_norm);
  const double clip = norm > kGradClipNorm ? kGradClipNorm / norm : 1.0;

  TrainStepResult res;
  res.params = p;
  res.mean_loss = loss_sum * scale;
  const double step = learning_rate * clip;
  detail::for_each_array_pair(res.params, grad, [step](std::vector<double>& w, std::vector<double>& g) {
    for (size_t k = 0; k < w.size(); ++k) w[k] -= step * g[k];
  });
  return res;
}

// ---------------------------------------------------------------------------
// Synthetic translation task

struct SynthTaskConfig {
  int vocab_src = 16;
  int vocab_tgt = 16;
  int min_symbols = 3;    // source symbols per utterance, inclusive range
  int max_symbols = 8;
  // Swap the pair starting at every multiple; 0 disables. When active, symbol
  // counts are drawn from the multiples of the period inside [min, max] so
  // every pair is complete: a causal encoder cannot see whether the stream
  // ends after an unpaired symbol, which would make its emission undecidable.
  int swap_period = 2;
  double dup_prob = 0.0;  // chance a target symbol is emitted twice
  int upsample_r = 4;     // source frames per symbol
  double noise_prob = 0.0;  // per-frame substitution rate
  uint64_t seed = 1;
};

namespace detail {

inline void check_task_config(const SynthTaskConfig& cfg) {
  if (cfg.vocab_src < 4 || cfg.vocab_tgt < 4) throw std::invalid_argument("vocab sizes must be >= 4");
  if (cfg.min_symbols < 1 || cfg.max_symbols < cfg.min_symbols)
    throw std::invalid_argument("bad symbol count range");
  if (cfg.swap_period < 0) throw std::invalid_argument("swap_period must be >= 0");
  if (cfg.swap_period >= 2 &&
      (cfg.max_symbols / cfg.swap_period) * cfg.swap_period < cfg.min_symbols)
    throw std::invalid_argument("symbol range holds no multiple of swap_period");
  if (cfg.dup_prob < 0 || cfg.dup_prob > 1 || cfg.noise_prob < 0 || cfg.noise_prob > 1)
    throw std::invalid_argument("probabilities must lie in [0, 1]");
  if (cfg.upsample_r < 1) throw std::invalid_argument("upsample_r must be >= 1");
}

// Affine map x -> a x + 3 (mod vocab_tgt) with a coprime to vocab_tgt, so
// the map is a bijection whenever the vocabularies match.
inline int32_t task_bijection(int32_t x, int vocab_tgt) {
  int a = 5;
  while (std::gcd(a, vocab_tgt) != 1) a += 2;
  return static_cast<int32_t>((static_cast<int64_t>(a) * x + 3) % vocab_tgt);
}

}  // namespace detail

inline std::vector<Utterance> generate_corpus(const SynthTaskConfig& cfg, int n) {
  detail::check_task_config(cfg);
  if (n < 0) throw std::invalid_argument("corpus size must be >= 0");
  std::mt19937_64 rng(cfg.seed);
  const int k = cfg.swap_period;
  const int lo = k >= 2 ? (cfg.min_symbols + k - 1) / k : cfg.min_symbols;
  const int hi = k >= 2 ? cfg.max_symbols / k : cfg.max_symbols;
  std::uniform_int_distribution<int> len_dist(lo, hi);
  std::uniform_int_distribution<int32_t> src_dist(0, cfg.vocab_src - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Utterance> corpus;
  corpus.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int m = k >= 2 ? len_dist(rng) * k : len_dist(rng);
    std::vector<int32_t> symbols(m);
    for (int32_t& s : symbols) s = src_dist(rng);

    Utterance utt;
    utt.target_tokens.reserve(m);
    for (int32_t s : symbols)
      utt.target_tokens.push_back(detail::task_bijection(s % cfg.vocab_tgt, cfg.vocab_tgt));
    if (cfg.swap_period > 0) {
      for (int j = 0; j + 1 < m; j += cfg.swap_period)
        std::swap(utt.target_tokens[j], utt.target_tokens[j + 1]);
    }
    if (cfg.dup_prob > 0) {
      std::vector<int32_t> dup;
      for (int32_t t : utt.target_tokens) {
        dup.push_back(t);
        if (unit(rng) < cfg.dup_prob) dup.push_back(t);
      }
      utt.target_tokens = std::move(dup);
    }

    utt.source_frames.reserve(static_cast<size_t>(m) * cfg.upsample_r);
    for (int32_t s : symbols) {
      for (int r = 0; r < cfg.upsample_r; ++r) {
        int32_t f = s;
        if (cfg.noise_prob > 0 && unit(rng) < cfg.noise_prob) f = src_dist(rng);
        utt.source_frames.push_back(f);
      }
    }
    corpus.push_back(std::move(utt));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Decoder adapter

// Presents the toy model through the decoding interface: frames are encoder
// state vectors, the state is the predictor hidden vector.
struct ToyTransducer {
  using Frame = Vec;
  using State = Vec;

  const ModelParams* params;
  explicit ToyTransducer(const ModelParams& p) : params(&p) {}

  int vocab_size() const { return params->dims.vocab_tgt + 1; }
  int blank_id() const { return params->dims.vocab_tgt; }
  State initial_state() const { return Vec(params->dims.dim, 0.0); }
  State advance(const State& s, int32_t token) const {
    if (token < 0 || token >= params->dims.vocab_tgt) throw std::out_of_range("token out of range");
    return detail::cell_step(params->pred, params->tgt_embed.row(token), s);
  }
  std::vector<double> log_probs(const Frame& f, const State& s) const {
    return joint(*params, f, s);
  }
};

inline std::vector<Vec> encoder_frames(const ModelParams& p, const std::vector<int32_t>& source) {
  const Mat states = encode(p, source);
  std::vector<Vec> frames(states.rows);
  for (int t = 0; t < states.rows; ++t) {
    const auto r = states.row(t);
    frames[t] = Vec(r.begin(), r.end());
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Checkpoints

constexpr char kCheckpointMagic[8] = {'S', 'T', 'R', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const ModelParams& p,
                            const std::string& config_echo) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_pod(os, kCheckpointVersion);
  detail::write_pod(os, static_cast<uint32_t>(config_echo.size()));
  os.write(config_echo.data(), static_cast<std::streamsize>(config_echo.size()));
  detail::write_pod(os, static_cast<int32_t>(p.dims.vocab_src));
  detail::write_pod(os, static_cast<int32_t>(p.dims.vocab_tgt));
  detail::write_pod(os, static_cast<int32_t>(p.dims.dim));
  detail::write_pod(os, static_cast<int32_t>(p.dims.time_reduction));
  detail::for_each_array(const_cast<ModelParams&>(p), [&](std::vector<double>& a) {
    detail::write_pod(os, static_cast<uint64_t>(a.size()));
    os.write(reinterpret_cast<const char*>(a.data()),
             static_cast<std::streamsize>(a.size() * sizeof(double)));
  });
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

struct Checkpoint {
  ModelParams params;
  std::string config_echo;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw std::runtime_error("bad checkpoint magic: " + path);
  const auto version = detail::read_pod<uint32_t>(is);
  if (version != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version");
  const auto echo_len = detail::read_pod<uint32_t>(is);
  Checkpoint ck;
  ck.config_echo.resize(echo_len);
  is.read(ck.config_echo.data(), echo_len);
  if (!is) throw std::runtime_error("checkpoint truncated");
  ModelDims dims;
  dims.vocab_src = detail::read_pod<int32_t>(is);
  dims.vocab_tgt = detail::read_pod<int32_t>(is);
  dims.dim = detail::read_pod<int32_t>(is);
  dims.time_reduction = detail::read_pod<int32_t>(is);
  ck.params = zero_params(dims);
  detail::for_each_array(ck.params, [&](std::vector<double>& a) {
    const auto count = detail::read_pod<uint64_t>(is);
    if (count != a.size()) throw std::runtime_error("checkpoint array size mismatch");
    is.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint truncated");
  });
  return ck;
}

}  // namespace strans::toy
