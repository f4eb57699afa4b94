// strans/lattice.hpp
//
// Transducer alignment lattice: exact marginal log-probability via
// forward/backward dynamic programming, the training loss and its analytic
// gradient, plus a brute-force alignment enumeration for small instances.
//
// Path convention (Graves-style): from state (t, u), emitting the blank
// consumes frame t and moves to (t+1, u); emitting label s_{u+1} moves to
// (t, u+1). Every complete path ends with the blank at (T-1, U). The blank
// index is V-1.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "strans/logmath.hpp"

namespace strans::lattice {

// Joint log-probability tensor of shape T x (U+1) x V, natural log.
// Each (t, u) slice is expected to be a normalized distribution over V.
struct LogProbLattice {
  int num_frames = 0;  // T
  int target_len = 0;  // U
  int vocab_size = 0;  // V, includes the blank
  int blank_id = 0;
  std::vector<double> values;  // row-major T x (U+1) x V

  static LogProbLattice make(int num_frames, int target_len, int vocab_size) {
    if (num_frames < 1 || target_len < 0 || vocab_size < 2) {
      throw std::invalid_argument("LogProbLattice::make: bad dimensions");
    }
    LogProbLattice lat;
    lat.num_frames = num_frames;
    lat.target_len = target_len;
    lat.vocab_size = vocab_size;
    lat.blank_id = vocab_size - 1;
    lat.values.assign(static_cast<size_t>(num_frames) * (target_len + 1) * vocab_size, kLogZero);
    return lat;
  }

  size_t index(int t, int u, int v) const {
    return (static_cast<size_t>(t) * (target_len + 1) + u) * vocab_size + v;
  }
  double& at(int t, int u, int v) { return values[index(t, u, v)]; }
  double at(int t, int u, int v) const { return values[index(t, u, v)]; }
  std::span<const double> slice(int t, int u) const {
    return {values.data() + index(t, u, 0), static_cast<size_t>(vocab_size)};
  }
  std::span<double> slice(int t, int u) {
    return {values.data() + index(t, u, 0), static_cast<size_t>(vocab_size)};
  }
};

using TargetSequence = std::vector<int32_t>;

enum class Move : uint8_t { kBlank, kLabel };

// One monotone path through the lattice: T blank moves and U label moves,
// the last move always blank.
struct Alignment {
  std::vector<Move> moves;
};

namespace detail {

inline void check_lattice(const LogProbLattice& lat) {
  if (lat.num_frames < 1) throw std::invalid_argument("lattice: num_frames must be >= 1");
  if (lat.target_len < 0) throw std::invalid_argument("lattice: negative target_len");
  if (lat.vocab_size < 2) throw std::invalid_argument("lattice: vocab_size must be >= 2");
  if (lat.blank_id < 0 || lat.blank_id >= lat.vocab_size) {
    throw std::invalid_argument("lattice: blank_id out of range");
  }
  const size_t want =
      static_cast<size_t>(lat.num_frames) * (lat.target_len + 1) * lat.vocab_size;
  if (lat.values.size() != want) throw std::invalid_argument("lattice: values size mismatch");
}

inline void check_instance(const LogProbLattice& lat, const TargetSequence& target) {
  check_lattice(lat);
  if (static_cast<int>(target.size()) != lat.target_len) {
    throw std::invalid_argument("lattice: target length does not match lattice target_len");
  }
  for (int32_t tok : target) {
    if (tok < 0 || tok >= lat.vocab_size) throw std::invalid_argument("lattice: target token out of range");
    if (tok == lat.blank_id) throw std::invalid_argument("lattice: target contains the blank");
  }
}

}  // namespace detail

// Checks the type invariants: finite entries and per-(t,u) normalization
// within `tol` in the log domain. Ops below assume but do not re-check this.
inline void validate(const LogProbLattice& lat, double tol = 1e-6) {
  detail::check_lattice(lat);
  for (double v : lat.values) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("lattice: non-finite value");
    }
  }
  for (int t = 0; t < lat.num_frames; ++t) {
    for (int u = 0; u <= lat.target_len; ++u) {
      const double z = log_sum(lat.slice(t, u));
      if (std::abs(z) > tol) {
        throw std::invalid_argument("lattice: slice (" + std::to_string(t) + "," +
                                    std::to_string(u) + ") not normalized, logsumexp=" +
                                    std::to_string(z));
      }
    }
  }
}

struct ForwardResult {
  double log_prob = kLogZero;
  std::vector<double> alpha;  // T x (U+1), alpha(0,0) = 0
};

// alpha(t,u) = logaddexp(alpha(t-1,u) + blank(t-1,u),
//                        alpha(t,u-1) + label_u(t,u-1));
// log P(S|X) = alpha(T-1,U) + blank(T-1,U).
inline ForwardResult forward(const LogProbLattice& lat, const TargetSequence& target) {
  detail::check_instance(lat, target);
  const int T = lat.num_frames, U = lat.target_len;
  const int cols = U + 1;
  ForwardResult res;
  res.alpha.assign(static_cast<size_t>(T) * cols, kLogZero);
  auto a = [&](int t, int u) -> double& { return res.alpha[static_cast<size_t>(t) * cols + u]; };
  a(0, 0) = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      double acc = kLogZero;
      if (t > 0) acc = a(t - 1, u) + lat.at(t - 1, u, lat.blank_id);
      if (u > 0) acc = log_add(acc, a(t, u - 1) + lat.at(t, u - 1, target[u - 1]));
      a(t, u) = acc;
    }
  }
  res.log_prob = a(T - 1, U) + lat.at(T - 1, U, lat.blank_id);
  return res;
}

// beta(t,u) = logaddexp(blank(t,u) + beta(t+1,u),
//                       label_{u+1}(t,u) + beta(t,u+1));
// beta(T-1,U) = blank(T-1,U), and beta(0,0) = log P(S|X).
inline std::vector<double> backward(const LogProbLattice& lat, const TargetSequence& target) {
  detail::check_instance(lat, target);
  const int T = lat.num_frames, U = lat.target_len;
  const int cols = U + 1;
  std::vector<double> beta(static_cast<size_t>(T) * cols, kLogZero);
  auto b = [&](int t, int u) -> double& { return beta[static_cast<size_t>(t) * cols + u]; };
  b(T - 1, U) = lat.at(T - 1, U, lat.blank_id);
  for (int t = T - 1; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      if (t == T - 1 && u == U) continue;
      double acc = kLogZero;
      if (t < T - 1) acc = lat.at(t, u, lat.blank_id) + b(t + 1, u);
      if (u < U) acc = log_add(acc, lat.at(t, u, target[u]) + b(t, u + 1));
      b(t, u) = acc;
    }
  }
  return beta;
}

// L = -log P(S|X), always >= 0 for normalized lattices.
inline double loss(const LogProbLattice& lat, const TargetSequence& target) {
  return -forward(lat, target).log_prob;
}

// dL/dlogits, shape T x (U+1) x V, where the lattice values are the joiner
// logits at a log-softmax-normalized point. Entry (t,u,v) is the state
// occupancy times the local softmax probability, minus the transition term
// for the symbols actually usable at (t,u):
//
//   grad(t,u,v) = exp(values + alpha(t,u) + beta(t,u) - logP)
//               - exp(values + alpha(t,u) + beta(next(t,u,v)) - logP)
//
// with beta(next) = 0 for the terminal blank at (T-1,U) and the second term
// absent where v moves off the lattice.
inline std::vector<double> gradient(const LogProbLattice& lat, const TargetSequence& target) {
  const ForwardResult fwd = forward(lat, target);
  const std::vector<double> beta = backward(lat, target);
  const int T = lat.num_frames, U = lat.target_len, V = lat.vocab_size;
  const int cols = U + 1;
  const double log_p = fwd.log_prob;
  auto a = [&](int t, int u) { return fwd.alpha[static_cast<size_t>(t) * cols + u]; };
  auto b = [&](int t, int u) { return beta[static_cast<size_t>(t) * cols + u]; };

  std::vector<double> grad(lat.values.size(), 0.0);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      const double base = a(t, u) - log_p;
      const double occ = base + b(t, u);
      for (int v = 0; v < V; ++v) {
        const double lv = lat.at(t, u, v);
        double g = std::exp(lv + occ);
        if (v == lat.blank_id) {
          if (t == T - 1 && u == U) {
            g -= std::exp(lv + base);
          } else if (t < T - 1) {
            g -= std::exp(lv + base + b(t + 1, u));
          }
        } else if (u < U && v == target[u]) {
          g -= std::exp(lv + base + b(t, u + 1));
        }
        grad[lat.index(t, u, v)] = g;
      }
    }
  }
  return grad;
}

// Tractability guard for exhaustive enumeration.
inline constexpr int kMaxEnumerationSteps = 14;

// All move sequences with T blanks and U labels ending in a blank.
// The count is C(T+U-1, U).
inline std::vector<Alignment> enumerate_alignments(int num_frames, int target_len) {
  if (num_frames < 1) throw std::invalid_argument("enumerate_alignments: need at least one frame");
  if (target_len < 0) throw std::invalid_argument("enumerate_alignments: negative target_len");
  if (num_frames + target_len > kMaxEnumerationSteps) {
    throw std::invalid_argument("enumerate_alignments: T+U exceeds enumeration guard");
  }
  std::vector<Alignment> out;
  std::vector<Move> moves;
  moves.reserve(num_frames + target_len);
  // Fill the first T+U-1 moves freely, keep the final blank implicit.
  auto rec = [&](auto&& self, int blanks_left, int labels_left) -> void {
    if (blanks_left == 0 && labels_left == 0) {
      Alignment al;
      al.moves = moves;
      al.moves.push_back(Move::kBlank);
      out.push_back(std::move(al));
      return;
    }
    if (blanks_left > 0) {
      moves.push_back(Move::kBlank);
      self(self, blanks_left - 1, labels_left);
      moves.pop_back();
    }
    if (labels_left > 0) {
      moves.push_back(Move::kLabel);
      self(self, blanks_left, labels_left - 1);
      moves.pop_back();
    }
  };
  rec(rec, num_frames - 1, target_len);
  return out;
}

// Reference marginal: walks every alignment through the lattice and
// logsumexps the per-path scores. Exponential in T+U; guarded.
inline double brute_force_logprob(const LogProbLattice& lat, const TargetSequence& target) {
  detail::check_instance(lat, target);
  const std::vector<Alignment> all = enumerate_alignments(lat.num_frames, lat.target_len);
  double total = kLogZero;
  for (const Alignment& al : all) {
    double path = 0.0;
    int t = 0, u = 0;
    for (Move m : al.moves) {
      if (m == Move::kBlank) {
        path += lat.at(t, u, lat.blank_id);
        ++t;
      } else {
        path += lat.at(t, u, target[u]);
        ++u;
      }
    }
    total = log_add(total, path);
  }
  return total;
}

}  // namespace strans::lattice
