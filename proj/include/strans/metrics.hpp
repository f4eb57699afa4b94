// strans/metrics.hpp
//
// Quality and latency metrics: corpus-level BLEU-4 over token sequences
// (clipped n-gram counts pooled over the corpus, no smoothing) and Average
// Lagging over emission timelines.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "strans/streaming.hpp"

namespace strans::metrics {

struct LatencyReport {
  double average_lagging_ms = 0.0;
  std::vector<double> per_token_lags_ms;  // actual minus ideal, every token
  int cutoff_index = 0;                   // 1-based tau; AL averages lags 1..tau
};

// Average Lagging: ideal emission time of token i (1-based) is
// (i-1) * D / target_len with D the source duration; the average runs up to
// the first token emitted at or after D (all tokens if none). Returns empty
// for target_len = 0, where the metric is undefined.
inline std::optional<LatencyReport> average_lagging(const streaming::EmissionTimeline& timeline,
                                                    int target_len) {
  if (timeline.source_duration_ms <= 0) throw std::invalid_argument("source duration must be positive");
  if (target_len != static_cast<int>(timeline.emission_times_ms.size()))
    throw std::invalid_argument("target_len must equal the number of emission times");
  if (target_len == 0) return std::nullopt;
  const double D = timeline.source_duration_ms;
  const double ideal_step = D / target_len;

  LatencyReport rep;
  rep.cutoff_index = target_len;
  bool crossed = false;
  for (int i = 1; i <= target_len; ++i) {
    const double d = timeline.emission_times_ms[i - 1];
    rep.per_token_lags_ms.push_back(d - (i - 1) * ideal_step);
    if (!crossed && d >= D) {
      rep.cutoff_index = i;
      crossed = true;
    }
  }
  double sum = 0.0;
  for (int i = 0; i < rep.cutoff_index; ++i) sum += rep.per_token_lags_ms[i];
  rep.average_lagging_ms = sum / rep.cutoff_index;
  return rep;
}

struct BleuReport {
  double bleu = 0.0;  // in [0, 100]
  std::array<double, 4> n_gram_precisions{};
  double brevity_penalty = 1.0;
};

// Poolable clipped n-gram counts of one or more sentence pairs. Corpus BLEU
// is a pure function of the pooled stats, so per-sentence contributions can
// be stored and re-aggregated exactly.
struct BleuStats {
  std::array<int64_t, 4> matched{};  // clipped n-gram matches, orders 1..4
  std::array<int64_t, 4> total{};    // hypothesis n-gram counts
  int64_t hyp_len = 0;
  int64_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& o) {
    for (int n = 0; n < 4; ++n) {
      matched[n] += o.matched[n];
      total[n] += o.total[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
  }
  friend BleuStats operator+(BleuStats a, const BleuStats& b) { return a += b; }
  friend bool operator==(const BleuStats&, const BleuStats&) = default;
};

namespace detail {

using Ngram = std::vector<int32_t>;

inline std::map<Ngram, int64_t> ngram_counts(const std::vector<int32_t>& seq, int order) {
  std::map<Ngram, int64_t> counts;
  if (static_cast<int>(seq.size()) >= order) {
    for (size_t i = 0; i + order <= seq.size(); ++i) {
      ++counts[Ngram(seq.begin() + i, seq.begin() + i + order)];
    }
  }
  return counts;
}

}  // namespace detail

inline BleuStats sentence_stats(const std::vector<int32_t>& hypothesis,
                                const std::vector<int32_t>& reference) {
  BleuStats st;
  st.hyp_len = static_cast<int64_t>(hypothesis.size());
  st.ref_len = static_cast<int64_t>(reference.size());
  for (int n = 1; n <= 4; ++n) {
    const auto hyp = detail::ngram_counts(hypothesis, n);
    const auto ref = detail::ngram_counts(reference, n);
    for (const auto& [gram, count] : hyp) {
      st.total[n - 1] += count;
      const auto it = ref.find(gram);
      if (it != ref.end()) st.matched[n - 1] += std::min(count, it->second);
    }
  }
  return st;
}

// BLEU-4 from pooled stats: geometric mean of the four clipped precisions
// (zero if any is zero; no smoothing) times the brevity penalty
// exp(1 - ref_len/hyp_len) applied when the hypothesis side is shorter.
inline BleuReport bleu_from_stats(const BleuStats& st) {
  BleuReport rep;
  double log_prec_sum = 0.0;
  bool any_zero = false;
  for (int n = 0; n < 4; ++n) {
    const double p = st.total[n] > 0 ? static_cast<double>(st.matched[n]) / st.total[n] : 0.0;
    rep.n_gram_precisions[n] = p;
    if (p <= 0.0) {
      any_zero = true;
    } else {
      log_prec_sum += std::log(p);
    }
  }
  rep.brevity_penalty =
      (st.hyp_len >= st.ref_len || st.hyp_len == 0)
          ? 1.0
          : std::exp(1.0 - static_cast<double>(st.ref_len) / static_cast<double>(st.hyp_len));
  rep.bleu = any_zero ? 0.0 : 100.0 * rep.brevity_penalty * std::exp(log_prec_sum / 4.0);
  return rep;
}

inline BleuReport corpus_bleu(const std::vector<std::vector<int32_t>>& hypotheses,
                              const std::vector<std::vector<int32_t>>& references) {
  if (hypotheses.empty()) throw std::invalid_argument("corpus_bleu: empty corpus");
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("corpus_bleu: hypothesis/reference count mismatch");
  BleuStats pooled;
  for (size_t i = 0; i < hypotheses.size(); ++i) pooled += sentence_stats(hypotheses[i], references[i]);
  return bleu_from_stats(pooled);
}

}  // namespace strans::metrics
