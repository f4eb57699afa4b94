// strans/codec.hpp
//
// Token-level stand-in for the acoustic stage: K-layer acoustic frames at a
// fixed ratio per semantic token, delayed-pattern interleaving (layer k is
// shifted k steps later), and a chunk-buffered relay from semantic tokens to
// timed acoustic frames. The neural mapping is replaced by a seeded
// deterministic mixing so the scheduling contract is testable.

#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "strans/logmath.hpp"

namespace strans::codec {

// Sentinel for delayed-pattern slots outside [0, F); outside every codebook.
constexpr int32_t kPad = -1;

constexpr int kSemanticVocab = 4096;

// Semantic tokens at a fixed frame period (40 ms, 25 Hz).
struct SemanticStream {
  std::vector<int32_t> tokens;  // each in [0, kSemanticVocab)
  double frame_period_ms = 40.0;
};

// K layers of codebook indices over F acoustic frames, layer-major.
struct AcousticFrameMatrix {
  int layers = 16;
  int frames = 0;
  int codebook_size = 1024;
  std::vector<int32_t> codes;  // layers * frames entries; codes[k*frames + f]

  static AcousticFrameMatrix make(int layers, int frames, int codebook_size) {
    if (layers < 1 || frames < 0 || codebook_size < 1)
      throw std::invalid_argument("bad acoustic matrix dimensions");
    AcousticFrameMatrix m;
    m.layers = layers;
    m.frames = frames;
    m.codebook_size = codebook_size;
    m.codes.assign(static_cast<size_t>(layers) * frames, 0);
    return m;
  }
  int32_t at(int layer, int frame) const {
    return codes[static_cast<size_t>(layer) * frames + frame];
  }
  int32_t& at(int layer, int frame) {
    return codes[static_cast<size_t>(layer) * frames + frame];
  }
  friend bool operator==(const AcousticFrameMatrix&, const AcousticFrameMatrix&) = default;
};

// Delayed pattern: step s carries layer k's code for frame s-k, PAD outside.
struct DelayedSequence {
  int layers = 0;
  int frames = 0;  // F of the source matrix; steps.size() == F + K - 1
  int codebook_size = 0;
  std::vector<std::vector<int32_t>> steps;
};

struct CodecConfig {
  int layers = 16;        // K
  int ratio = 3;          // acoustic frames per semantic token
  int codebook_size = 1024;
  uint64_t seed = 0x5eedcafeULL;
};

struct RelayConfig {
  int inference_buffer = 10;   // semantic tokens per relay chunk
  int training_buffer = 100;   // chunk is zero-padded to this many tokens
  double per_chunk_compute_ms = 0.0;
};

namespace detail {

inline void check_matrix(const AcousticFrameMatrix& m) {
  if (m.layers < 1 || m.frames < 0 || m.codebook_size < 1)
    throw std::invalid_argument("bad acoustic matrix dimensions");
  if (m.codes.size() != static_cast<size_t>(m.layers) * m.frames)
    throw std::invalid_argument("acoustic code array size mismatch");
  for (int32_t c : m.codes) {
    if (c < 0 || c >= m.codebook_size) throw std::out_of_range("acoustic code outside codebook");
  }
}

inline void check_codec_config(const CodecConfig& cfg) {
  if (cfg.layers < 1 || cfg.ratio < 1 || cfg.codebook_size < 1)
    throw std::invalid_argument("bad codec config");
}

inline void check_relay_config(const RelayConfig& cfg) {
  if (cfg.inference_buffer < 1 || cfg.inference_buffer > cfg.training_buffer)
    throw std::invalid_argument("inference_buffer must be in [1, training_buffer]");
  if (cfg.per_chunk_compute_ms < 0) throw std::invalid_argument("per_chunk_compute_ms must be >= 0");
}

// Deterministic mixing of (token, layer, frame) into a codebook index.
inline int32_t mix_code(uint64_t seed, int32_t token, int layer, int frame, int codebook_size) {
  uint64_t h = splitmix64(seed + static_cast<uint64_t>(token) + 1);
  h = splitmix64(h ^ static_cast<uint64_t>(layer + 1));
  h = splitmix64(h ^ static_cast<uint64_t>(frame + 1));
  return static_cast<int32_t>(h % static_cast<uint64_t>(codebook_size));
}

}  // namespace detail

inline DelayedSequence interleave_delayed(const AcousticFrameMatrix& m) {
  detail::check_matrix(m);
  DelayedSequence seq;
  seq.layers = m.layers;
  seq.frames = m.frames;
  seq.codebook_size = m.codebook_size;
  const int steps = m.frames + m.layers - 1;
  seq.steps.assign(steps, std::vector<int32_t>(m.layers, kPad));
  for (int s = 0; s < steps; ++s) {
    for (int k = 0; k < m.layers; ++k) {
      const int f = s - k;
      if (f >= 0 && f < m.frames) seq.steps[s][k] = m.at(k, f);
    }
  }
  return seq;
}

// Exact inverse of interleave_delayed. PAD in a pattern position or a code
// in a PAD position is rejected.
inline AcousticFrameMatrix deinterleave_delayed(const DelayedSequence& seq, int layers, int frames) {
  if (layers < 1 || frames < 0) throw std::invalid_argument("bad delayed sequence dimensions");
  if (layers != seq.layers || frames != seq.frames)
    throw std::invalid_argument("delayed sequence dimension mismatch");
  if (seq.steps.size() != static_cast<size_t>(frames + layers - 1))
    throw std::invalid_argument("delayed sequence has wrong step count");
  AcousticFrameMatrix m = AcousticFrameMatrix::make(layers, frames, std::max(1, seq.codebook_size));
  for (int s = 0; s < static_cast<int>(seq.steps.size()); ++s) {
    if (seq.steps[s].size() != static_cast<size_t>(layers))
      throw std::invalid_argument("delayed sequence step has wrong layer count");
    for (int k = 0; k < layers; ++k) {
      const int f = s - k;
      const int32_t v = seq.steps[s][k];
      if (f >= 0 && f < frames) {
        if (v == kPad) throw std::invalid_argument("PAD inside the delayed pattern");
        m.at(k, f) = v;
      } else if (v != kPad) {
        throw std::invalid_argument("code outside the delayed pattern");
      }
    }
  }
  detail::check_matrix(m);
  return m;
}

// One relay chunk mapped to acoustic frames. The chunk is zero-padded to
// training_buffer tokens; frames whose origin token is padding are flagged
// so callers can discard them.
struct MappedChunk {
  AcousticFrameMatrix matrix;         // layers x (ratio * training_buffer)
  std::vector<uint8_t> from_padding;  // one flag per frame
};

inline MappedChunk map_semantic_chunk(const std::vector<int32_t>& chunk, const RelayConfig& relay,
                                      const CodecConfig& codec) {
  detail::check_relay_config(relay);
  detail::check_codec_config(codec);
  if (static_cast<int>(chunk.size()) > relay.training_buffer)
    throw std::invalid_argument("chunk longer than training_buffer");
  for (int32_t t : chunk) {
    if (t < 0 || t >= kSemanticVocab) throw std::out_of_range("semantic token out of range");
  }
  const int frames = codec.ratio * relay.training_buffer;
  MappedChunk out;
  out.matrix = AcousticFrameMatrix::make(codec.layers, frames, codec.codebook_size);
  out.from_padding.assign(frames, 0);
  for (int f = 0; f < frames; ++f) {
    const int pos = f / codec.ratio;
    const bool pad = pos >= static_cast<int>(chunk.size());
    const int32_t token = pad ? 0 : chunk[pos];
    out.from_padding[f] = pad ? 1 : 0;
    for (int k = 0; k < codec.layers; ++k) {
      out.matrix.at(k, f) = detail::mix_code(codec.seed, token, k, f, codec.codebook_size);
    }
  }
  return out;
}

// Retained acoustic frames of the whole stream plus their availability
// times: a chunk is processed once its last semantic token is ready, and
// its frames appear per_chunk_compute_ms later.
struct RelayResult {
  AcousticFrameMatrix frames;            // layers x (ratio * num_semantic_tokens)
  std::vector<double> frame_times_ms;    // one per retained frame, non-decreasing
  int num_chunks = 0;
};

inline RelayResult relay_stream(const SemanticStream& semantic, const RelayConfig& relay,
                                const CodecConfig& codec, const std::vector<double>& ready_times_ms) {
  detail::check_relay_config(relay);
  detail::check_codec_config(codec);
  if (semantic.frame_period_ms <= 0) throw std::invalid_argument("frame_period_ms must be positive");
  if (ready_times_ms.size() != semantic.tokens.size())
    throw std::invalid_argument("ready time per semantic token required");
  for (size_t i = 1; i < ready_times_ms.size(); ++i) {
    if (ready_times_ms[i] < ready_times_ms[i - 1])
      throw std::invalid_argument("ready times must be non-decreasing");
  }

  const int n = static_cast<int>(semantic.tokens.size());
  RelayResult res;
  res.frames = AcousticFrameMatrix::make(codec.layers, codec.ratio * n, codec.codebook_size);
  res.frame_times_ms.reserve(static_cast<size_t>(codec.ratio) * n);

  int out_f = 0;
  for (int begin = 0; begin < n; begin += relay.inference_buffer) {
    const int end = std::min(n, begin + relay.inference_buffer);
    const std::vector<int32_t> chunk(semantic.tokens.begin() + begin, semantic.tokens.begin() + end);
    const MappedChunk mapped = map_semantic_chunk(chunk, relay, codec);
    const double available = ready_times_ms[end - 1] + relay.per_chunk_compute_ms;
    const int kept = codec.ratio * static_cast<int>(chunk.size());
    for (int f = 0; f < kept; ++f, ++out_f) {
      for (int k = 0; k < codec.layers; ++k) res.frames.at(k, out_f) = mapped.matrix.at(k, f);
      res.frame_times_ms.push_back(available);
    }
    ++res.num_chunks;
  }
  return res;
}

}  // namespace strans::codec
