// strans/streaming.hpp
//
// Segment/right-context availability schedule of a block-processing
// streaming encoder. An encoder frame becomes available once its whole
// segment plus the trailing right-context audio has arrived; nothing is
// flushed for a partial first segment.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace strans::streaming {

struct StreamConfig {
  double hop_ms = 10.0;          // feature hop before time reduction
  int time_reduction = 4;        // encoder frames cover hop_ms * time_reduction
  int segment_frames = 20;       // encoder frames per segment
  int right_context_frames = 4;  // lookahead frames beyond the segment
  double compute_delay_ms = 0.0; // fixed model-compute constant per emission
};

// Wall-clock emission time of each decoded token plus the source length,
// both in ms. Feeds the latency metrics.
struct EmissionTimeline {
  std::vector<double> emission_times_ms;  // non-decreasing
  double source_duration_ms = 0.0;
};

namespace detail {

inline void check_stream_config(const StreamConfig& cfg) {
  if (cfg.hop_ms <= 0) throw std::invalid_argument("hop_ms must be positive");
  if (cfg.time_reduction < 1) throw std::invalid_argument("time_reduction must be positive");
  if (cfg.segment_frames < 1) throw std::invalid_argument("segment_frames must be positive");
  if (cfg.right_context_frames < 0) throw std::invalid_argument("right_context_frames must be >= 0");
  if (cfg.compute_delay_ms < 0) throw std::invalid_argument("compute_delay_ms must be >= 0");
}

}  // namespace detail

inline double encoder_frame_duration_ms(const StreamConfig& cfg) {
  return cfg.hop_ms * cfg.time_reduction;
}

// Time at which encoder frame `index` becomes available: the end of its
// segment plus the right context, converted to ms. Constant within a
// segment, non-decreasing in the index.
inline double encoder_frame_ready_time(const StreamConfig& cfg, int index) {
  detail::check_stream_config(cfg);
  if (index < 0) throw std::invalid_argument("frame index must be >= 0");
  const long long segment_end =
      (static_cast<long long>(index) / cfg.segment_frames + 1) * cfg.segment_frames;
  return static_cast<double>(segment_end + cfg.right_context_frames) * encoder_frame_duration_ms(cfg);
}

// Maps a decode trace (the encoder frame each token was emitted on) to
// wall-clock emission times. Frames must be valid and non-decreasing.
inline EmissionTimeline emission_timeline(const std::vector<int32_t>& per_token_frames,
                                          const StreamConfig& cfg, int num_encoder_frames) {
  detail::check_stream_config(cfg);
  if (num_encoder_frames < 1) throw std::invalid_argument("num_encoder_frames must be >= 1");
  EmissionTimeline tl;
  tl.source_duration_ms = num_encoder_frames * encoder_frame_duration_ms(cfg);
  tl.emission_times_ms.reserve(per_token_frames.size());
  int32_t prev = 0;
  for (int32_t f : per_token_frames) {
    if (f < 0 || f >= num_encoder_frames) throw std::out_of_range("emission frame out of range");
    if (f < prev) throw std::invalid_argument("emission frames must be non-decreasing");
    prev = f;
    tl.emission_times_ms.push_back(encoder_frame_ready_time(cfg, f) + cfg.compute_delay_ms);
  }
  return tl;
}

}  // namespace strans::streaming
