// strans/pipeline.hpp
//
// End-to-end streaming simulation: decode each utterance with the toy
// transducer, place emissions on the encoder availability schedule, relay
// the emitted tokens through the buffered codec stage, and score latency
// (semantic and acoustic Average Lagging) plus corpus BLEU.

#pragma once

#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "strans/codec.hpp"
#include "strans/decoder.hpp"
#include "strans/metrics.hpp"
#include "strans/streaming.hpp"
#include "strans/toymodel.hpp"

namespace strans::pipeline {

struct PipelineConfig {
  streaming::StreamConfig stream;
  codec::RelayConfig relay;
  codec::CodecConfig codec;
  decoding::BeamConfig beam;
  bool use_greedy = false;  // bypass beam search; beam settings still cap labels
};

struct UtteranceReport {
  int index = 0;
  std::vector<int32_t> hypothesis;
  std::vector<int32_t> reference;
  std::vector<int32_t> emission_frames;
  int num_encoder_frames = 0;
  double log_prob = 0.0;
  std::optional<double> semantic_al_ms;  // empty when nothing was emitted
  std::optional<double> acoustic_al_ms;
  metrics::BleuStats bleu;  // this utterance's contribution to corpus BLEU
  std::string error;        // non-empty when the utterance failed
};

struct Aggregates {
  int num_utterances = 0;
  int num_failed = 0;
  int num_with_latency = 0;
  double mean_semantic_al_ms = 0.0;  // over utterances with a defined AL
  double mean_acoustic_al_ms = 0.0;
  metrics::BleuReport bleu;
};

struct RunReport {
  std::vector<UtteranceReport> utterances;
  Aggregates aggregates;
};

// Latency of one decode trace: semantic AL directly off the emission
// timeline, acoustic AL off the relayed frame timeline against the same
// source duration. Either is empty when its token/frame count is zero.
struct TraceLatency {
  std::optional<double> semantic_al_ms;
  std::optional<double> acoustic_al_ms;
};

inline TraceLatency trace_latency(const std::vector<int32_t>& tokens,
                                  const std::vector<int32_t>& emission_frames,
                                  int num_encoder_frames, const PipelineConfig& cfg) {
  TraceLatency out;
  const auto timeline = streaming::emission_timeline(emission_frames, cfg.stream, num_encoder_frames);
  if (auto al = metrics::average_lagging(timeline, static_cast<int>(tokens.size()))) {
    out.semantic_al_ms = al->average_lagging_ms;
  }
  codec::SemanticStream stream;
  stream.tokens = tokens;
  const auto relayed = codec::relay_stream(stream, cfg.relay, cfg.codec, timeline.emission_times_ms);
  streaming::EmissionTimeline acoustic;
  acoustic.emission_times_ms = relayed.frame_times_ms;
  acoustic.source_duration_ms = timeline.source_duration_ms;
  if (auto al = metrics::average_lagging(acoustic, relayed.frames.frames)) {
    out.acoustic_al_ms = al->average_lagging_ms;
  }
  return out;
}

namespace detail {

inline UtteranceReport run_utterance(const toy::ModelParams& model, const toy::Utterance& utt,
                                     const PipelineConfig& cfg, int index) {
  UtteranceReport rep;
  rep.index = index;
  rep.reference = utt.target_tokens;

  const std::vector<toy::Vec> frames = toy::encoder_frames(model, utt.source_frames);
  rep.num_encoder_frames = static_cast<int>(frames.size());
  const toy::ToyTransducer transducer(model);
  if (cfg.use_greedy) {
    auto g = decoding::greedy_decode(transducer, std::span<const toy::Vec>(frames),
                                     cfg.beam.max_labels_per_frame);
    rep.hypothesis = std::move(g.tokens);
    rep.emission_frames = std::move(g.frames);
    rep.log_prob = g.log_prob;
  } else {
    auto b = decoding::beam_decode(transducer, std::span<const toy::Vec>(frames), cfg.beam);
    if (b.hypotheses.empty()) throw std::runtime_error("beam search returned no hypotheses");
    auto& best = b.hypotheses.front();
    rep.hypothesis = std::move(best.tokens);
    rep.emission_frames = std::move(best.emission_frames);
    rep.log_prob = best.log_prob;
  }

  const TraceLatency lat = trace_latency(rep.hypothesis, rep.emission_frames,
                                         rep.num_encoder_frames, cfg);
  rep.semantic_al_ms = lat.semantic_al_ms;
  rep.acoustic_al_ms = lat.acoustic_al_ms;
  rep.bleu = metrics::sentence_stats(rep.hypothesis, rep.reference);
  return rep;
}

}  // namespace detail

// Per-utterance failures are recorded in the report, never thrown; an
// utterance that fails contributes nothing to latency or BLEU pools.
inline RunReport run_pipeline(const toy::ModelParams& model, const std::vector<toy::Utterance>& corpus,
                              const PipelineConfig& cfg) {
  RunReport report;
  report.utterances.reserve(corpus.size());
  metrics::BleuStats pooled;
  double semantic_sum = 0.0, acoustic_sum = 0.0;
  int latency_count = 0;

  for (size_t i = 0; i < corpus.size(); ++i) {
    UtteranceReport rep;
    try {
      rep = detail::run_utterance(model, corpus[i], cfg, static_cast<int>(i));
    } catch (const std::exception& e) {
      rep = UtteranceReport{};
      rep.index = static_cast<int>(i);
      rep.reference = corpus[i].target_tokens;
      rep.error = e.what();
    }
    if (rep.error.empty()) {
      pooled += rep.bleu;
      if (rep.semantic_al_ms && rep.acoustic_al_ms) {
        semantic_sum += *rep.semantic_al_ms;
        acoustic_sum += *rep.acoustic_al_ms;
        ++latency_count;
      }
    } else {
      ++report.aggregates.num_failed;
    }
    report.utterances.push_back(std::move(rep));
  }

  report.aggregates.num_utterances = static_cast<int>(corpus.size());
  report.aggregates.num_with_latency = latency_count;
  if (latency_count > 0) {
    report.aggregates.mean_semantic_al_ms = semantic_sum / latency_count;
    report.aggregates.mean_acoustic_al_ms = acoustic_sum / latency_count;
  }
  if (report.aggregates.num_failed < report.aggregates.num_utterances &&
      report.aggregates.num_utterances > 0) {
    report.aggregates.bleu = metrics::bleu_from_stats(pooled);
  }
  return report;
}

}  // namespace strans::pipeline
