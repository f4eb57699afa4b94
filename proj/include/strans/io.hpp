// strans/io.hpp
//
// JSON bindings for configs, corpora, hypotheses, and reports, plus the
// experiment config that drives the CLI. Data files are line-delimited
// JSON records; reports are single JSON documents embedding the config
// that produced them. Missing config keys fall back to defaults so partial
// configs stay valid.

#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strans/codec.hpp"
#include "strans/decoder.hpp"
#include "strans/metrics.hpp"
#include "strans/pipeline.hpp"
#include "strans/streaming.hpp"
#include "strans/toymodel.hpp"

namespace strans::streaming {

inline void to_json(nlohmann::json& j, const StreamConfig& c) {
  j = {{"hop_ms", c.hop_ms},
       {"time_reduction", c.time_reduction},
       {"segment_frames", c.segment_frames},
       {"right_context_frames", c.right_context_frames},
       {"compute_delay_ms", c.compute_delay_ms}};
}

inline void from_json(const nlohmann::json& j, StreamConfig& c) {
  const StreamConfig d;
  c.hop_ms = j.value("hop_ms", d.hop_ms);
  c.time_reduction = j.value("time_reduction", d.time_reduction);
  c.segment_frames = j.value("segment_frames", d.segment_frames);
  c.right_context_frames = j.value("right_context_frames", d.right_context_frames);
  c.compute_delay_ms = j.value("compute_delay_ms", d.compute_delay_ms);
}

}  // namespace strans::streaming

namespace strans::codec {

inline void to_json(nlohmann::json& j, const CodecConfig& c) {
  j = {{"layers", c.layers},
       {"ratio", c.ratio},
       {"codebook_size", c.codebook_size},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, CodecConfig& c) {
  const CodecConfig d;
  c.layers = j.value("layers", d.layers);
  c.ratio = j.value("ratio", d.ratio);
  c.codebook_size = j.value("codebook_size", d.codebook_size);
  c.seed = j.value("seed", d.seed);
}

inline void to_json(nlohmann::json& j, const RelayConfig& c) {
  j = {{"inference_buffer", c.inference_buffer},
       {"training_buffer", c.training_buffer},
       {"per_chunk_compute_ms", c.per_chunk_compute_ms}};
}

inline void from_json(const nlohmann::json& j, RelayConfig& c) {
  const RelayConfig d;
  c.inference_buffer = j.value("inference_buffer", d.inference_buffer);
  c.training_buffer = j.value("training_buffer", d.training_buffer);
  c.per_chunk_compute_ms = j.value("per_chunk_compute_ms", d.per_chunk_compute_ms);
}

}  // namespace strans::codec

namespace strans::decoding {

inline void to_json(nlohmann::json& j, const BeamConfig& c) {
  j = {{"beam_size", c.beam_size},
       {"length_penalty_alpha", c.length_penalty_alpha},
       {"max_labels_per_frame", c.max_labels_per_frame}};
}

inline void from_json(const nlohmann::json& j, BeamConfig& c) {
  const BeamConfig d;
  c.beam_size = j.value("beam_size", d.beam_size);
  c.length_penalty_alpha = j.value("length_penalty_alpha", d.length_penalty_alpha);
  c.max_labels_per_frame = j.value("max_labels_per_frame", d.max_labels_per_frame);
}

}  // namespace strans::decoding

namespace strans::toy {

inline void to_json(nlohmann::json& j, const SynthTaskConfig& c) {
  j = {{"vocab_src", c.vocab_src},
       {"vocab_tgt", c.vocab_tgt},
       {"min_symbols", c.min_symbols},
       {"max_symbols", c.max_symbols},
       {"swap_period", c.swap_period},
       {"dup_prob", c.dup_prob},
       {"upsample_r", c.upsample_r},
       {"noise_prob", c.noise_prob},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, SynthTaskConfig& c) {
  const SynthTaskConfig d;
  c.vocab_src = j.value("vocab_src", d.vocab_src);
  c.vocab_tgt = j.value("vocab_tgt", d.vocab_tgt);
  c.min_symbols = j.value("min_symbols", d.min_symbols);
  c.max_symbols = j.value("max_symbols", d.max_symbols);
  c.swap_period = j.value("swap_period", d.swap_period);
  c.dup_prob = j.value("dup_prob", d.dup_prob);
  c.upsample_r = j.value("upsample_r", d.upsample_r);
  c.noise_prob = j.value("noise_prob", d.noise_prob);
  c.seed = j.value("seed", d.seed);
}

inline void to_json(nlohmann::json& j, const ModelDims& c) {
  j = {{"vocab_src", c.vocab_src},
       {"vocab_tgt", c.vocab_tgt},
       {"dim", c.dim},
       {"time_reduction", c.time_reduction}};
}

inline void from_json(const nlohmann::json& j, ModelDims& c) {
  const ModelDims d;
  c.vocab_src = j.value("vocab_src", d.vocab_src);
  c.vocab_tgt = j.value("vocab_tgt", d.vocab_tgt);
  c.dim = j.value("dim", d.dim);
  c.time_reduction = j.value("time_reduction", d.time_reduction);
}

inline void to_json(nlohmann::json& j, const Utterance& u) {
  j = {{"source", u.source_frames}, {"target", u.target_tokens}};
}

inline void from_json(const nlohmann::json& j, Utterance& u) {
  j.at("source").get_to(u.source_frames);
  j.at("target").get_to(u.target_tokens);
}

}  // namespace strans::toy

namespace strans::metrics {

inline void to_json(nlohmann::json& j, const BleuStats& s) {
  j = {{"matched", s.matched}, {"total", s.total}, {"hyp_len", s.hyp_len}, {"ref_len", s.ref_len}};
}

inline void from_json(const nlohmann::json& j, BleuStats& s) {
  j.at("matched").get_to(s.matched);
  j.at("total").get_to(s.total);
  j.at("hyp_len").get_to(s.hyp_len);
  j.at("ref_len").get_to(s.ref_len);
}

inline void to_json(nlohmann::json& j, const BleuReport& r) {
  j = {{"bleu", r.bleu},
       {"n_gram_precisions", r.n_gram_precisions},
       {"brevity_penalty", r.brevity_penalty}};
}

inline void from_json(const nlohmann::json& j, BleuReport& r) {
  j.at("bleu").get_to(r.bleu);
  j.at("n_gram_precisions").get_to(r.n_gram_precisions);
  j.at("brevity_penalty").get_to(r.brevity_penalty);
}

inline void to_json(nlohmann::json& j, const LatencyReport& r) {
  j = {{"average_lagging_ms", r.average_lagging_ms},
       {"per_token_lags_ms", r.per_token_lags_ms},
       {"cutoff_index", r.cutoff_index}};
}

}  // namespace strans::metrics

namespace strans::pipeline {

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = {{"stream", c.stream},
       {"relay", c.relay},
       {"codec", c.codec},
       {"beam", c.beam},
       {"use_greedy", c.use_greedy}};
}

inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
  const PipelineConfig d;
  c.stream = j.value("stream", d.stream);
  c.relay = j.value("relay", d.relay);
  c.codec = j.value("codec", d.codec);
  c.beam = j.value("beam", d.beam);
  c.use_greedy = j.value("use_greedy", d.use_greedy);
}

inline void to_json(nlohmann::json& j, const UtteranceReport& r) {
  j = {{"index", r.index},
       {"hypothesis", r.hypothesis},
       {"reference", r.reference},
       {"emission_frames", r.emission_frames},
       {"num_encoder_frames", r.num_encoder_frames},
       {"log_prob", r.log_prob},
       {"bleu_stats", r.bleu},
       {"error", r.error}};
  j["semantic_al_ms"] = r.semantic_al_ms ? nlohmann::json(*r.semantic_al_ms) : nlohmann::json();
  j["acoustic_al_ms"] = r.acoustic_al_ms ? nlohmann::json(*r.acoustic_al_ms) : nlohmann::json();
}

inline void from_json(const nlohmann::json& j, UtteranceReport& r) {
  j.at("index").get_to(r.index);
  j.at("hypothesis").get_to(r.hypothesis);
  j.at("reference").get_to(r.reference);
  j.at("emission_frames").get_to(r.emission_frames);
  j.at("num_encoder_frames").get_to(r.num_encoder_frames);
  j.at("log_prob").get_to(r.log_prob);
  j.at("bleu_stats").get_to(r.bleu);
  j.at("error").get_to(r.error);
  r.semantic_al_ms.reset();
  r.acoustic_al_ms.reset();
  if (!j.at("semantic_al_ms").is_null()) r.semantic_al_ms = j.at("semantic_al_ms").get<double>();
  if (!j.at("acoustic_al_ms").is_null()) r.acoustic_al_ms = j.at("acoustic_al_ms").get<double>();
}

inline void to_json(nlohmann::json& j, const Aggregates& a) {
  j = {{"num_utterances", a.num_utterances},
       {"num_failed", a.num_failed},
       {"num_with_latency", a.num_with_latency},
       {"mean_semantic_al_ms", a.mean_semantic_al_ms},
       {"mean_acoustic_al_ms", a.mean_acoustic_al_ms},
       {"bleu", a.bleu}};
}

inline void from_json(const nlohmann::json& j, Aggregates& a) {
  j.at("num_utterances").get_to(a.num_utterances);
  j.at("num_failed").get_to(a.num_failed);
  j.at("num_with_latency").get_to(a.num_with_latency);
  j.at("mean_semantic_al_ms").get_to(a.mean_semantic_al_ms);
  j.at("mean_acoustic_al_ms").get_to(a.mean_acoustic_al_ms);
  j.at("bleu").get_to(a.bleu);
}

inline void to_json(nlohmann::json& j, const RunReport& r) {
  j = {{"utterances", r.utterances}, {"aggregates", r.aggregates}};
}

inline void from_json(const nlohmann::json& j, RunReport& r) {
  j.at("utterances").get_to(r.utterances);
  j.at("aggregates").get_to(r.aggregates);
}

}  // namespace strans::pipeline

namespace strans::io {

using json = nlohmann::json;

struct TrainingConfig {
  int steps = 2000;
  int batch_size = 32;
  double learning_rate = 0.05;
  uint64_t seed = 7;
  int log_every = 100;
};

struct DataConfig {
  int num_utterances = 2000;
};

struct PathsConfig {
  std::string data;
  std::string checkpoint;
  std::string report;
};

struct ExperimentConfig {
  toy::SynthTaskConfig task;
  toy::ModelDims model;
  TrainingConfig training;
  DataConfig data;
  pipeline::PipelineConfig pipeline;
  PathsConfig paths;
};

inline void to_json(json& j, const TrainingConfig& c) {
  j = {{"steps", c.steps},
       {"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"seed", c.seed},
       {"log_every", c.log_every}};
}

inline void from_json(const json& j, TrainingConfig& c) {
  const TrainingConfig d;
  c.steps = j.value("steps", d.steps);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.seed = j.value("seed", d.seed);
  c.log_every = j.value("log_every", d.log_every);
}

inline void to_json(json& j, const DataConfig& c) { j = {{"num_utterances", c.num_utterances}}; }

inline void from_json(const json& j, DataConfig& c) {
  const DataConfig d;
  c.num_utterances = j.value("num_utterances", d.num_utterances);
}

inline void to_json(json& j, const PathsConfig& c) {
  j = {{"data", c.data}, {"checkpoint", c.checkpoint}, {"report", c.report}};
}

inline void from_json(const json& j, PathsConfig& c) {
  const PathsConfig d;
  c.data = j.value("data", d.data);
  c.checkpoint = j.value("checkpoint", d.checkpoint);
  c.report = j.value("report", d.report);
}

inline void to_json(json& j, const ExperimentConfig& c) {
  j = {{"task", c.task},
       {"model", c.model},
       {"training", c.training},
       {"data", c.data},
       {"pipeline", c.pipeline},
       {"paths", c.paths}};
}

inline void from_json(const json& j, ExperimentConfig& c) {
  const ExperimentConfig d;
  c.task = j.value("task", d.task);
  c.model = j.value("model", d.model);
  c.training = j.value("training", d.training);
  c.data = j.value("data", d.data);
  c.pipeline = j.value("pipeline", d.pipeline);
  c.paths = j.value("paths", d.paths);
}

inline ExperimentConfig read_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  return j.get<ExperimentConfig>();
}

// One decoded utterance as stored in a hypotheses file.
struct HypothesisRecord {
  int index = 0;
  std::vector<int32_t> tokens;
  std::vector<int32_t> frames;
  double log_prob = 0.0;
  int num_encoder_frames = 0;
  std::vector<int32_t> reference;
};

inline void to_json(json& j, const HypothesisRecord& r) {
  j = {{"index", r.index},
       {"tokens", r.tokens},
       {"frames", r.frames},
       {"log_prob", r.log_prob},
       {"num_encoder_frames", r.num_encoder_frames},
       {"reference", r.reference}};
}

inline void from_json(const json& j, HypothesisRecord& r) {
  j.at("index").get_to(r.index);
  j.at("tokens").get_to(r.tokens);
  j.at("frames").get_to(r.frames);
  j.at("log_prob").get_to(r.log_prob);
  j.at("num_encoder_frames").get_to(r.num_encoder_frames);
  j.at("reference").get_to(r.reference);
}

namespace detail {

template <class Record>
void save_jsonl(const std::string& path, const std::vector<Record>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (const Record& r : records) os << json(r).dump() << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

template <class Record>
std::vector<Record> load_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::vector<Record> records;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line).get<Record>());
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad record: " + e.what());
    }
  }
  return records;
}

}  // namespace detail

inline void save_corpus(const std::string& path, const std::vector<toy::Utterance>& corpus) {
  detail::save_jsonl(path, corpus);
}

inline std::vector<toy::Utterance> load_corpus(const std::string& path) {
  return detail::load_jsonl<toy::Utterance>(path);
}

inline void save_hypotheses(const std::string& path, const std::vector<HypothesisRecord>& records) {
  detail::save_jsonl(path, records);
}

inline std::vector<HypothesisRecord> load_hypotheses(const std::string& path) {
  return detail::load_jsonl<HypothesisRecord>(path);
}

// Reports embed the config that produced them for provenance.
inline void write_report(const std::string& path, const ExperimentConfig& config, const json& body) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  json j = {{"config", config}, {"report", body}};
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("parse error in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace strans::io
