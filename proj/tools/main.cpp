// strans command-line tool: synthetic data generation, toy transducer
// training, decoding, latency simulation, and full pipeline evaluation.
// Every command is a deterministic function of (config, input files, seed);
// a nonzero exit status always comes with a diagnostic on stderr.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "strans/io.hpp"

namespace {

using strans::io::ExperimentConfig;
using strans::io::HypothesisRecord;
using strans::io::json;

struct Options {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out;
  std::string data;
  std::string checkpoint;
  std::string hypotheses;
  bool greedy = false;
};

ExperimentConfig load_config(const Options& opt) {
  ExperimentConfig cfg = strans::io::read_config(opt.config_path);
  if (opt.seed) {
    cfg.task.seed = *opt.seed;
    cfg.training.seed = *opt.seed;
  }
  if (opt.greedy) cfg.pipeline.use_greedy = true;
  return cfg;
}

std::string pick(const std::string& override_path, const std::string& config_path,
                 const char* what) {
  if (!override_path.empty()) return override_path;
  if (!config_path.empty()) return config_path;
  throw std::runtime_error(std::string("no path for ") + what +
                           " (set it in the config's paths section or pass the flag)");
}

int cmd_gen_data(const Options& opt) {
  const ExperimentConfig cfg = load_config(opt);
  const std::string out = pick(opt.out, cfg.paths.data, "data output");
  const auto corpus = strans::toy::generate_corpus(cfg.task, cfg.data.num_utterances);
  strans::io::save_corpus(out, corpus);
  std::cout << "wrote " << corpus.size() << " utterances to " << out << "\n";
  return 0;
}

int cmd_train(const Options& opt) {
  const ExperimentConfig cfg = load_config(opt);
  const std::string data_path = pick(opt.data, cfg.paths.data, "training data");
  const std::string out = pick(opt.out, cfg.paths.checkpoint, "checkpoint output");
  const auto corpus = strans::io::load_corpus(data_path);
  if (corpus.empty()) throw std::runtime_error("training corpus is empty: " + data_path);

  strans::toy::ModelParams params = strans::toy::init_params(cfg.model, cfg.training.seed);
  const int n = static_cast<int>(corpus.size());
  const int batch_size = std::min(cfg.training.batch_size, n);
  if (batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
  for (int step = 0; step < cfg.training.steps; ++step) {
    std::vector<strans::toy::Utterance> batch;
    batch.reserve(batch_size);
    for (int j = 0; j < batch_size; ++j) {
      batch.push_back(corpus[(static_cast<int64_t>(step) * batch_size + j) % n]);
    }
    const auto res = strans::toy::train_step(params, batch, cfg.training.learning_rate);
    params = std::move(res.params);
    if (cfg.training.log_every > 0 &&
        (step % cfg.training.log_every == 0 || step + 1 == cfg.training.steps)) {
      std::cout << "step " << step << " mean_loss " << res.mean_loss << "\n";
    }
  }
  strans::toy::save_checkpoint(out, params, json(cfg).dump());
  std::cout << "wrote checkpoint to " << out << "\n";
  return 0;
}

int cmd_decode(const Options& opt) {
  const ExperimentConfig cfg = load_config(opt);
  const std::string data_path = pick(opt.data, cfg.paths.data, "corpus");
  const std::string ckpt_path = pick(opt.checkpoint, cfg.paths.checkpoint, "checkpoint");
  const std::string out = pick(opt.out, cfg.paths.report, "hypotheses output");
  const auto corpus = strans::io::load_corpus(data_path);
  const auto ckpt = strans::toy::load_checkpoint(ckpt_path);
  const strans::toy::ToyTransducer model(ckpt.params);

  std::vector<HypothesisRecord> records;
  records.reserve(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    const auto frames = strans::toy::encoder_frames(ckpt.params, corpus[i].source_frames);
    HypothesisRecord rec;
    rec.index = static_cast<int>(i);
    rec.num_encoder_frames = static_cast<int>(frames.size());
    rec.reference = corpus[i].target_tokens;
    if (cfg.pipeline.use_greedy) {
      auto g = strans::decoding::greedy_decode(model, std::span<const strans::toy::Vec>(frames),
                                               cfg.pipeline.beam.max_labels_per_frame);
      rec.tokens = std::move(g.tokens);
      rec.frames = std::move(g.frames);
      rec.log_prob = g.log_prob;
    } else {
      auto b = strans::decoding::beam_decode(model, std::span<const strans::toy::Vec>(frames),
                                             cfg.pipeline.beam);
      if (b.hypotheses.empty()) throw std::runtime_error("beam search returned no hypotheses");
      rec.tokens = b.hypotheses[0].tokens;
      rec.frames = b.hypotheses[0].emission_frames;
      rec.log_prob = b.hypotheses[0].log_prob;
    }
    records.push_back(std::move(rec));
  }
  strans::io::save_hypotheses(out, records);
  std::cout << "wrote " << records.size() << " hypotheses to " << out << "\n";
  return 0;
}

int cmd_simulate_latency(const Options& opt) {
  const ExperimentConfig cfg = load_config(opt);
  const std::string out = pick(opt.out, cfg.paths.report, "report output");
  if (opt.hypotheses.empty()) throw std::runtime_error("simulate-latency requires --hypotheses");
  const auto records = strans::io::load_hypotheses(opt.hypotheses);

  json utts = json::array();
  double semantic_sum = 0.0, acoustic_sum = 0.0;
  int with_latency = 0;
  for (const auto& rec : records) {
    const auto lat = strans::pipeline::trace_latency(rec.tokens, rec.frames,
                                                     rec.num_encoder_frames, cfg.pipeline);
    json u = {{"index", rec.index}, {"num_tokens", rec.tokens.size()}};
    u["semantic_al_ms"] = lat.semantic_al_ms ? json(*lat.semantic_al_ms) : json();
    u["acoustic_al_ms"] = lat.acoustic_al_ms ? json(*lat.acoustic_al_ms) : json();
    if (lat.semantic_al_ms && lat.acoustic_al_ms) {
      semantic_sum += *lat.semantic_al_ms;
      acoustic_sum += *lat.acoustic_al_ms;
      ++with_latency;
    }
    utts.push_back(std::move(u));
  }
  json body = {{"utterances", utts},
               {"aggregates",
                {{"num_utterances", records.size()},
                 {"num_with_latency", with_latency},
                 {"mean_semantic_al_ms", with_latency ? semantic_sum / with_latency : 0.0},
                 {"mean_acoustic_al_ms", with_latency ? acoustic_sum / with_latency : 0.0}}}};
  strans::io::write_report(out, cfg, body);
  std::cout << "wrote latency report to " << out << "\n";
  return 0;
}

int cmd_eval(const Options& opt) {
  const ExperimentConfig cfg = load_config(opt);
  const std::string data_path = pick(opt.data, cfg.paths.data, "corpus");
  const std::string ckpt_path = pick(opt.checkpoint, cfg.paths.checkpoint, "checkpoint");
  const std::string out = pick(opt.out, cfg.paths.report, "report output");
  const auto corpus = strans::io::load_corpus(data_path);
  const auto ckpt = strans::toy::load_checkpoint(ckpt_path);
  const auto report = strans::pipeline::run_pipeline(ckpt.params, corpus, cfg.pipeline);
  strans::io::write_report(out, cfg, json(report));
  std::cout << "evaluated " << report.aggregates.num_utterances << " utterances, bleu "
            << report.aggregates.bleu.bleu << ", mean acoustic AL "
            << report.aggregates.mean_acoustic_al_ms << " ms, report at " << out << "\n";
  return 0;
}

void add_common(CLI::App* cmd, Options& opt, bool needs_config = true) {
  auto* c = cmd->add_option("--config", opt.config_path, "experiment config JSON");
  if (needs_config) c->required();
  cmd->add_option("--seed", opt.seed, "override task and training seeds");
  cmd->add_option("--out", opt.out, "output path (overrides the config's paths)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale streaming transducer pipeline"};
  app.require_subcommand(1);
  Options opt;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
  add_common(gen, opt);

  auto* train = app.add_subcommand("train", "train the toy transducer");
  add_common(train, opt);
  train->add_option("--data", opt.data, "corpus path (overrides config)");

  auto* decode = app.add_subcommand("decode", "decode a corpus with a checkpoint");
  add_common(decode, opt);
  decode->add_option("--data", opt.data, "corpus path (overrides config)");
  decode->add_option("--checkpoint", opt.checkpoint, "checkpoint path (overrides config)");
  decode->add_flag("--greedy", opt.greedy, "force greedy decoding");

  auto* sim = app.add_subcommand("simulate-latency", "latency metrics for decoded hypotheses");
  add_common(sim, opt);
  sim->add_option("--hypotheses", opt.hypotheses, "hypotheses file from decode")->required();

  auto* eval = app.add_subcommand("eval", "full pipeline evaluation");
  add_common(eval, opt);
  eval->add_option("--data", opt.data, "corpus path (overrides config)");
  eval->add_option("--checkpoint", opt.checkpoint, "checkpoint path (overrides config)");
  eval->add_flag("--greedy", opt.greedy, "force greedy decoding");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(opt);
    if (train->parsed()) return cmd_train(opt);
    if (decode->parsed()) return cmd_decode(opt);
    if (sim->parsed()) return cmd_simulate_latency(opt);
    if (eval->parsed()) return cmd_eval(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no command\n";
  return 1;
}
