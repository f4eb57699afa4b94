#include "strans/toymodel.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "strans/lattice.hpp"

namespace strans::toy {
namespace {

ModelDims small_dims() {
  ModelDims d;
  d.vocab_src = 5;
  d.vocab_tgt = 4;
  d.dim = 6;
  d.time_reduction = 2;
  return d;
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
  if (!(a.dims == b.dims)) return false;
  bool equal = true;
  detail::for_each_array_pair(const_cast<ModelParams&>(a), const_cast<ModelParams&>(b),
                              [&](std::vector<double>& x, std::vector<double>& y) {
                                if (x != y) equal = false;
                              });
  return equal;
}

TEST(ParamsTest, InitIsSeededAndBounded) {
  const ModelDims dims = small_dims();
  const ModelParams a = init_params(dims, 11);
  const ModelParams b = init_params(dims, 11);
  const ModelParams c = init_params(dims, 12);
  EXPECT_TRUE(params_equal(a, b));
  EXPECT_FALSE(params_equal(a, c));
  detail::for_each_array(const_cast<ModelParams&>(a), [](std::vector<double>& arr) {
    for (double v : arr) {
      EXPECT_GE(v, -0.1);
      EXPECT_LE(v, 0.1);
    }
  });
}

TEST(ParamsTest, FlatIndexingCoversEveryArray) {
  const ModelDims dims = small_dims();
  ModelParams p = zero_params(dims);
  const size_t n = param_count(p);
  for (size_t i = 0; i < n; ++i) param_at(p, i) += 1.0;
  detail::for_each_array(p, [](std::vector<double>& arr) {
    for (double v : arr) EXPECT_DOUBLE_EQ(v, 1.0);
  });
  EXPECT_THROW(param_at(p, n), std::out_of_range);
}

TEST(EncoderTest, ZeroWeightsGiveZeroStates) {
  const ModelParams p = zero_params(small_dims());
  const Mat states = encode(p, {0, 1, 2, 3});
  ASSERT_EQ(states.rows, 2);
  for (double v : states.a) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(EncoderTest, PoolingFloorsPartialGroups) {
  ModelDims dims = small_dims();
  dims.time_reduction = 4;
  const ModelParams p = init_params(dims, 3);
  std::vector<int32_t> frames(40, 1);
  EXPECT_EQ(encode(p, frames).rows, 10);
  frames.resize(43, 1);
  EXPECT_EQ(encode(p, frames).rows, 10);
  frames.resize(3);
  EXPECT_THROW(encode(p, frames), std::invalid_argument);
  EXPECT_THROW(encode(p, {0, 1, 2, static_cast<int32_t>(dims.vocab_src)}), std::out_of_range);
}

TEST(EncoderTest, StatesAreCausal) {
  const ModelParams p = init_params(small_dims(), 17);
  const std::vector<int32_t> full{0, 1, 2, 3, 4, 0, 1, 2};
  const std::vector<int32_t> prefix(full.begin(), full.begin() + 4);
  const Mat all = encode(p, full);
  const Mat head = encode(p, prefix);
  ASSERT_EQ(all.rows, 4);
  ASSERT_EQ(head.rows, 2);
  for (int t = 0; t < head.rows; ++t) {
    for (int c = 0; c < head.cols; ++c) {
      EXPECT_DOUBLE_EQ(head.at(t, c), all.at(t, c)) << "t=" << t << " c=" << c;
    }
  }
}

TEST(PredictorTest, EmptyHistoryIsZeroState) {
  const ModelParams p = init_params(small_dims(), 23);
  const Vec h = predict(p, {});
  for (double v : h) EXPECT_DOUBLE_EQ(v, 0.0);
  const Mat trace = predict_trace(p, {1, 2});
  ASSERT_EQ(trace.rows, 3);
  for (int c = 0; c < trace.cols; ++c) EXPECT_DOUBLE_EQ(trace.at(0, c), 0.0);
}

TEST(PredictorTest, HistoryChangesState) {
  const ModelParams p = init_params(small_dims(), 29);
  EXPECT_NE(predict(p, {0}), predict(p, {1}));
  EXPECT_THROW(predict(p, {small_dims().vocab_tgt}), std::out_of_range);
  EXPECT_THROW(predict(p, {-1}), std::out_of_range);
}

TEST(JoinerTest, OutputIsNormalizedLogDistribution) {
  const ModelParams p = init_params(small_dims(), 31);
  const Vec e = encode(p, {0, 1}).a;
  const Vec g = predict(p, {2});
  const Vec lp = joint(p, e, g);
  ASSERT_EQ(lp.size(), static_cast<size_t>(small_dims().vocab_tgt + 1));
  double sum = 0.0;
  for (double v : lp) sum += std::exp(v);
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(JoinerTest, IdenticalOutputRowsGiveUniformDistribution) {
  ModelParams p = init_params(small_dims(), 37);
  for (int r = 1; r < p.w_o.rows; ++r) {
    for (int c = 0; c < p.w_o.cols; ++c) p.w_o.at(r, c) = p.w_o.at(0, c);
  }
  std::fill(p.b_o.begin(), p.b_o.end(), 0.25);
  const Vec e = encode(p, {0, 1}).a;
  const Vec g = predict(p, {1});
  const Vec lp = joint(p, e, g);
  const double expected = -std::log(static_cast<double>(lp.size()));
  for (double v : lp) EXPECT_NEAR(v, expected, 1e-12);
}

TEST(LatticeFillTest, SatisfiesLatticeInvariants) {
  const ModelParams p = init_params(small_dims(), 41);
  Utterance utt;
  utt.source_frames = {0, 1, 2, 3, 4, 0};
  utt.target_tokens = {1, 3};
  const auto lat = fill_lattice(p, utt);
  EXPECT_EQ(lat.num_frames, 3);
  EXPECT_EQ(lat.target_len, 2);
  EXPECT_EQ(lat.vocab_size, small_dims().vocab_tgt + 1);
  EXPECT_EQ(lat.blank_id, small_dims().vocab_tgt);
  EXPECT_NO_THROW(lattice::validate(lat));
  const double l = loss(p, utt);
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_GT(l, 0.0);
}

TEST(GradientTest, MatchesCentralFiniteDifferences) {
  const ModelDims dims = small_dims();
  ModelParams p = init_params(dims, 43);
  Utterance utt;
  utt.source_frames = {0, 1, 2, 3, 4, 0};
  utt.target_tokens = {1, 3, 0};
  LossGrad lg = loss_and_gradient(p, utt);
  EXPECT_NEAR(lg.loss, loss(p, utt), 1e-12);

  const size_t n = param_count(p);
  std::mt19937_64 rng(4001);
  const double h = 1e-5;
  for (int trial = 0; trial < 48; ++trial) {
    const size_t i = rng() % n;
    const double saved = param_at(p, i);
    param_at(p, i) = saved + h;
    const double up = loss(p, utt);
    param_at(p, i) = saved - h;
    const double down = loss(p, utt);
    param_at(p, i) = saved;
    const double fd = (up - down) / (2 * h);
    const double an = param_at(lg.grad, i);
    const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
    EXPECT_LT(rel, 1e-3) << "param " << i << " analytic " << an << " fd " << fd;
  }
}

TEST(TrainTest, ZeroLearningRateKeepsParams) {
  const ModelParams p = init_params(small_dims(), 47);
  Utterance utt;
  utt.source_frames = {0, 1, 2, 3};
  utt.target_tokens = {2};
  const auto res = train_step(p, {utt}, 0.0);
  EXPECT_TRUE(params_equal(res.params, p));
  EXPECT_NEAR(res.mean_loss, loss(p, utt), 1e-12);
}

TEST(TrainTest, MeanLossAveragesBatch) {
  const ModelParams p = init_params(small_dims(), 53);
  Utterance a, b;
  a.source_frames = {0, 1, 2, 3};
  a.target_tokens = {2};
  b.source_frames = {4, 3, 2, 1, 0, 1};
  b.target_tokens = {0, 3};
  const auto res = train_step(p, {a, b}, 0.0);
  EXPECT_NEAR(res.mean_loss, (loss(p, a) + loss(p, b)) / 2.0, 1e-12);
}

TEST(TrainTest, OverfitsASingleExample) {
  ModelDims dims;
  dims.vocab_src = 8;
  dims.vocab_tgt = 8;
  dims.dim = 16;
  dims.time_reduction = 2;
  ModelParams p = init_params(dims, 59);
  Utterance utt;
  utt.source_frames = {0, 0, 3, 3, 6, 6, 1, 1};
  utt.target_tokens = {3, 0, 7, 4};
  double last = 0.0;
  for (int step = 0; step < 500; ++step) {
    const auto res = train_step(p, {utt}, 0.3);
    p = res.params;
    last = res.mean_loss;
  }
  EXPECT_LT(last, 0.1) << "final loss " << last;
}

TEST(TrainTest, RejectsEmptyBatchAndNonFiniteLoss) {
  ModelParams p = init_params(small_dims(), 61);
  EXPECT_THROW(train_step(p, {}, 0.1), std::invalid_argument);
  Utterance utt;
  utt.source_frames = {0, 1};
  utt.target_tokens = {1};
  p.b_o.back() = std::numeric_limits<double>::infinity();
  EXPECT_THROW(train_step(p, {utt}, 0.1), std::runtime_error);
}

TEST(SynthTaskTest, GenerationIsSeeded) {
  SynthTaskConfig cfg;
  cfg.seed = 303;
  const auto a = generate_corpus(cfg, 40);
  const auto b = generate_corpus(cfg, 40);
  ASSERT_EQ(a.size(), 40u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].source_frames, b[i].source_frames);
    EXPECT_EQ(a[i].target_tokens, b[i].target_tokens);
  }
  cfg.seed = 304;
  const auto c = generate_corpus(cfg, 40);
  bool any_diff = false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].source_frames != c[i].source_frames) any_diff = true;
  }
  EXPECT_TRUE(any_diff);
}

TEST(SynthTaskTest, CleanTaskIsTheAffineBijection) {
  SynthTaskConfig cfg;
  cfg.swap_period = 0;
  cfg.noise_prob = 0.0;
  cfg.dup_prob = 0.0;
  cfg.seed = 71;
  const auto corpus = generate_corpus(cfg, 60);
  for (const auto& utt : corpus) {
    const size_t m = utt.target_tokens.size();
    ASSERT_EQ(utt.source_frames.size(), m * cfg.upsample_r);
    ASSERT_GE(m, static_cast<size_t>(cfg.min_symbols));
    ASSERT_LE(m, static_cast<size_t>(cfg.max_symbols));
    for (size_t i = 0; i < m; ++i) {
      const int32_t s = utt.source_frames[i * cfg.upsample_r];
      // vocab 16 keeps gcd(5, 16) = 1, so the map is x -> 5x + 3 (mod 16).
      EXPECT_EQ(utt.target_tokens[i], (5 * (s % 16) + 3) % 16);
      // Upsampled frames repeat the symbol when noise is off.
      for (int r = 1; r < cfg.upsample_r; ++r) {
        EXPECT_EQ(utt.source_frames[i * cfg.upsample_r + r], s);
      }
    }
  }
}

TEST(SynthTaskTest, SwapPermutesAdjacentPairs) {
  SynthTaskConfig cfg;
  cfg.swap_period = 2;
  cfg.seed = 73;
  const auto corpus = generate_corpus(cfg, 60);
  for (const auto& utt : corpus) {
    const size_t m = utt.target_tokens.size();
    // Active swapping draws whole pairs only, so no utterance ends unpaired.
    EXPECT_EQ(m % 2, 0u);
    std::vector<int32_t> expected(m);
    for (size_t i = 0; i < m; ++i) {
      expected[i] = (5 * (utt.source_frames[i * cfg.upsample_r] % 16) + 3) % 16;
    }
    for (size_t j = 0; j + 1 < m; j += 2) std::swap(expected[j], expected[j + 1]);
    EXPECT_EQ(utt.target_tokens, expected);
  }
}

TEST(SynthTaskTest, CertainDuplicationDoublesEveryToken) {
  SynthTaskConfig cfg;
  cfg.dup_prob = 1.0;
  cfg.seed = 79;
  const auto corpus = generate_corpus(cfg, 20);
  for (const auto& utt : corpus) {
    const size_t m = utt.source_frames.size() / cfg.upsample_r;
    ASSERT_EQ(utt.target_tokens.size(), 2 * m);
    for (size_t i = 0; i < m; ++i) {
      EXPECT_EQ(utt.target_tokens[2 * i], utt.target_tokens[2 * i + 1]);
    }
  }
}

TEST(SynthTaskTest, RejectsBadConfig) {
  SynthTaskConfig cfg;
  cfg.vocab_src = 3;
  EXPECT_THROW(generate_corpus(cfg, 1), std::invalid_argument);
  cfg = SynthTaskConfig{};
  cfg.min_symbols = 5;
  cfg.max_symbols = 4;
  EXPECT_THROW(generate_corpus(cfg, 1), std::invalid_argument);
  cfg = SynthTaskConfig{};
  cfg.swap_period = 5;
  cfg.min_symbols = 6;
  cfg.max_symbols = 9;
  EXPECT_THROW(generate_corpus(cfg, 1), std::invalid_argument);
  cfg = SynthTaskConfig{};
  cfg.upsample_r = 0;
  EXPECT_THROW(generate_corpus(cfg, 1), std::invalid_argument);
  cfg = SynthTaskConfig{};
  cfg.noise_prob = 1.5;
  EXPECT_THROW(generate_corpus(cfg, 1), std::invalid_argument);
  cfg = SynthTaskConfig{};
  EXPECT_THROW(generate_corpus(cfg, -1), std::invalid_argument);
  EXPECT_TRUE(generate_corpus(cfg, 0).empty());
}

TEST(ToyTransducerTest, AdapterValidatesTokens) {
  const ModelParams p = init_params(small_dims(), 83);
  const ToyTransducer m(p);
  EXPECT_EQ(m.vocab_size(), 5);
  EXPECT_EQ(m.blank_id(), 4);
  const auto s0 = m.initial_state();
  for (double v : s0) EXPECT_DOUBLE_EQ(v, 0.0);
  EXPECT_THROW(m.advance(s0, m.blank_id()), std::out_of_range);
  EXPECT_THROW(m.advance(s0, -1), std::out_of_range);
  const auto s1 = m.advance(s0, 2);
  EXPECT_EQ(s1, predict(p, {2}));
  const auto frames = encoder_frames(p, {0, 1, 2, 3});
  ASSERT_EQ(frames.size(), 2u);
  const Vec lp = m.log_probs(frames[0], s1);
  EXPECT_EQ(lp, joint(p, frames[0], s1));
}

class CheckpointTest : public ::testing::Test {
 protected:
  std::string path_ = (std::filesystem::path(::testing::TempDir()) / "toy_ckpt.bin").string();
  void TearDown() override { std::filesystem::remove(path_); }
};

TEST_F(CheckpointTest, RoundtripIsBitExact) {
  const ModelParams p = init_params(small_dims(), 89);
  save_checkpoint(path_, p, "{\"note\":\"echo\"}");
  const Checkpoint ck = load_checkpoint(path_);
  EXPECT_EQ(ck.config_echo, "{\"note\":\"echo\"}");
  EXPECT_TRUE(params_equal(ck.params, p));
}

TEST_F(CheckpointTest, RejectsBadMagicAndTruncation) {
  const ModelParams p = init_params(small_dims(), 97);
  save_checkpoint(path_, p, "");

  std::ifstream in(path_, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  std::ofstream bad(path_, std::ios::binary | std::ios::trunc);
  std::string corrupted = bytes;
  corrupted[0] = 'X';
  bad.write(corrupted.data(), static_cast<std::streamsize>(corrupted.size()));
  bad.close();
  EXPECT_THROW(load_checkpoint(path_), std::runtime_error);

  std::ofstream trunc(path_, std::ios::binary | std::ios::trunc);
  trunc.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  trunc.close();
  EXPECT_THROW(load_checkpoint(path_), std::runtime_error);

  EXPECT_THROW(load_checkpoint(path_ + ".missing"), std::runtime_error);
}

}  // namespace
}  // namespace strans::toy
