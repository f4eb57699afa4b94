#include "strans/decoder.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace strans::decoding {
namespace {

using lattice::LogProbLattice;
using testutil::lattice_from_probs;
using testutil::random_lattice;

std::vector<int32_t> frames_for(const LogProbLattice& lat) {
  return frame_indices(lat.num_frames);
}

TEST(GreedyDecodeTest, AlwaysBlankModelEmitsNothing) {
  // U=0 lattice with dominant blank: argmax is blank on every frame.
  const auto lat = lattice_from_probs(4, 0, 2, {0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9});
  const LatticeModel model(lat);
  const auto frames = frames_for(lat);
  const auto res = greedy_decode(model, frames);
  EXPECT_TRUE(res.tokens.empty());
  EXPECT_NEAR(res.log_prob, 4 * std::log(0.9), 1e-12);
  EXPECT_EQ(res.cap_hits, 0);
}

TEST(GreedyDecodeTest, HandLatticeEmitsLabelOnFrameZero) {
  // Argmax path: label 0 at (0,0), then blank at (0,1) and (1,1).
  const auto lat = lattice_from_probs(2, 1, 3,
                                      {0.6, 0.1, 0.3,    // (0,0) -> label 0
                                       0.1, 0.2, 0.7,    // (0,1) -> blank
                                       0.3, 0.3, 0.4,    // (1,0)
                                       0.1, 0.1, 0.8});  // (1,1) -> blank
  const LatticeModel model(lat);
  const auto frames = frames_for(lat);
  const auto res = greedy_decode(model, frames);
  EXPECT_EQ(res.tokens, (std::vector<int32_t>{0}));
  EXPECT_EQ(res.frames, (std::vector<int32_t>{0}));
  EXPECT_NEAR(res.log_prob, std::log(0.6) + std::log(0.7) + std::log(0.8), 1e-12);
}

TEST(GreedyDecodeTest, LabelCapForcesFrameAdvance) {
  // Label-dominant U=0 lattice loops; the cap truncates and flags it.
  const auto lat = lattice_from_probs(2, 0, 2, {0.9, 0.1, 0.9, 0.1});
  const LatticeModel model(lat);
  const auto frames = frames_for(lat);
  const auto res = greedy_decode(model, frames, 3);
  EXPECT_EQ(res.tokens.size(), 6u);
  EXPECT_EQ(res.cap_hits, 2);
  EXPECT_EQ(res.frames, (std::vector<int32_t>{0, 0, 0, 1, 1, 1}));
  // Score includes the forced blanks.
  EXPECT_NEAR(res.log_prob, 6 * std::log(0.9) + 2 * std::log(0.1), 1e-12);
}

TEST(GreedyDecodeTest, RejectsEmptyInputAndBadCap) {
  const auto lat = random_lattice(2, 1, 3, 5);
  const LatticeModel model(lat);
  const std::vector<int32_t> none;
  EXPECT_THROW(greedy_decode(model, std::span<const int32_t>(none)), std::invalid_argument);
  const auto frames = frames_for(lat);
  EXPECT_THROW(greedy_decode(model, std::span<const int32_t>(frames), 0), std::invalid_argument);
}

TEST(BeamDecodeTest, BeamOneEqualsGreedyOnSeededModels) {
  std::mt19937_64 rng(909);
  BeamConfig cfg;
  cfg.beam_size = 1;
  cfg.length_penalty_alpha = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int T = 1 + static_cast<int>(rng() % 6);
    const int U = static_cast<int>(rng() % 5);
    const int V = 2 + static_cast<int>(rng() % 5);
    const auto lat = random_lattice(T, U, V, rng());
    const LatticeModel model(lat);
    const auto frames = frames_for(lat);
    const auto greedy = greedy_decode(model, std::span<const int32_t>(frames),
                                      cfg.max_labels_per_frame);
    const auto beam = beam_decode(model, std::span<const int32_t>(frames), cfg);
    ASSERT_EQ(beam.hypotheses.size(), 1u) << "seed round " << i;
    EXPECT_EQ(beam.hypotheses[0].tokens, greedy.tokens) << "seed round " << i;
    EXPECT_EQ(beam.hypotheses[0].emission_frames, greedy.frames) << "seed round " << i;
    EXPECT_NEAR(beam.hypotheses[0].log_prob, greedy.log_prob, 1e-12) << "seed round " << i;
  }
}

TEST(BeamDecodeTest, BestRawScoreNonDecreasingInBeamSize) {
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 100; ++i) {
    const int T = 1 + static_cast<int>(rng() % 5);
    const int U = static_cast<int>(rng() % 4);
    const int V = 2 + static_cast<int>(rng() % 5);
    const auto lat = random_lattice(T, U, V, rng());
    const LatticeModel model(lat);
    const auto frames = frames_for(lat);
    double prev = -std::numeric_limits<double>::infinity();
    for (int beam_size : {1, 2, 4, 8, 10}) {
      BeamConfig cfg;
      cfg.beam_size = beam_size;
      cfg.length_penalty_alpha = 0.0;
      const auto res = beam_decode(model, std::span<const int32_t>(frames), cfg);
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& h : res.hypotheses) best = std::max(best, h.log_prob);
      EXPECT_GE(best, prev - 1e-9) << "round " << i << " beam " << beam_size;
      prev = best;
    }
  }
}

TEST(BeamDecodeTest, EveryHypothesisConsumesAllFrames) {
  const auto lat = random_lattice(4, 2, 4, 31337);
  const LatticeModel model(lat);
  const auto frames = frames_for(lat);
  BeamConfig cfg;
  cfg.beam_size = 8;
  const auto res = beam_decode(model, std::span<const int32_t>(frames), cfg);
  ASSERT_FALSE(res.hypotheses.empty());
  for (const auto& h : res.hypotheses) EXPECT_EQ(h.frame_index, 4);
}

TEST(BeamDecodeTest, MergedHypothesisScoreIsLogAddOfBranches) {
  // The token sequence [0] arises from two blank placements with path
  // probabilities .24 and .06; the merged hypothesis carries their sum and
  // the frames of the dominant branch (label on frame 0).
  const auto lat = lattice_from_probs(2, 1, 2,
                                      {0.6, 0.4,    // (0,0)
                                       0.2, 0.8,    // (0,1)
                                       0.3, 0.7,    // (1,0)
                                       0.5, 0.5});  // (1,1)
  const LatticeModel model(lat);
  const auto frames = frames_for(lat);
  BeamConfig cfg;
  cfg.beam_size = 8;
  cfg.length_penalty_alpha = 0.0;
  const auto res = beam_decode(model, std::span<const int32_t>(frames), cfg);
  bool found = false;
  for (const auto& h : res.hypotheses) {
    if (h.tokens == std::vector<int32_t>{0}) {
      found = true;
      EXPECT_NEAR(h.log_prob, std::log(0.30), 1e-9);
      EXPECT_EQ(h.emission_frames, (std::vector<int32_t>{0}));
    }
  }
  EXPECT_TRUE(found);
}

TEST(BeamDecodeTest, LengthPenaltyReranksLongerHypothesis) {
  // One frame, label prob .9, blank .1, cap 4. Raw best is the empty
  // hypothesis (ln .1 = -2.30 vs 4 ln .9 + ln .1 = -2.72); with alpha = 0.5
  // the 4-label hypothesis normalizes to -2.72 / 2 = -1.36 and wins.
  const auto lat = lattice_from_probs(1, 0, 2, {0.9, 0.1});
  const LatticeModel model(lat);
  const auto frames = frames_for(lat);
  BeamConfig cfg;
  cfg.beam_size = 8;
  cfg.max_labels_per_frame = 4;

  cfg.length_penalty_alpha = 0.0;
  const auto raw = beam_decode(model, std::span<const int32_t>(frames), cfg);
  ASSERT_FALSE(raw.hypotheses.empty());
  EXPECT_TRUE(raw.hypotheses[0].tokens.empty());

  cfg.length_penalty_alpha = 0.5;
  const auto penalized = beam_decode(model, std::span<const int32_t>(frames), cfg);
  ASSERT_FALSE(penalized.hypotheses.empty());
  EXPECT_EQ(penalized.hypotheses[0].tokens.size(), 4u);
}

TEST(BeamDecodeTest, RejectsBadConfigAndEmptyInput) {
  const auto lat = random_lattice(2, 1, 3, 8);
  const LatticeModel model(lat);
  const auto frames = frames_for(lat);
  BeamConfig cfg;
  cfg.beam_size = 0;
  EXPECT_THROW(beam_decode(model, std::span<const int32_t>(frames), cfg), std::invalid_argument);
  cfg.beam_size = 2;
  cfg.length_penalty_alpha = -0.1;
  EXPECT_THROW(beam_decode(model, std::span<const int32_t>(frames), cfg), std::invalid_argument);
  cfg.length_penalty_alpha = 0.0;
  const std::vector<int32_t> none;
  EXPECT_THROW(beam_decode(model, std::span<const int32_t>(none), cfg), std::invalid_argument);
}

}  // namespace
}  // namespace strans::decoding
