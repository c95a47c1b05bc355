#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oodhcn/features.hpp"
#include "oodhcn/rng.hpp"

namespace oodhcn {

struct TurnDropoutConfig {
  double ratio = 0.0;     // per-turn replacement probability
  double unk_prob = 0.5;  // chance that a synthetic token is UNK
  int min_length = 1;
  int max_length = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LengthBounds {
  int min = 1;
  int max = 1;
};

// Shortest and longest user turn (in tokens) across the dialogs.
LengthBounds utterance_length_bounds(std::span<const FeaturizedDialog> dialogs);

// Length uniform in [min_length, max_length]; each token is UNK with
// probability unk_prob, otherwise uniform over the non-reserved vocabulary.
std::vector<TokenId> synth_turn(Rng& rng, std::size_t vocab_size, const TurnDropoutConfig& config);

// Each turn is independently replaced with probability config.ratio: f_turn
// becomes a synthetic sequence, x_BoW is recomputed from it and the target
// becomes `fallback`. f_ctx, f_mask and prev_action are left as they were.
FeaturizedDialog apply_turn_dropout(const FeaturizedDialog& dialog, const TurnDropoutConfig& config,
                                    Rng& rng, ActionId fallback);

}  // namespace oodhcn
