#include "oodhcn/turndrop.hpp"

#include <algorithm>
#include <limits>

#include "oodhcn/error.hpp"
#include "oodhcn/vocabulary.hpp"

namespace oodhcn {

void TurnDropoutConfig::validate() const {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error("turn dropout ratio must be in [0, 1]");
  if (!(unk_prob >= 0.0 && unk_prob <= 1.0)) throw Error("turn dropout unk_prob must be in [0, 1]");
  if (min_length < 1 || min_length > max_length) {
    throw Error("turn dropout length bounds must satisfy 1 <= min <= max (got [" +
                std::to_string(min_length) + ", " + std::to_string(max_length) + "])");
  }
}

LengthBounds utterance_length_bounds(std::span<const FeaturizedDialog> dialogs) {
  int lo = std::numeric_limits<int>::max();
  int hi = 0;
  for (const auto& d : dialogs) {
    for (const auto& t : d.turns) {
      const int n = static_cast<int>(t.tokens.size());
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
  }
  if (hi == 0) return LengthBounds{};
  return LengthBounds{std::max(lo, 1), hi};
}

std::vector<TokenId> synth_turn(Rng& rng, std::size_t vocab_size, const TurnDropoutConfig& config) {
  config.validate();
  if (vocab_size <= static_cast<std::size_t>(Vocabulary::kReserved)) {
    throw Error("synthetic turns need a vocabulary beyond the reserved tokens");
  }
  const auto length = rng.uniform_int(config.min_length, config.max_length);
  const std::uint64_t regular = vocab_size - static_cast<std::size_t>(Vocabulary::kReserved);
  std::vector<TokenId> tokens;
  tokens.reserve(static_cast<std::size_t>(length));
  for (std::int64_t k = 0; k < length; ++k) {
    if (rng.bernoulli(config.unk_prob)) {
      tokens.push_back(Vocabulary::kUnk);
    } else {
      tokens.push_back(Vocabulary::kReserved + static_cast<TokenId>(rng.uniform_index(regular)));
    }
  }
  return tokens;
}

FeaturizedDialog apply_turn_dropout(const FeaturizedDialog& dialog, const TurnDropoutConfig& config,
                                    Rng& rng, ActionId fallback) {
  config.validate();
  FeaturizedDialog out = dialog;
  if (config.ratio <= 0.0) return out;
  for (TurnFeatures& turn : out.turns) {
    if (!rng.bernoulli(config.ratio)) continue;
    turn.tokens = synth_turn(rng, turn.bow.size(), config);
    turn.bow = bag_of_words(turn.tokens, turn.bow.size());
    turn.target = fallback;
  }
  return out;
}

}  // namespace oodhcn
