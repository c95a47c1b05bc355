#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "oodhcn/corpus.hpp"
#include "oodhcn/lexicon.hpp"
#include "oodhcn/vocabulary.hpp"

namespace oodhcn {

// Slot types whose "provided" bit is tracked, in feature order.
inline constexpr std::array<std::string_view, 3> kTrackedSlots = {"cuisine", "area", "pricerange"};

struct ContextFeatures {
  static constexpr std::size_t kSize = kTrackedSlots.size() + 1;

  std::array<std::uint8_t, kTrackedSlots.size()> slots{};
  std::uint8_t api_results = 0;

  bool operator==(const ContextFeatures&) const = default;
};

// Incremental dialog-context state. Per exchange call observe_user() (KB facts
// and user text become visible) and then observe_system() (the response).
class ContextTracker {
 public:
  explicit ContextTracker(const Lexicon& lexicon) : lexicon_(&lexicon) {}

  void observe_user(const Turn& turn);
  void observe_system(const Turn& turn);
  const ContextFeatures& features() const { return features_; }

 private:
  const Lexicon* lexicon_;
  ContextFeatures features_;
  bool api_call_seen_ = false;
};

// Context after a sequence of completed exchanges.
ContextFeatures track_context(std::span<const Turn> prefix, const Lexicon& lexicon);

struct TurnFeatures {
  std::vector<TokenId> tokens;             // f_turn
  std::vector<std::uint8_t> bow;           // x_BoW over the full vocabulary
  ContextFeatures context;                 // f_ctx
  std::vector<std::uint8_t> mask;          // f_mask, all ones
  std::vector<std::uint8_t> prev_action;   // one-hot; zero on the first turn
  ActionId target = kNoAction;

  bool operator==(const TurnFeatures&) const = default;
};

std::vector<std::uint8_t> bag_of_words(std::span<const TokenId> tokens, std::size_t vocab_size);

// `prefix` holds the completed exchanges before `turn`; f_ctx also reflects
// the KB facts and user text of `turn` itself. turn.system_action must be a
// valid id in `actions` (kNoAction is accepted only when allow_unknown).
TurnFeatures featurize_turn(const Turn& turn, std::span<const Turn> prefix, const Vocabulary& vocab,
                            const ActionSet& actions, const Lexicon& lexicon,
                            bool allow_unknown = false);

struct FeaturizedDialog {
  int dialog_id = 0;
  std::vector<TurnFeatures> turns;
  std::vector<OodLabel> labels;
  std::uint64_t vocab_hash = 0;
  std::uint64_t action_hash = 0;

  bool operator==(const FeaturizedDialog&) const = default;
};

// Everything needed to turn transcripts into model inputs.
struct FeatureSpace {
  Vocabulary vocab;
  ActionSet actions;
  Lexicon lexicon;

  // Vocabulary over `train` plus `extra_vocab` corpora; actions from `train`.
  static FeatureSpace build(const Corpus& train, std::span<const Corpus> extra_vocab,
                            Lexicon lexicon,
                            std::string_view fallback_utterance = kDefaultFallbackUtterance);

  // Maps system utterances to actions (ignoring any ids already on the turns).
  FeaturizedDialog featurize(const Dialog& dialog,
                             UnknownActionPolicy policy = UnknownActionPolicy::kThrow) const;
  std::vector<FeaturizedDialog> featurize(
      const Corpus& corpus, UnknownActionPolicy policy = UnknownActionPolicy::kThrow) const;
};

}  // namespace oodhcn
