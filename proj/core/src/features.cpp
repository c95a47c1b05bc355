#include "oodhcn/features.hpp"

#include "oodhcn/error.hpp"

namespace oodhcn {

void ContextTracker::observe_user(const Turn& turn) {
  if (api_call_seen_ && !turn.kb_facts.empty()) features_.api_results = 1;
  for (const auto& match : lexicon_->scan(turn.user_tokens)) {
    for (std::size_t s = 0; s < kTrackedSlots.size(); ++s) {
      if (match.slot_type == kTrackedSlots[s]) features_.slots[s] = 1;
    }
  }
}

void ContextTracker::observe_system(const Turn& turn) {
  if (is_api_call(turn.system_utterance)) {
    api_call_seen_ = true;
    features_.api_results = 0;
  }
}

ContextFeatures track_context(std::span<const Turn> prefix, const Lexicon& lexicon) {
  ContextTracker tracker(lexicon);
  for (const Turn& t : prefix) {
    tracker.observe_user(t);
    tracker.observe_system(t);
  }
  return tracker.features();
}

std::vector<std::uint8_t> bag_of_words(std::span<const TokenId> tokens, std::size_t vocab_size) {
  std::vector<std::uint8_t> bow(vocab_size, 0);
  for (TokenId id : tokens) bow.at(static_cast<std::size_t>(id)) = 1;
  return bow;
}

namespace {

void check_action(ActionId id, const ActionSet& actions, bool allow_unknown) {
  if (id == kNoAction && allow_unknown) return;
  if (id < 0 || static_cast<std::size_t>(id) >= actions.size()) {
    throw Error("unknown action id " + std::to_string(id));
  }
}

TurnFeatures featurize_with_context(const Turn& turn, const Turn* previous,
                                    const ContextFeatures& context, const Vocabulary& vocab,
                                    const ActionSet& actions, bool allow_unknown) {
  check_action(turn.system_action, actions, allow_unknown);
  TurnFeatures f;
  f.tokens.reserve(turn.user_tokens.size());
  for (const auto& tok : turn.user_tokens) f.tokens.push_back(vocab.lookup(tok));
  f.bow = bag_of_words(f.tokens, vocab.size());
  f.context = context;
  f.mask.assign(actions.size(), 1);
  f.prev_action.assign(actions.size(), 0);
  if (previous != nullptr) {
    check_action(previous->system_action, actions, allow_unknown);
    if (previous->system_action != kNoAction) {
      f.prev_action[static_cast<std::size_t>(previous->system_action)] = 1;
    }
  }
  f.target = turn.system_action;
  return f;
}

}  // namespace

TurnFeatures featurize_turn(const Turn& turn, std::span<const Turn> prefix, const Vocabulary& vocab,
                            const ActionSet& actions, const Lexicon& lexicon, bool allow_unknown) {
  ContextTracker tracker(lexicon);
  for (const Turn& t : prefix) {
    tracker.observe_user(t);
    tracker.observe_system(t);
  }
  tracker.observe_user(turn);
  return featurize_with_context(turn, prefix.empty() ? nullptr : &prefix.back(),
                                tracker.features(), vocab, actions, allow_unknown);
}

FeatureSpace FeatureSpace::build(const Corpus& train, std::span<const Corpus> extra_vocab,
                                 Lexicon lexicon, std::string_view fallback_utterance) {
  VocabularyBuilder builder;
  builder.add(train);
  for (const Corpus& c : extra_vocab) builder.add(c);
  FeatureSpace space;
  space.vocab = builder.build();
  space.actions = extract_action_set(train, lexicon, fallback_utterance);
  space.lexicon = std::move(lexicon);
  return space;
}

FeaturizedDialog FeatureSpace::featurize(const Dialog& dialog, UnknownActionPolicy policy) const {
  Corpus single{dialog};
  assign_actions(single, actions, lexicon, policy);
  const Dialog& d = single.front();
  const bool allow_unknown = policy == UnknownActionPolicy::kMarkUnknown;

  FeaturizedDialog out;
  out.dialog_id = d.id;
  out.vocab_hash = vocab.hash();
  out.action_hash = actions.hash();
  out.turns.reserve(d.turns.size());
  ContextTracker tracker(lexicon);
  for (std::size_t t = 0; t < d.turns.size(); ++t) {
    tracker.observe_user(d.turns[t]);
    out.turns.push_back(featurize_with_context(d.turns[t], t == 0 ? nullptr : &d.turns[t - 1],
                                               tracker.features(), vocab, actions, allow_unknown));
    out.labels.push_back(d.turns[t].ood_label);
    tracker.observe_system(d.turns[t]);
  }
  return out;
}

std::vector<FeaturizedDialog> FeatureSpace::featurize(const Corpus& corpus,
                                                      UnknownActionPolicy policy) const {
  std::vector<FeaturizedDialog> out;
  out.reserve(corpus.size());
  for (const Dialog& d : corpus) out.push_back(featurize(d, policy));
  return out;
}

}  // namespace oodhcn
