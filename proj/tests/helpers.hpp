#pragma once

#include <string>
#include <vector>

#include "oodhcn/corpus.hpp"
#include "oodhcn/features.hpp"
#include "oodhcn/lexicon.hpp"
#include "oodhcn/toy.hpp"

namespace oodhcn::testing {

inline Turn make_turn(const std::string& user, const std::string& system,
                      std::vector<std::string> facts = {}) {
  Turn t;
  t.user_tokens = tokenize(user);
  t.system_utterance = system;
  t.kb_facts = std::move(facts);
  return t;
}

// Small toy domain reused by several suites.
inline const ToyDomain& small_toy() {
  static const ToyDomain toy = generate_toy_domain(7, 60, 12);
  return toy;
}

inline FeatureSpace toy_space(const ToyDomain& toy) {
  const Corpus extra[] = {toy.dev, toy.test, toy.ood_dialogs};
  return FeatureSpace::build(toy.train, extra, toy.lexicon);
}

}  // namespace oodhcn::testing
