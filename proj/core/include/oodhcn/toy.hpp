#pragma once

#include <cstdint>

#include "oodhcn/augment.hpp"
#include "oodhcn/corpus.hpp"
#include "oodhcn/lexicon.hpp"

namespace oodhcn {

// A small restaurant-search domain: greeting, slot questions for the missing
// cuisine/area/price constraints, an api_call, KB facts, an offer, attribute
// requests (phone, address, ...) and a closing. All text is already lowercase
// and tokenized, so the transcripts round-trip exactly.
struct ToyDomain {
  Corpus train;
  Corpus dev;
  Corpus test;
  Lexicon lexicon;
  Corpus ood_dialogs;    // one-exchange foreign-domain dialogs
  SegmentPool segments;  // mistake affirmations
};

inline constexpr int kToyBaseActions = 8;
int toy_max_actions();

// n_actions distinct system templates (before the fallback is added), split
// 8/1/1 into train/dev/test. Requires n_dialogs >= 3 * n_actions and
// kToyBaseActions < n_actions <= toy_max_actions().
ToyDomain generate_toy_domain(std::uint64_t seed, int n_dialogs, int n_actions);

}  // namespace oodhcn
