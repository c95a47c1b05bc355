#include <gtest/gtest.h>

#include "oodhcn/error.hpp"
#include "oodhcn/toy.hpp"

namespace oodhcn {
namespace {

TEST(Toy, SeededGenerationIsBitIdentical) {
  const ToyDomain a = generate_toy_domain(4, 90, 14);
  const ToyDomain b = generate_toy_domain(4, 90, 14);
  EXPECT_EQ(write_dialogs(a.train), write_dialogs(b.train));
  EXPECT_EQ(write_dialogs(a.test), write_dialogs(b.test));
  EXPECT_EQ(a.lexicon.write(), b.lexicon.write());
  EXPECT_NE(write_dialogs(generate_toy_domain(5, 90, 14).train), write_dialogs(a.train));
}

TEST(Toy, SplitsAreEightOneOne) {
  const ToyDomain t = generate_toy_domain(1, 200, 20);
  EXPECT_EQ(t.train.size(), 160u);
  EXPECT_EQ(t.dev.size(), 20u);
  EXPECT_EQ(t.test.size(), 20u);
  EXPECT_EQ(t.train.front().id, 1);
  EXPECT_EQ(t.test.front().id, 1);
  EXPECT_FALSE(t.ood_dialogs.empty());
  EXPECT_FALSE(t.segments.interjections.empty());
}

TEST(Toy, ActionSetSizeIsRequestedPlusFallback) {
  for (int n : {9, 15, 20}) {
    const ToyDomain t = generate_toy_domain(2, 3 * n, n);
    EXPECT_EQ(extract_action_set(t.train, t.lexicon, kDefaultFallbackUtterance).size(),
              static_cast<std::size_t>(n) + 1);
  }
}

TEST(Toy, InvalidSizes) {
  EXPECT_THROW(generate_toy_domain(1, 59, 20), Error);
  EXPECT_THROW(generate_toy_domain(1, 200, 8), Error);
  EXPECT_THROW(generate_toy_domain(1, 500, toy_max_actions() + 1), Error);
}

TEST(Toy, KbLexiconMatchesSuppliedLexicon) {
  const ToyDomain t = generate_toy_domain(3, 60, 12);
  const Lexicon from_kb = lexicon_from_kb_facts(t.train);
  for (const auto& [slot, value] : from_kb.entries()) {
    EXPECT_EQ(t.lexicon.slot_of(value), slot) << value;
  }
}

}  // namespace
}  // namespace oodhcn
