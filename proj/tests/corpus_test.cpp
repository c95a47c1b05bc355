#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "helpers.hpp"
#include "oodhcn/error.hpp"
#include "oodhcn/vocabulary.hpp"

namespace oodhcn {
namespace {

using testing::make_turn;

TEST(Parse, MinimalExchange) {
  const Corpus c = parse_dialogs("1 hi\thello , welcome\n\n");
  ASSERT_EQ(c.size(), 1u);
  ASSERT_EQ(c[0].turns.size(), 1u);
  EXPECT_EQ(c[0].turns[0].user_tokens, std::vector<std::string>{"hi"});
  EXPECT_EQ(c[0].turns[0].system_utterance, "hello , welcome");
}

TEST(Parse, EmptyInput) { EXPECT_TRUE(parse_dialogs("").empty()); }

TEST(Parse, FactsAttachToNextExchange) {
  const Corpus c = parse_dialogs(
      "1 <SILENCE>\thello\n2 resto R_cuisine thai\n3 resto R_price cheap\n4 <SILENCE>\tresto is "
      "nice\n\n1 bye\tok\n\n");
  ASSERT_EQ(c.size(), 2u);
  ASSERT_EQ(c[0].turns.size(), 2u);
  EXPECT_TRUE(c[0].turns[0].kb_facts.empty());
  EXPECT_EQ(c[0].turns[1].kb_facts.size(), 2u);
  EXPECT_EQ(c[0].turns[0].user_tokens, std::vector<std::string>{"<SILENCE>"});
  EXPECT_EQ(c[1].id, 2);
}

TEST(Parse, MalformedLineReportsLineNumber) {
  try {
    parse_dialogs("1 hi\thello\nnot numbered\n\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Parse, TrailingFactsAreRejected) {
  EXPECT_THROW(parse_dialogs("1 hi\thello\n2 resto R_price cheap\n\n"), ParseError);
}

TEST(Tokenize, LowercasesAndSplitsPunctuation) {
  EXPECT_EQ(tokenize("Hello, World?"), (std::vector<std::string>{"hello", ",", "world", "?"}));
  EXPECT_EQ(tokenize(""), std::vector<std::string>{"<SILENCE>"});
  EXPECT_EQ(tokenize("<silence>"), std::vector<std::string>{"<SILENCE>"});
}

TEST(RoundTrip, GeneratedCorporaAreBitExact) {
  const ToyDomain& toy = testing::small_toy();
  for (const Corpus* c : {&toy.train, &toy.dev, &toy.test, &toy.ood_dialogs}) {
    const std::string text = write_dialogs(*c);
    const Corpus parsed = parse_dialogs(text);
    EXPECT_EQ(parsed, *c);
    EXPECT_EQ(write_dialogs(parsed), text);
  }
}

TEST(Labels, RoundTripAndCoverage) {
  Corpus c = parse_dialogs("1 a\tb\n2 c\td\n\n1 e\tf\n\n");
  c[0].turns[1].ood_label = OodLabel::kTurnOod;
  c[1].turns[0].ood_label = OodLabel::kSegmentOod;
  const std::string labels = write_labels(c);
  Corpus fresh = parse_dialogs("1 a\tb\n2 c\td\n\n1 e\tf\n\n");
  apply_labels(fresh, labels);
  EXPECT_EQ(fresh, c);
  Corpus partial = fresh;
  EXPECT_THROW(apply_labels(partial, "1\t0\tIND\n"), Error);
}

TEST(Vocabulary, UnionPlusReserved) {
  const Corpus a = parse_dialogs("1 a b\tx\n\n");
  const Corpus b = parse_dialogs("1 b c\ty\n\n");
  const Corpus both[] = {a, b};
  const Vocabulary v = build_vocabulary(both);
  EXPECT_EQ(v.size(), 3u + 2u);
  EXPECT_EQ(v.lookup("<UNK>"), Vocabulary::kUnk);
  EXPECT_EQ(v.lookup("<SILENCE>"), Vocabulary::kSilence);
  EXPECT_EQ(v.lookup("zzz"), Vocabulary::kUnk);
}

TEST(Vocabulary, IdempotentAndOrderIndependent) {
  const ToyDomain& toy = testing::small_toy();
  const Corpus once[] = {toy.train, toy.ood_dialogs};
  const Corpus twice[] = {toy.train, toy.ood_dialogs, toy.train, toy.ood_dialogs};
  EXPECT_EQ(build_vocabulary(once), build_vocabulary(twice));

  std::mt19937 gen(3);
  Corpus shuffled = toy.train;
  for (int k = 0; k < 5; ++k) {
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    const Corpus perm[] = {toy.ood_dialogs, shuffled};
    const Vocabulary v = build_vocabulary(perm);
    EXPECT_EQ(v, build_vocabulary(once));
    EXPECT_EQ(v.hash(), build_vocabulary(once).hash());
  }
}

TEST(Vocabulary, LexicographicAfterReserved) {
  const Vocabulary v = Vocabulary::from_tokens({"pear", "apple", "<UNK>", "fig", "apple"});
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<UNK>", "<SILENCE>", "apple", "fig", "pear"}));
}

TEST(Embeddings, LoadFillsMissingTokens) {
  const Vocabulary v = Vocabulary::from_tokens({"a", "b"});
  const EmbeddingTable t = load_embeddings("2 3\na 1 2 3\nzz 9 9 9\n", v, 5);
  ASSERT_EQ(t.vectors.rows(), 3);
  ASSERT_EQ(t.vectors.cols(), 4);
  EXPECT_DOUBLE_EQ(t.vectors(1, v.lookup("a")), 2.0);
  EXPECT_NE(t.vectors(0, v.lookup("b")), 0.0);
  EXPECT_THROW(load_embeddings("3 3\na 1 2 3\n", v, 5), Error);
}

// Independent leftmost-longest oracle: at each position try every span from
// the longest down, comparing the joined span against every lexicon value.
std::vector<std::string> delex_oracle(const std::vector<std::string>& tokens,
                                      const std::vector<std::pair<std::string, std::string>>& lex) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    for (std::size_t len = tokens.size() - i; len >= 1 && !matched; --len) {
      std::string span;
      for (std::size_t k = i; k < i + len; ++k) span += (k > i ? " " : "") + tokens[k];
      for (const auto& [slot, value] : lex) {
        if (value == span) {
          out.push_back("<" + slot + ">");
          i += len;
          matched = true;
          break;
        }
      }
    }
    if (!matched) out.push_back(tokens[i++]);
  }
  return out;
}

TEST(Delexicalize, Examples) {
  Lexicon lex;
  lex.add("name", "prezzo");
  EXPECT_EQ(delexicalize("prezzo is a nice restaurant", lex), "<name> is a nice restaurant");
  EXPECT_EQ(delexicalize("nothing here", lex), "nothing here");
}

TEST(Delexicalize, LongestMatchAgainstOracle) {
  const std::vector<std::pair<std::string, std::string>> entries = {
      {"cuisine", "north american"}, {"area", "north"}, {"cuisine", "american"},
      {"name", "the north american grill"}, {"area", "south"}, {"pricerange", "cheap"}};
  Lexicon lex;
  for (const auto& [s, v] : entries) lex.add(s, v);
  const std::vector<std::string> alphabet = {"the", "north", "american", "grill", "south",
                                             "cheap", "food"};
  std::mt19937 gen(11);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::string> tokens(1 + gen() % 7);
    for (auto& t : tokens) t = alphabet[gen() % alphabet.size()];
    EXPECT_EQ(delexicalize_tokens(tokens, lex), delex_oracle(tokens, entries));
    const std::string once = delexicalize(join_tokens(tokens), lex);
    EXPECT_EQ(delexicalize(once, lex), once);
  }
}

TEST(ActionSet, FallbackAddedAndIdsLexicographic) {
  Lexicon lex;
  const Corpus c = parse_dialogs("1 a\tzeta\n2 b\talpha\n3 c\tmid\n4 d\talpha\n\n");
  const ActionSet set = extract_action_set(c, lex, kDefaultFallbackUtterance);
  EXPECT_EQ(set.size(), 4u);
  EXPECT_TRUE(std::is_sorted(set.templates().begin(), set.templates().end()));
  EXPECT_EQ(set.template_of(set.fallback_id()), kDefaultFallbackUtterance);

  const Corpus same = parse_dialogs("1 a\tsame\n2 b\tsame\n\n");
  EXPECT_EQ(extract_action_set(same, lex, kDefaultFallbackUtterance).size(), 2u);
  EXPECT_THROW(extract_action_set(Corpus{}, lex, kDefaultFallbackUtterance), Error);
}

TEST(ActionSet, ToyDomainTemplateCount) {
  const ToyDomain toy = generate_toy_domain(1, 200, 20);
  std::set<std::string> distinct;
  for (const auto& d : toy.train) {
    for (const auto& t : d.turns) distinct.insert(delexicalize(t.system_utterance, toy.lexicon));
  }
  const ActionSet set = extract_action_set(toy.train, toy.lexicon, kDefaultFallbackUtterance);
  EXPECT_EQ(distinct.size(), 20u);
  EXPECT_EQ(set.size(), 21u);
}

TEST(Context, EmptyPrefixIsZero) {
  Lexicon lex;
  const ContextFeatures f = track_context({}, lex);
  EXPECT_EQ(f, ContextFeatures{});
}

TEST(Context, PriceMention) {
  Lexicon lex;
  lex.add("pricerange", "cheap");
  lex.add("cuisine", "thai");
  const std::vector<Turn> prefix = {make_turn("something cheap please", "ok")};
  const ContextFeatures f = track_context(prefix, lex);
  EXPECT_EQ(f.slots[0], 0);
  EXPECT_EQ(f.slots[1], 0);
  EXPECT_EQ(f.slots[2], 1);
  EXPECT_EQ(f.api_results, 0);
}

TEST(Context, ApiBitFollowsLatestCall) {
  Lexicon lex;
  std::vector<Turn> prefix = {
      make_turn("hi", "api_call thai north cheap"),
      make_turn("<SILENCE>", "api_call thai south cheap"),
  };
  EXPECT_EQ(track_context(prefix, lex).api_results, 0);
  prefix.push_back(make_turn("<SILENCE>", "resto is nice",
                             {"resto R_cuisine thai", "resto R_location south", "resto R_price cheap"}));
  EXPECT_EQ(track_context(prefix, lex).api_results, 1);
  prefix.push_back(make_turn("another", "api_call thai east cheap"));
  EXPECT_EQ(track_context(prefix, lex).api_results, 0);
}

TEST(Featurize, FirstTurnAndUnknownTokens) {
  Lexicon lex;
  const Corpus c = parse_dialogs("1 hello there\tgreet\n2 mystery word\tanswer\n\n");
  const Vocabulary vocab = Vocabulary::from_tokens({"hello", "there", "word"});
  const ActionSet actions = extract_action_set(c, lex, kDefaultFallbackUtterance);
  Corpus assigned = c;
  assign_actions(assigned, actions, lex);
  const auto& turns = assigned[0].turns;

  const TurnFeatures first = featurize_turn(turns[0], {}, vocab, actions, lex);
  EXPECT_TRUE(std::all_of(first.prev_action.begin(), first.prev_action.end(),
                          [](auto v) { return v == 0; }));
  EXPECT_EQ(first.mask, std::vector<std::uint8_t>(actions.size(), 1));

  const TurnFeatures second =
      featurize_turn(turns[1], std::span<const Turn>(turns.data(), 1), vocab, actions, lex);
  EXPECT_EQ(second.tokens[0], Vocabulary::kUnk);
  EXPECT_EQ(second.bow[Vocabulary::kUnk], 1);
  EXPECT_EQ(second.prev_action[static_cast<std::size_t>(turns[0].system_action)], 1);
  EXPECT_EQ(second.target, turns[1].system_action);

  Turn bad = turns[1];
  bad.system_action = 99;
  EXPECT_THROW(featurize_turn(bad, {}, vocab, actions, lex), Error);
}

TEST(Featurize, BowSupportEqualsDistinctTokens) {
  const ToyDomain& toy = testing::small_toy();
  const FeatureSpace space = testing::toy_space(toy);
  for (const auto& d : space.featurize(toy.train)) {
    for (const auto& t : d.turns) {
      std::set<TokenId> distinct(t.tokens.begin(), t.tokens.end());
      std::size_t ones = 0;
      for (std::size_t i = 0; i < t.bow.size(); ++i) {
        ones += t.bow[i];
        EXPECT_EQ(t.bow[i] == 1, distinct.count(static_cast<TokenId>(i)) == 1);
      }
      EXPECT_EQ(ones, distinct.size());
      EXPECT_EQ(t.mask, std::vector<std::uint8_t>(space.actions.size(), 1));
    }
  }
}

}  // namespace
}  // namespace oodhcn
