#include <string>
#include <gtest/gtest.h>

#include "helpers.hpp"
#include "model_gradcheck.hpp"
#include "oodhcn/error.hpp"

namespace oodhcn {
namespace {

using testing::check_model_gradients;
using testing::tiny_problem;

class Gradients : public ::testing::TestWithParam<std::tuple<Variant, Mode>> {};

TEST_P(Gradients, MatchFiniteDifferences) {
  const auto [variant, mode] = GetParam();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const nn::GradCheckResult r = check_model_gradients(variant, mode, seed);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed << " worst " << r.worst_index;
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllVariants, Gradients,
    ::testing::Values(std::tuple{Variant::kHcn, Mode::kTrain}, std::tuple{Variant::kHhcn, Mode::kTrain},
                      std::tuple{Variant::kVhcn, Mode::kTrain}, std::tuple{Variant::kVhcn, Mode::kInfer}),
    [](const auto& info) {
      return std::string(to_string(std::get<0>(info.param))) +
             (std::get<1>(info.param) == Mode::kTrain ? "_train" : "_infer");
    });

TEST(ModelConfig, PerVariantDefaults) {
  EXPECT_EQ(ModelConfig::defaults(Variant::kHcn).embedding_size, 64);
  EXPECT_EQ(ModelConfig::defaults(Variant::kHhcn).embedding_size, 128);
  EXPECT_EQ(ModelConfig::defaults(Variant::kVhcn).embedding_size, 128);
  EXPECT_EQ(ModelConfig::defaults(Variant::kVhcn).latent_size, 8);
  EXPECT_EQ(ModelConfig::defaults(Variant::kHcn).dialog_hidden, 128);
  EXPECT_EQ(parse_variant("vhcn"), Variant::kVhcn);
  EXPECT_EQ(parse_variant("HHCN"), Variant::kHhcn);
  EXPECT_THROW(parse_variant("rnn"), Error);
  ModelConfig bad = ModelConfig::defaults(Variant::kVhcn);
  bad.latent_size = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(DialogModel, InputLayout) {
  const auto p = tiny_problem();
  const std::size_t v = p.space.vocab.size();
  const std::size_t a = p.space.actions.size();
  DialogModel hcn(ModelConfig::defaults(Variant::kHcn), v, a, 1, nullptr);
  EXPECT_EQ(hcn.turn_vector_size(), 64u);
  EXPECT_EQ(hcn.dialog_input_size(), 64u + v + ContextFeatures::kSize + 2 * a);
  DialogModel vhcn(ModelConfig::defaults(Variant::kVhcn), v, a, 1, nullptr);
  EXPECT_EQ(vhcn.turn_vector_size(), 8u);
}

TEST(DialogModel, HcnEmbeddingsAreFrozen) {
  const auto p = tiny_problem();
  DialogModel m(ModelConfig::defaults(Variant::kHcn), p.space.vocab.size(), p.space.actions.size(),
                1, nullptr);
  const nn::Parameter* emb = m.parameters().front();
  EXPECT_FALSE(emb->trainable);
  DialogModel h(ModelConfig::defaults(Variant::kHhcn), p.space.vocab.size(),
                p.space.actions.size(), 1, nullptr);
  EXPECT_TRUE(h.parameters().front()->trainable);
}

TEST(DialogModel, PretrainedTableIsUsed) {
  const auto p = tiny_problem();
  ModelConfig cfg = ModelConfig::defaults(Variant::kHcn);
  cfg.embedding_size = 3;
  const EmbeddingTable table = random_embeddings(p.space.vocab, 3, 42);
  DialogModel m(cfg, p.space.vocab.size(), p.space.actions.size(), 1, &table);
  EXPECT_EQ(m.parameters().front()->value, table.vectors);
}

TEST(DialogModel, SeededInitAndInferDeterminism) {
  const auto p = tiny_problem();
  const ModelConfig cfg = ModelConfig::defaults(Variant::kVhcn);
  DialogModel a(cfg, p.space.vocab.size(), p.space.actions.size(), 5, nullptr);
  DialogModel b(cfg, p.space.vocab.size(), p.space.actions.size(), 5, nullptr);
  DialogModel c(cfg, p.space.vocab.size(), p.space.actions.size(), 6, nullptr);
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    EXPECT_EQ(a.parameters()[i]->value, b.parameters()[i]->value);
  }
  EXPECT_NE(a.parameters()[1]->value, c.parameters()[1]->value);
  EXPECT_EQ(a.loss(p.dialog, Mode::kInfer).total(), a.loss(p.dialog, Mode::kInfer).total());
  const TurnEncoding e = a.encode_turn(p.dialog.turns[1], Mode::kInfer);
  ASSERT_TRUE(e.vae.has_value());
  EXPECT_EQ(e.vae->z, e.vae->mu);
  EXPECT_THROW(a.encode_turn(p.dialog.turns[1], Mode::kTrain, nullptr), Error);
}

TEST(DialogModel, PredictBreaksTiesTowardLowestId) {
  const auto p = tiny_problem();
  DialogModel m(ModelConfig::defaults(Variant::kHcn), p.space.vocab.size(), p.space.actions.size(),
                1, nullptr);
  for (nn::Parameter* param : m.parameters()) param->value.setZero();
  for (ActionId a : m.predict(p.dialog)) EXPECT_EQ(a, 0);
}

TEST(DialogModel, LossSkipsUnknownTargets) {
  auto p = tiny_problem();
  DialogModel m(ModelConfig::defaults(Variant::kHcn), p.space.vocab.size(), p.space.actions.size(),
                1, nullptr);
  p.dialog.turns[1].target = kNoAction;
  const DialogLoss loss = m.loss(p.dialog, Mode::kInfer);
  EXPECT_EQ(loss.scored_turns, 1u);
  EXPECT_EQ(loss.turns, 2u);
}

TEST(DialogModel, RejectsMismatchedFeatures) {
  const auto p = tiny_problem();
  DialogModel m(ModelConfig::defaults(Variant::kHcn), p.space.vocab.size() + 1,
                p.space.actions.size(), 1, nullptr);
  EXPECT_THROW(m.predict(p.dialog), Error);
}

}  // namespace
}  // namespace oodhcn
