#include <gtest/gtest.h>

#include <filesystem>

#include "helpers.hpp"
#include "oodhcn/checkpoint.hpp"
#include "oodhcn/error.hpp"

namespace oodhcn {
namespace {

Checkpoint make_checkpoint(Variant variant) {
  const ToyDomain& toy = testing::small_toy();
  FeatureSpace space = testing::toy_space(toy);
  ModelConfig cfg = ModelConfig::defaults(variant);
  cfg.embedding_size = 8;
  cfg.dialog_hidden = 6;
  cfg.predictor_hidden = 5;
  if (variant == Variant::kVhcn) cfg.latent_size = 3;
  DialogModel model(cfg, space.vocab.size(), space.actions.size(), 3, nullptr);
  return Checkpoint{std::move(space), std::move(model), {{"train.seed", "3"}, {"note", "a b"}}};
}

TEST(Checkpoint, RoundTripRestoresFloat32Parameters) {
  for (Variant v : {Variant::kHcn, Variant::kHhcn, Variant::kVhcn}) {
    Checkpoint cp = make_checkpoint(v);
    const std::string bytes = serialize_checkpoint(cp);
    const Checkpoint back = deserialize_checkpoint(bytes);
    EXPECT_EQ(back.model.config(), cp.model.config());
    EXPECT_EQ(back.space.vocab, cp.space.vocab);
    EXPECT_EQ(back.space.actions, cp.space.actions);
    EXPECT_EQ(back.space.lexicon.entries(), cp.space.lexicon.entries());
    EXPECT_EQ(back.config_echo, cp.config_echo);

    quantize_to_float32(cp.model);
    const auto a = cp.model.parameters();
    const auto b = back.model.parameters();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i]->name, b[i]->name);
      EXPECT_EQ(a[i]->trainable, b[i]->trainable);
      EXPECT_EQ(a[i]->value, b[i]->value);
    }
    EXPECT_EQ(serialize_checkpoint(back), bytes);
  }
}

TEST(Checkpoint, PredictionsSurviveSaveAndLoad) {
  Checkpoint cp = make_checkpoint(Variant::kHhcn);
  quantize_to_float32(cp.model);
  const auto path = (std::filesystem::temp_directory_path() / "oodhcn_ckpt_test.bin").string();
  save_checkpoint(path, cp);
  const Checkpoint back = load_checkpoint(path);
  std::filesystem::remove(path);
  for (const Dialog& d : testing::small_toy().test) {
    const FeaturizedDialog f = back.space.featurize(d, UnknownActionPolicy::kMarkUnknown);
    EXPECT_EQ(predict_dialog(back, f), predict_dialog(cp, f));
  }
}

TEST(Checkpoint, RejectsHashMismatchAndCorruption) {
  const Checkpoint cp = make_checkpoint(Variant::kHcn);
  FeaturizedDialog f =
      cp.space.featurize(testing::small_toy().dev.front(), UnknownActionPolicy::kMarkUnknown);
  f.vocab_hash ^= 1;
  EXPECT_THROW(predict_dialog(cp, f), Error);

  std::string bytes = serialize_checkpoint(cp);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), Error);
  EXPECT_THROW(deserialize_checkpoint("oodhcn-checkpoint 99\n"), Error);
  EXPECT_THROW(deserialize_checkpoint("garbage"), Error);
}

}  // namespace
}  // namespace oodhcn
