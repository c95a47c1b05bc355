#pragma once

#include <vector>

#include "oodhcn/features.hpp"
#include "oodhcn/model.hpp"
#include "oodhcn/nn.hpp"

namespace oodhcn::testing {

struct TinyProblem {
  FeatureSpace space;
  FeaturizedDialog dialog;  // two turns
};

inline TinyProblem tiny_problem() {
  const Corpus corpus = parse_dialogs(
      "1 <SILENCE>\thello what can i do\n"
      "2 i want cheap thai food\tapi_call thai cheap\n\n"
      "1 hi there\thello what can i do\n\n");
  Lexicon lex;
  lex.add("cuisine", "thai");
  lex.add("pricerange", "cheap");
  TinyProblem p{FeatureSpace::build(corpus, {}, lex), {}};
  p.dialog = p.space.featurize(corpus[0]);
  return p;
}

// Finite-difference check of forward_backward() over every trainable
// parameter of a small model of the given variant.
inline nn::GradCheckResult check_model_gradients(Variant variant, Mode mode, std::uint64_t seed) {
  const TinyProblem p = tiny_problem();
  ModelConfig cfg = ModelConfig::defaults(variant);
  cfg.embedding_size = 5;
  cfg.latent_size = variant == Variant::kVhcn ? 3 : 0;
  cfg.dialog_hidden = 4;
  cfg.predictor_hidden = 3;
  DialogModel model(cfg, p.space.vocab.size(), p.space.actions.size(), seed, nullptr);
  const std::uint64_t noise_key = derive_seed(seed, "noise");

  model.zero_grad();
  Rng rng(noise_key);
  model.forward_backward(p.dialog, mode, &rng);
  std::vector<double> point, analytic;
  for (const nn::Parameter* param : model.parameters()) {
    if (!param->trainable) continue;
    point.insert(point.end(), param->value.data(), param->value.data() + param->value.size());
    analytic.insert(analytic.end(), param->grad.data(), param->grad.data() + param->grad.size());
  }
  DialogModel probe = model;
  auto loss = [&](std::span<const double> x) {
    std::size_t k = 0;
    for (nn::Parameter* param : probe.parameters()) {
      if (!param->trainable) continue;
      for (Eigen::Index i = 0; i < param->value.size(); ++i) param->value.data()[i] = x[k++];
    }
    Rng r(noise_key);
    return probe.loss(p.dialog, mode, &r).total();
  };
  // Cancellation noise of the central difference is about eps * |loss| / h,
  // roughly 1e-10 here; the floor sits two orders above it.
  constexpr double kNoiseFloor = 1e-8;
  return nn::grad_check(loss, point, analytic, 1e-5, kNoiseFloor);
}

}  // namespace oodhcn::testing
