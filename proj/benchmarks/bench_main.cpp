// Micro-benchmarks for the hot paths: LSTM cell, per-dialog training step,
// corpus augmentation and synthetic turn generation.

#include <benchmark/benchmark.h>

#include "oodhcn/augment.hpp"
#include "oodhcn/features.hpp"
#include "oodhcn/model.hpp"
#include "oodhcn/nn.hpp"
#include "oodhcn/toy.hpp"
#include "oodhcn/turndrop.hpp"

namespace {

using namespace oodhcn;

const ToyDomain& toy() {
  static const ToyDomain domain = generate_toy_domain(3, 200, 20);
  return domain;
}

const FeatureSpace& space() {
  static const FeatureSpace s = [] {
    const Corpus extra[] = {toy().dev, toy().test, toy().ood_dialogs};
    return FeatureSpace::build(toy().train, extra, toy().lexicon);
  }();
  return s;
}

void BM_LstmStep(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Rng rng(1);
  nn::Matrix w(4 * n, 2 * n), b(4 * n, 1);
  nn::init_lstm(w, b, n, rng);
  const nn::Vector x = nn::Vector::Random(n), h = nn::Vector::Zero(n), c = nn::Vector::Zero(n);
  for (auto _ : state) {
    nn::LstmStep step = nn::lstm_step(x, h, c, w, b.col(0));
    benchmark::DoNotOptimize(step.h.data());
  }
}
BENCHMARK(BM_LstmStep)->Arg(64)->Arg(128);

void BM_ForwardBackward(benchmark::State& state) {
  const auto variant = static_cast<Variant>(state.range(0));
  const auto dialogs = space().featurize(toy().train);
  DialogModel model(ModelConfig::defaults(variant), space().vocab.size(), space().actions.size(), 1);
  Rng rng(2);
  std::size_t i = 0;
  for (auto _ : state) {
    model.zero_grad();
    const DialogLoss loss = model.forward_backward(dialogs[i++ % dialogs.size()], Mode::kTrain, &rng);
    benchmark::DoNotOptimize(loss.action);
  }
  state.SetLabel(std::string(to_string(variant)));
}
BENCHMARK(BM_ForwardBackward)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

void BM_AugmentCorpus(benchmark::State& state) {
  const OodSampler sampler({load_ood_pool(toy().ood_dialogs, "toy")});
  const AugmentationConfig config;
  const FallbackAction fallback;
  std::size_t turns = 0;
  for (auto _ : state) {
    const AugmentResult r = augment_corpus(toy().train, config, sampler, toy().segments, fallback);
    turns += r.stats.original_turns + r.stats.turn_ood_turns;
    benchmark::DoNotOptimize(r.dialogs.size());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(turns));
}
BENCHMARK(BM_AugmentCorpus)->Unit(benchmark::kMillisecond);

void BM_SynthTurn(benchmark::State& state) {
  TurnDropoutConfig config;
  config.min_length = 1;
  config.max_length = 12;
  Rng rng(4);
  for (auto _ : state) {
    const auto tokens = synth_turn(rng, space().vocab.size(), config);
    benchmark::DoNotOptimize(tokens.data());
  }
}
BENCHMARK(BM_SynthTurn);

}  // namespace

BENCHMARK_MAIN();
