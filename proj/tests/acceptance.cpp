// Acceptance suite: one PASS/FAIL/SKIP line per criterion, nonzero exit on
// any FAIL.

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "helpers.hpp"
#include "model_gradcheck.hpp"
#include "oodhcn/augment.hpp"
#include "oodhcn/checkpoint.hpp"
#include "oodhcn/eval.hpp"
#include "oodhcn/nn.hpp"
#include "oodhcn/pipeline.hpp"
#include "oodhcn/train.hpp"
#include "oodhcn/turndrop.hpp"

namespace {

using namespace oodhcn;
namespace fs = std::filesystem;

enum class Outcome { kPass, kFail, kSkip };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {Outcome::kFail, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const char* tag = v.outcome == Outcome::kPass ? "PASS" : v.outcome == Outcome::kFail ? "FAIL" : "SKIP";
  if (v.outcome == Outcome::kFail) ++failures;
  std::printf("[%s] %d %s: %s [%.1f s]\n", tag, id, title, v.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0, double e = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d, e);
  return buf;
}

double elapsed_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

Verdict gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (Variant v : {Variant::kHcn, Variant::kHhcn, Variant::kVhcn}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      worst = std::max(worst, testing::check_model_gradients(v, Mode::kTrain, seed).max_relative_error);
    }
  }
  const double secs = elapsed_since(t0);
  const bool ok = worst < 1e-4 && secs < 60.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("HCN/HHCN/VHCN max relative error %.2e beyond a 1e-8 difference-noise floor (< 1e-4), runtime %.1f s (< 60 s)", worst, secs)};
}

double kl_numeric(double mu, double sigma) {
  const double lo = mu - 30.0 * sigma, hi = mu + 30.0 * sigma;
  const int n = 200000;
  const double h = (hi - lo) / n;
  auto g = [&](double x) {
    const double lq = -0.5 * std::log(2 * M_PI) - std::log(sigma) - 0.5 * std::pow((x - mu) / sigma, 2);
    const double lp = -0.5 * std::log(2 * M_PI) - 0.5 * x * x;
    return std::exp(lq) * (lq - lp);
  };
  double s = g(lo) + g(hi);
  for (int i = 1; i < n; ++i) s += g(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

Verdict closed_form_kl() {
  const double zero = nn::gaussian_kl(nn::Vector::Zero(1), nn::Vector::Ones(1));
  nn::Vector mu(1), sigma(1);
  mu << 0.0;
  sigma << 2.0;
  const double kl = nn::gaussian_kl(mu, sigma);
  const double oracle = kl_numeric(0.0, 2.0);
  Rng rng(99);
  int negatives = 0;
  for (int i = 0; i < 10000; ++i) {
    nn::Vector m(2), s(2);
    for (int j = 0; j < 2; ++j) {
      m(j) = 10.0 * (rng.uniform() - 0.5);
      s(j) = 0.01 + 5.0 * rng.uniform();
    }
    negatives += nn::gaussian_kl(m, s) < 0.0;
  }
  const bool ok = zero == 0.0 && std::abs(kl - oracle) < 1e-3 && negatives == 0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("KL(0,1) = %g (exact 0), KL([0],[2]) = %.5f vs integration %.5f (tol 1e-3), "
              "%g negative values in 1e4 draws",
              zero, kl, oracle, negatives)};
}

Verdict augmentation_statistics() {
  const auto t0 = std::chrono::steady_clock::now();
  const ToyDomain toy = generate_toy_domain(5, 2000, 20);
  Corpus corpus = toy.train;
  corpus.insert(corpus.end(), toy.dev.begin(), toy.dev.end());
  for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i].id = static_cast<int>(i) + 1;
  AugmentationConfig cfg;
  cfg.seed = 31;
  const AugmentResult r = augment_corpus(corpus, cfg, OodSampler({load_ood_pool(toy.ood_dialogs)}),
                                         toy.segments, FallbackAction{});
  const double turns = static_cast<double>(r.stats.original_turns);
  const double start_rate = static_cast<double>(r.stats.ood_blocks) / turns;
  const double mean_len =
      static_cast<double>(r.stats.turn_ood_turns) / static_cast<double>(r.stats.ood_blocks);
  // Geometric goodness of fit, lengths >= 6 pooled.
  std::vector<double> observed(6, 0.0), expected(6, 0.0);
  for (const auto& [len, n] : r.stats.block_lengths) observed[std::min<std::size_t>(len, 6) - 1] += n;
  double tail = 1.0;
  const double blocks = static_cast<double>(r.stats.ood_blocks);
  for (int k = 0; k < 5; ++k) {
    const double pk = std::pow(0.4, k) * 0.6;
    expected[static_cast<std::size_t>(k)] = blocks * pk;
    tail -= pk;
  }
  expected[5] = blocks * tail;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < 6; ++i) chi2 += std::pow(observed[i] - expected[i], 2) / expected[i];
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(5.0), chi2));
  const double secs = elapsed_since(t0);
  const bool ok = turns >= 1e4 && std::abs(start_rate - 0.2) <= 0.02 &&
                  std::abs(mean_len - 5.0 / 3.0) <= 0.05 && p > 0.01 && secs < 10.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("%g turns, block-start rate %.4f (0.2 +- 0.02), mean block length %.4f "
              "(1.6667 +- 0.05), chi-square p = %.3f (> 0.01), %.1f s (< 10 s)",
              turns, start_rate, mean_len, p, secs)};
}

Verdict turn_dropout_contract() {
  const ToyDomain toy = generate_toy_domain(6, 1800, 20);
  const Corpus extra[] = {toy.dev};
  const FeatureSpace space = FeatureSpace::build(toy.train, extra, toy.lexicon);
  const auto dialogs = space.featurize(toy.train);
  TurnDropoutConfig cfg;
  const LengthBounds b = utterance_length_bounds(dialogs);
  cfg.min_length = b.min;
  cfg.max_length = b.max;
  const ActionId fallback = space.actions.fallback_id();

  bool identity = true, full = true, preserved = true;
  std::size_t turns = 0, replaced = 0;
  for (std::size_t i = 0; i < dialogs.size(); ++i) {
    const auto& d = dialogs[i];
    Rng r0(derive_seed(1, i)), r1(derive_seed(2, i)), r4(derive_seed(3, i));
    cfg.ratio = 0.0;
    identity = identity && apply_turn_dropout(d, cfg, r0, fallback) == d;
    cfg.ratio = 1.0;
    const auto all = apply_turn_dropout(d, cfg, r1, fallback);
    cfg.ratio = 0.4;
    const auto some = apply_turn_dropout(d, cfg, r4, fallback);
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      full = full && all.turns[t].target == fallback;
      for (const auto* out : {&all, &some}) {
        preserved = preserved && out->turns[t].context == d.turns[t].context &&
                    out->turns[t].mask == d.turns[t].mask &&
                    out->turns[t].prev_action == d.turns[t].prev_action;
      }
      ++turns;
      replaced += some.turns[t].tokens != d.turns[t].tokens || some.turns[t].target != d.turns[t].target;
    }
  }
  const double rate = static_cast<double>(replaced) / static_cast<double>(turns);
  const bool ok = identity && full && preserved && turns >= 10000 && std::abs(rate - 0.4) <= 0.02;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("ratio 0 identity %g, ratio 1 all fallback %g, ratio 0.4 rate %.4f over %g turns "
              "(>= 10000, 0.40 +- 0.02), ctx/mask/prev_action preserved %g",
              identity, full, rate, static_cast<double>(turns), preserved)};
}

RunConfig pipeline_config() {
  RunConfig c;
  c.set("toy.n_dialogs", "200");
  c.set("toy.n_actions", "20");
  c.set("pipeline.models", "HCN,TD-HCN");
  c.set("pipeline.root_seed", "1");
  return c;
}

const fs::path kRunA = fs::temp_directory_path() / "oodhcn_acceptance_a";
const fs::path kRunB = fs::temp_directory_path() / "oodhcn_acceptance_b";

Verdict mechanism() {
  const auto t0 = std::chrono::steady_clock::now();
  fs::remove_all(kRunA);
  const PipelineResult r = run_pipeline(pipeline_config(), kRunA.string());
  const MetricsRow& plain = r.records.at(0).augmented;
  const MetricsRow& td = r.records.at(1).augmented;
  const double plain_ind = r.records.at(0).clean->overall_acc;
  const double td_ind = r.records.at(1).clean->overall_acc;
  const double plain_ood = plain.ood_acc.value_or(-1.0);
  const double td_ood = td.ood_acc.value_or(-1.0);
  const bool ok = plain_ood >= 0.0 && plain_ood <= 0.1 && plain.ood_f1 <= 0.1 && td_ood >= 0.7 &&
                  td.ood_f1 >= 0.7 && td_ind >= 0.9 * plain_ind && elapsed_since(t0) < 600.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("HCN OOD acc %.3f / F1 %.3f (<= 0.1); TD-HCN OOD acc %.3f / F1 %.3f (>= 0.7); "
              "IND acc TD %.3f vs plain %.3f (ratio >= 0.9)",
              plain_ood, plain.ood_f1, td_ood, td.ood_f1, td_ind) +
              fmt(" [plain IND %.3f], %.0f s (< 600 s)", plain_ind, elapsed_since(t0))};
}

Verdict babi_check() {
  const char* dir = std::getenv("OODHCN_BABI_DIR");
  if (dir == nullptr || !fs::exists(dir)) {
    return {Outcome::kSkip, "set OODHCN_BABI_DIR to a directory with train.txt, dev.txt, test.txt, "
                            "ood*.txt pools and segments.txt to run this check"};
  }
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path root(dir);
  const Corpus train = read_corpus_file((root / "train.txt").string());
  const Corpus dev = read_corpus_file((root / "dev.txt").string());
  const Corpus test = read_corpus_file((root / "test.txt").string());
  std::vector<OodPool> pools;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("ood", 0) == 0 && entry.path().extension() == ".txt") {
      pools.push_back(load_ood_pool(read_corpus_file(entry.path().string()), name));
    }
  }
  AugmentationConfig ac;
  ac.seed = derive_seed(1, "augment");
  const AugmentResult augmented =
      augment_corpus(test, ac, OodSampler(pools), load_segment_pool(read_text_file((root / "segments.txt").string())),
                     FallbackAction{});
  const Lexicon lexicon = fs::exists(root / "lexicon.tsv") ? read_lexicon_file((root / "lexicon.tsv").string())
                                                           : lexicon_from_kb_facts(train);
  const Corpus extra[] = {dev, augmented.dialogs};
  const FeatureSpace space = FeatureSpace::build(train, extra, lexicon);
  const auto train_f = space.featurize(train);
  const auto dev_f = space.featurize(dev, UnknownActionPolicy::kMarkUnknown);
  std::optional<EmbeddingTable> emb;
  if (fs::exists(root / "embeddings.txt")) {
    emb = load_embeddings_file((root / "embeddings.txt").string(), space.vocab, 1);
  }
  const TrainData data{train_f, dev_f, space.vocab.size(), space.actions.size(),
                       space.actions.fallback_id(), emb ? &*emb : nullptr};
  bool plain_zero = true;
  double td_hcn_acc = 0, td_hcn_f1 = 0, best_td_ind = 0;
  for (Variant v : {Variant::kHcn, Variant::kHhcn, Variant::kVhcn}) {
    for (bool with_td : {false, true}) {
      TrainConfig tc;
      tc.seed = 1;
      tc.turn_dropout_ratio = with_td ? default_turn_dropout_ratio(v) : 0.0;
      TrainResult r = train_model(ModelConfig::defaults(v), tc, data);
      const Checkpoint cp{space, std::move(r.model), {}};
      const MetricsRow m = evaluate_model(cp, augmented.dialogs);
      if (!with_td) {
        plain_zero = plain_zero && m.ood_acc.value_or(1.0) == 0.0 && m.ood_f1 == 0.0;
      } else {
        best_td_ind = std::max(best_td_ind, evaluate_model(cp, test).overall_acc);
        if (v == Variant::kHcn) {
          td_hcn_acc = m.ood_acc.value_or(0.0);
          td_hcn_f1 = m.ood_f1;
        }
      }
    }
  }
  const double secs = elapsed_since(t0);
  const bool ok = plain_zero && td_hcn_acc >= 0.65 && td_hcn_f1 >= 0.65 && best_td_ind >= 0.5 &&
                  secs < 7200.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("non-TD OOD acc/F1 all zero %g; TD-HCN OOD acc %.3f / F1 %.3f (>= 0.65); best TD "
              "IND acc %.3f (>= 0.5); %.0f s (< 7200 s)",
              plain_zero, td_hcn_acc, td_hcn_f1, best_td_ind, secs)};
}

Verdict variational_kl() {
  const ToyDomain toy = generate_toy_domain(derive_seed(1, "toy"), 200, 20);
  const Corpus extra[] = {toy.dev, toy.test};
  const FeatureSpace space = FeatureSpace::build(toy.train, extra, toy.lexicon);
  const auto train_f = space.featurize(toy.train);
  const auto dev_f = space.featurize(toy.dev, UnknownActionPolicy::kMarkUnknown);
  TrainConfig tc;
  tc.seed = 7;
  const TrainResult r = train_model(ModelConfig::defaults(Variant::kVhcn), tc,
                                    TrainData{train_f, dev_f, space.vocab.size(), space.actions.size(),
                                              space.actions.fallback_id(), nullptr});
  double kl = 0.0;
  std::size_t turns = 0;
  for (const auto& d : train_f) {
    const DialogLoss l = r.model.loss(d, Mode::kInfer);
    kl += l.kl;
    turns += l.turns;
  }
  const double mean_kl = kl / static_cast<double>(turns);
  const double history_kl =
      r.history.epochs.at(static_cast<std::size_t>(r.history.best_epoch - 1)).kl_mean;
  const bool ok = mean_kl > 0.1;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("mean per-turn KL of the selected model %.3f nats (> 0.1), training-epoch mean %.3f, "
              "best epoch %g of %g, no annealing",
              mean_kl, history_kl, r.history.best_epoch,
              static_cast<double>(r.history.epochs.size()))};
}

Verdict metric_oracles() {
  std::mt19937 gen(1234);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + gen() % 50;
    const ActionId fallback = static_cast<ActionId>(gen() % 6);
    std::vector<ActionId> pred(n), gold(n);
    std::vector<OodLabel> labels(n);
    std::size_t total[3] = {0, 0, 0}, correct[3] = {0, 0, 0}, tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<OodLabel>(gen() % 3);
      gold[i] = labels[i] == OodLabel::kTurnOod ? fallback : static_cast<ActionId>(gen() % 6);
      pred[i] = static_cast<ActionId>(gen() % 6);
      const std::size_t k = static_cast<std::size_t>(labels[i]);
      ++total[k];
      correct[k] += pred[i] == gold[i];
      const bool pp = pred[i] == fallback, gp = labels[i] == OodLabel::kTurnOod;
      tp += pp && gp;
      fp += pp && !gp;
      fn += !pp && gp;
    }
    const double all = static_cast<double>(correct[0] + correct[1] + correct[2]) / static_cast<double>(n);
    auto sub = [&](OodLabel l) -> std::optional<double> {
      const auto k = static_cast<std::size_t>(l);
      if (total[k] == 0) return std::nullopt;
      return static_cast<double>(correct[k]) / static_cast<double>(total[k]);
    };
    const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    mismatches += per_utterance_accuracy(pred, gold, labels, Subset::kAll) != all;
    mismatches += per_utterance_accuracy(pred, gold, labels, Subset::kSegmentOod) != sub(OodLabel::kSegmentOod);
    mismatches += per_utterance_accuracy(pred, gold, labels, Subset::kTurnOod) != sub(OodLabel::kTurnOod);
    const OodScores s = ood_f1(pred, labels, fallback);
    mismatches += s.precision != p || s.recall != r || s.f1 != f;
  }
  return {mismatches == 0 ? Outcome::kPass : Outcome::kFail,
          fmt("%g mismatches against brute-force recounts over 1000 random vectors", mismatches)};
}

Verdict determinism() {
  if (!fs::exists(kRunA / "report.txt")) {
    fs::remove_all(kRunA);
    run_pipeline(pipeline_config(), kRunA.string());
  }
  fs::remove_all(kRunB);
  run_pipeline(pipeline_config(), kRunB.string());
  int differing = 0;
  std::string names;
  for (const char* f : {"test_ood.txt", "test_ood.labels", "HCN.report", "TD-HCN.report", "report.txt",
                        "report.csv"}) {
    if (read_text_file((kRunA / f).string()) != read_text_file((kRunB / f).string())) {
      ++differing;
      names += std::string(" ") + f;
    }
  }
  fs::remove_all(kRunA);
  fs::remove_all(kRunB);
  return {differing == 0 ? Outcome::kPass : Outcome::kFail,
          fmt("two pipeline runs with root seed 1: %g differing artifacts", differing) + names +
              " (augmented corpus, labels, metric records, report tables compared bytewise)"};
}

}  // namespace

int main() {
  report(1, "gradient correctness", gradients);
  report(2, "closed-form KL", closed_form_kl);
  report(3, "augmentation statistics", augmentation_statistics);
  report(4, "turn-dropout contract", turn_dropout_contract);
  report(5, "mechanism reproduction on the toy domain", mechanism);
  report(6, "conditional bAbI Task 6 check", babi_check);
  report(7, "VHCN variational property", variational_kl);
  report(8, "metric oracles", metric_oracles);
  report(9, "end-to-end determinism", determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
