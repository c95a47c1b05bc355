#include "oodhcn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <optional>
#include <sstream>

#include "oodhcn/checkpoint.hpp"
#include "oodhcn/error.hpp"
#include "oodhcn/nn.hpp"
#include "oodhcn/turndrop.hpp"

namespace oodhcn {

std::string_view to_string(DevSelection selection) {
  return selection == DevSelection::kPlain ? "plain" : "td";
}

DevSelection parse_dev_selection(std::string_view text) {
  if (text == "td") return DevSelection::kTurnDropout;
  if (text == "plain") return DevSelection::kPlain;
  throw Error("unknown dev selection '" + std::string(text) + "' (expected td or plain)");
}

void TrainConfig::validate() const {
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string(name) + " must be in [0, 1]");
  };
  rate(word_dropout, "word_dropout");
  rate(turn_dropout_ratio, "turn_dropout ratio");
  rate(turn_dropout_unk_prob, "turn_dropout unk_prob");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (patience < 1) throw Error("patience must be at least 1");
  if (max_epochs < 1) throw Error("max_epochs must be at least 1");
  if (batch_size < 1) throw Error("batch_size must be at least 1");
  if (!(clip_norm > 0.0)) throw Error("clip_norm must be positive");
}

double default_turn_dropout_ratio(Variant variant) {
  switch (variant) {
    case Variant::kHcn: return 0.4;
    case Variant::kHhcn: return 0.6;
    case Variant::kVhcn: return 0.3;
  }
  return 0.0;
}

std::vector<TokenId> word_dropout(std::span<const TokenId> tokens, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("word dropout probability must be in [0, 1]");
  std::vector<TokenId> out(tokens.begin(), tokens.end());
  if (p == 0.0) return out;
  for (auto& t : out) {
    if (rng.bernoulli(p)) t = Vocabulary::kUnk;
  }
  return out;
}

std::string TrainHistory::to_text() const {
  std::ostringstream out;
  out << "epoch\ttrain_loss\tdev_acc\tkl_mean\n";
  char buf[128];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.6f\t%.6f\n", e.epoch, e.train_loss, e.dev_acc,
                  e.kl_mean);
    out << buf;
  }
  return out.str();
}

double dialog_accuracy(const DialogModel& model, std::span<const FeaturizedDialog> dialogs) {
  std::size_t total = 0;
  std::size_t correct = 0;
  for (const auto& d : dialogs) {
    const auto predicted = model.predict(d);
    for (std::size_t i = 0; i < d.turns.size(); ++i) {
      ++total;
      if (d.turns[i].target != kNoAction && predicted[i] == d.turns[i].target) ++correct;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

TurnDropoutConfig turn_dropout_config(const TrainConfig& config,
                                      std::span<const FeaturizedDialog> train) {
  const LengthBounds bounds = utterance_length_bounds(train);
  TurnDropoutConfig td;
  td.ratio = config.turn_dropout_ratio;
  td.unk_prob = config.turn_dropout_unk_prob;
  td.min_length = bounds.min;
  td.max_length = bounds.max;
  return td;
}

}  // namespace

TrainResult train_model(const ModelConfig& model_config, const TrainConfig& config,
                        const TrainData& data) {
  config.validate();
  if (data.train.empty()) throw Error("training set is empty");
  if (data.fallback == kNoAction && config.turn_dropout_ratio > 0.0) {
    throw Error("turn dropout needs a fallback action");
  }
  const auto start = std::chrono::steady_clock::now();

  DialogModel model(model_config, data.vocab_size, data.action_count,
                    derive_seed(config.seed, "model"), data.embeddings);
  const TurnDropoutConfig td = turn_dropout_config(config, data.train);

  std::vector<FeaturizedDialog> dev_noised;
  std::span<const FeaturizedDialog> dev = data.dev.empty() ? data.train : data.dev;
  if (config.selection == DevSelection::kTurnDropout && td.ratio > 0.0) {
    const std::uint64_t dev_seed = derive_seed(config.seed, "dev_turn_dropout");
    for (std::size_t i = 0; i < dev.size(); ++i) {
      Rng rng(derive_seed(dev_seed, i));
      dev_noised.push_back(apply_turn_dropout(dev[i], td, rng, data.fallback));
    }
    dev = dev_noised;
  }

  nn::AdamState adam;
  adam.learning_rate = config.learning_rate;
  const auto params = model.parameters();

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::uint64_t epoch_seed = derive_seed(config.seed, "epoch");
  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));

  TrainResult result;
  std::optional<DialogModel> best;
  TrainHistory& history = result.history;
  history.best_dev_acc = -1.0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
    }
    const std::uint64_t this_epoch = derive_seed(epoch_seed, static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    double kl_sum = 0.0;
    std::size_t turns = 0;
    int pending = 0;
    model.zero_grad();
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t idx = order[k];
      Rng rng(derive_seed(this_epoch, idx));
      FeaturizedDialog sample = td.ratio > 0.0
                                    ? apply_turn_dropout(data.train[idx], td, rng, data.fallback)
                                    : data.train[idx];
      if (config.word_dropout > 0.0) {
        for (auto& t : sample.turns) t.tokens = word_dropout(t.tokens, config.word_dropout, rng);
      }
      const DialogLoss loss = model.forward_backward(sample, Mode::kTrain, &rng);
      if (!std::isfinite(loss.total())) {
        throw Error("training diverged (non-finite loss) in epoch " + std::to_string(epoch));
      }
      loss_sum += loss.total();
      kl_sum += loss.kl;
      turns += loss.turns;
      if (++pending == config.batch_size || k + 1 == order.size()) {
        nn::clip_grad_norm(params, config.clip_norm);
        nn::adam_step(params, adam);
        model.zero_grad();
        pending = 0;
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = turns ? loss_sum / static_cast<double>(turns) : 0.0;
    record.kl_mean = turns ? kl_sum / static_cast<double>(turns) : 0.0;
    record.dev_acc = dialog_accuracy(model, dev);
    history.epochs.push_back(record);

    if (record.dev_acc > history.best_dev_acc) {
      history.best_dev_acc = record.dev_acc;
      history.best_epoch = epoch;
      best = model;
    } else if (epoch - history.best_epoch >= config.patience) {
      break;
    }
  }

  result.model = std::move(*best);
  quantize_to_float32(result.model);
  history.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<double> default_stage2_grid() { return {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7}; }

std::string GridSearchResult::to_text() const {
  std::ostringstream out;
  out << "stage\tembedding_size\tlatent_size\tturn_dropout_ratio\tbest_epoch\tdev_acc\n";
  char buf[160];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%d\t%d\t%d\t%.4f\t%d\t%.6f\n", c.stage, c.point.embedding_size,
                  c.point.latent_size, c.turn_dropout_ratio, c.history.best_epoch,
                  c.history.best_dev_acc);
    out << buf;
  }
  return out.str();
}

namespace {

struct CellSpec {
  int stage;
  Stage1Point point;
  double ratio;
};

std::vector<TrainResult> run_cells(const ModelConfig& base, const TrainConfig& train_config,
                                   const std::vector<CellSpec>& specs, const TrainData& data,
                                   int jobs) {
  auto run = [&](const CellSpec& spec) {
    ModelConfig mc = base;
    mc.embedding_size = spec.point.embedding_size;
    mc.latent_size = spec.point.latent_size;
    TrainConfig tc = train_config;
    tc.turn_dropout_ratio = spec.ratio;
    return train_model(mc, tc, data);
  };
  std::vector<TrainResult> results;
  results.reserve(specs.size());
  const std::size_t width = static_cast<std::size_t>(std::max(jobs, 1));
  for (std::size_t first = 0; first < specs.size(); first += width) {
    const std::size_t last = std::min(specs.size(), first + width);
    if (width == 1) {
      results.push_back(run(specs[first]));
      continue;
    }
    std::vector<std::future<TrainResult>> futures;
    for (std::size_t i = first; i < last; ++i) {
      futures.push_back(std::async(std::launch::async, run, std::cref(specs[i])));
    }
    for (auto& f : futures) results.push_back(f.get());
  }
  return results;
}

}  // namespace

GridSearchResult grid_search(const ModelConfig& base, const TrainConfig& train_config,
                             std::vector<Stage1Point> stage1, std::vector<double> stage2,
                             const TrainData& data, int jobs) {
  if (stage1.empty() || stage2.empty()) throw Error("grid search needs non-empty grids");
  std::sort(stage1.begin(), stage1.end(), [](const Stage1Point& a, const Stage1Point& b) {
    return a.embedding_size != b.embedding_size ? a.embedding_size < b.embedding_size
                                                : a.latent_size < b.latent_size;
  });
  stage1.erase(std::unique(stage1.begin(), stage1.end()), stage1.end());
  std::sort(stage2.begin(), stage2.end());
  stage2.erase(std::unique(stage2.begin(), stage2.end()), stage2.end());

  GridSearchResult out;
  std::vector<CellSpec> specs;
  for (const auto& p : stage1) specs.push_back({1, p, 0.0});
  auto results = run_cells(base, train_config, specs, data, jobs);
  std::size_t best = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    out.cells.push_back({1, specs[i].point, 0.0, results[i].history});
    if (results[i].history.best_dev_acc > results[best].history.best_dev_acc) best = i;
  }
  out.best_point = specs[best].point;

  specs.clear();
  for (double r : stage2) specs.push_back({2, out.best_point, r});
  results = run_cells(base, train_config, specs, data, jobs);
  best = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    out.cells.push_back({2, specs[i].point, specs[i].ratio, results[i].history});
    if (results[i].history.best_dev_acc > results[best].history.best_dev_acc) best = i;
  }
  out.best_ratio = specs[best].ratio;
  out.best_history = results[best].history;
  out.best_model = std::move(results[best].model);
  return out;
}

namespace {

std::optional<double> mean_of(const std::vector<SeedRun>& runs,
                              std::optional<double> MetricsRow::*field) {
  double sum = 0.0;
  for (const auto& r : runs) {
    if (!(r.metrics.*field)) return std::nullopt;
    sum += *(r.metrics.*field);
  }
  return sum / static_cast<double>(runs.size());
}

double mean_of(const std::vector<SeedRun>& runs, double MetricsRow::*field) {
  double sum = 0.0;
  for (const auto& r : runs) sum += r.metrics.*field;
  return sum / static_cast<double>(runs.size());
}

}  // namespace

MultiSeedResult multi_seed_run(const ModelConfig& model_config, const TrainConfig& train_config,
                               const FeatureSpace& space, const TrainData& data,
                               const Corpus& test, int n) {
  if (n < 1) throw Error("multi-seed run needs n >= 1");
  MultiSeedResult out;
  for (int k = 0; k < n; ++k) {
    TrainConfig tc = train_config;
    tc.seed = train_config.seed + static_cast<std::uint64_t>(k);
    TrainResult trained = train_model(model_config, tc, data);
    Checkpoint cp{space, std::move(trained.model), {}};
    out.runs.push_back({tc.seed, evaluate_model(cp, test), std::move(trained.history)});
  }
  out.mean = out.runs.front().metrics;
  out.mean.overall_acc = mean_of(out.runs, &MetricsRow::overall_acc);
  out.mean.seg_ood_acc = mean_of(out.runs, &MetricsRow::seg_ood_acc);
  out.mean.ood_acc = mean_of(out.runs, &MetricsRow::ood_acc);
  out.mean.ood_f1 = mean_of(out.runs, &MetricsRow::ood_f1);
  out.mean.ood_precision = mean_of(out.runs, &MetricsRow::ood_precision);
  out.mean.ood_recall = mean_of(out.runs, &MetricsRow::ood_recall);
  return out;
}

}  // namespace oodhcn
