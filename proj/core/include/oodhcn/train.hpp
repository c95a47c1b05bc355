#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oodhcn/eval.hpp"
#include "oodhcn/features.hpp"
#include "oodhcn/model.hpp"
#include "oodhcn/rng.hpp"
#include "oodhcn/vocabulary.hpp"

namespace oodhcn {

enum class DevSelection {
  kTurnDropout,  // dev set with seed-fixed turn dropout at the training ratio
  kPlain,        // IND dev set as is
};

std::string_view to_string(DevSelection selection);
DevSelection parse_dev_selection(std::string_view text);

struct TrainConfig {
  double learning_rate = 0.001;
  int patience = 20;
  double word_dropout = 0.2;
  double turn_dropout_ratio = 0.0;
  double turn_dropout_unk_prob = 0.5;
  int max_epochs = 200;
  int batch_size = 1;  // dialogs per optimizer step
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  DevSelection selection = DevSelection::kTurnDropout;

  void validate() const;
};

// Turn-dropout ratio tuned per variant: HCN 0.4, HHCN 0.6, VHCN 0.3.
double default_turn_dropout_ratio(Variant variant);

// Each token independently becomes UNK with probability p.
std::vector<TokenId> word_dropout(std::span<const TokenId> tokens, double p, Rng& rng);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean per scored turn
  double dev_acc = 0.0;
  double kl_mean = 0.0;     // mean per-turn KL, 0 for non-variational models
  bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_dev_acc = 0.0;
  double wall_seconds = 0.0;

  // Tab-separated, header line then one line per epoch.
  std::string to_text() const;
};

struct TrainResult {
  DialogModel model;  // best dev epoch, rounded to float32
  TrainHistory history;
};

struct TrainData {
  std::span<const FeaturizedDialog> train;
  std::span<const FeaturizedDialog> dev;
  std::size_t vocab_size = 0;
  std::size_t action_count = 0;
  ActionId fallback = kNoAction;
  const EmbeddingTable* embeddings = nullptr;
};

TrainResult train_model(const ModelConfig& model_config, const TrainConfig& train_config,
                        const TrainData& data);

// Accuracy of greedy predictions over every turn of `dialogs`.
double dialog_accuracy(const DialogModel& model, std::span<const FeaturizedDialog> dialogs);

struct Stage1Point {
  int embedding_size = 0;
  int latent_size = 0;
  bool operator==(const Stage1Point&) const = default;
};

std::vector<double> default_stage2_grid();

struct GridCell {
  int stage = 1;
  Stage1Point point;
  double turn_dropout_ratio = 0.0;
  TrainHistory history;
};

struct GridSearchResult {
  Stage1Point best_point;
  double best_ratio = 0.0;
  std::vector<GridCell> cells;
  DialogModel best_model;
  TrainHistory best_history;

  // One line per cell: stage, embedding, latent, ratio, best epoch, dev accuracy.
  std::string to_text() const;
};

// Stage 1 picks embedding/latent sizes with turn dropout off, stage 2 picks the
// turn-dropout ratio with those sizes fixed. Ties go to the smaller value.
// Cells run on up to `jobs` threads; results do not depend on `jobs`.
GridSearchResult grid_search(const ModelConfig& base, const TrainConfig& train_config,
                             std::vector<Stage1Point> stage1, std::vector<double> stage2,
                             const TrainData& data, int jobs = 1);

struct SeedRun {
  std::uint64_t seed = 0;
  MetricsRow metrics;
  TrainHistory history;
};

struct MultiSeedResult {
  std::vector<SeedRun> runs;
  MetricsRow mean;  // arithmetic mean of the metric fields; counts from the first run
};

// Trains with seeds seed+0 .. seed+n-1 and evaluates each on `test`.
MultiSeedResult multi_seed_run(const ModelConfig& model_config, const TrainConfig& train_config,
                               const FeatureSpace& space, const TrainData& data,
                               const Corpus& test, int n = 3);

}  // namespace oodhcn
