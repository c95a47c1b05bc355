#pragma once

#include <string>
#include <vector>

#include "oodhcn/augment.hpp"
#include "oodhcn/config.hpp"
#include "oodhcn/eval.hpp"

namespace oodhcn {

struct PipelineModel {
  std::string name;  // "HCN", "TD-VHCN", ...
  Variant variant = Variant::kHcn;
  bool turn_dropout = false;
};

// Comma-separated names; a "TD-" prefix enables turn dropout.
std::vector<PipelineModel> parse_pipeline_models(std::string_view text);

struct PipelineResult {
  AugmentStats augment_stats;
  std::vector<ReportRecord> records;
  std::string table;
};

// Toy domain -> OOD-augmented test set -> one training run per model ->
// evaluation from the saved checkpoints -> report table. Stage seeds come
// from pipeline.root_seed. Every artifact lands in `out_dir`:
//   train.txt dev.txt test.txt lexicon.tsv ood_pool.txt segments.txt
//   test_ood.txt test_ood.labels augment_stats.txt
//   <model>.ckpt <model>.history.tsv <model>.report
//   report.txt report.csv config.txt
// Failures are rethrown as Error prefixed with the stage name.
PipelineResult run_pipeline(const RunConfig& config, const std::string& out_dir);

}  // namespace oodhcn
