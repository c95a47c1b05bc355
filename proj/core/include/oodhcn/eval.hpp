#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oodhcn/checkpoint.hpp"
#include "oodhcn/corpus.hpp"

namespace oodhcn {

enum class Subset { kAll, kSegmentOod, kTurnOod };

// Fraction of turns in `subset` whose prediction equals the gold action;
// nullopt when the subset is empty.
std::optional<double> per_utterance_accuracy(std::span<const ActionId> predictions,
                                             std::span<const ActionId> golds,
                                             std::span<const OodLabel> labels, Subset subset);

// Fallback prediction as an OOD detector: a prediction is positive when it is
// the fallback action, a gold turn is positive when it is labeled TURN_OOD.
struct OodScores {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the corresponding denominator was zero (the value is then 0).
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

OodScores ood_f1(std::span<const ActionId> predictions, std::span<const OodLabel> labels,
                 ActionId fallback);

struct MetricsRow {
  double overall_acc = 0.0;
  std::optional<double> seg_ood_acc;
  std::optional<double> ood_acc;
  double ood_f1 = 0.0;
  double ood_precision = 0.0;
  double ood_recall = 0.0;
  std::size_t turns = 0;
  std::size_t ind_turns = 0;
  std::size_t segment_ood_turns = 0;
  std::size_t turn_ood_turns = 0;
  std::size_t correct = 0;

  bool operator==(const MetricsRow&) const = default;
};

MetricsRow compute_metrics(std::span<const ActionId> predictions, std::span<const ActionId> golds,
                           std::span<const OodLabel> labels, ActionId fallback);

// Predicts every dialog of `test` (labels taken from its turns) with the
// checkpoint. Gold templates the checkpoint has never seen count as errors.
MetricsRow evaluate_model(const Checkpoint& checkpoint, const Corpus& test);

inline constexpr int kReportFormatVersion = 1;

struct ReportRecord {
  std::string model;
  MetricsRow augmented;              // on the OOD-augmented test set
  std::optional<MetricsRow> clean;   // on the original test set, when given
  std::vector<std::pair<std::string, std::string>> config_echo;

  bool operator==(const ReportRecord&) const = default;
};

// Flat "key = value" text; absent metrics are written as NA.
std::string write_report_record(const ReportRecord& record);
ReportRecord parse_report_record(std::string_view text);

enum class TableFormat { kText, kCsv };

// One row per record: clean overall accuracy, then overall, segment-OOD and
// OOD accuracy and OOD F1 on the augmented set.
std::string render_table(std::span<const ReportRecord> records, TableFormat format);

}  // namespace oodhcn
