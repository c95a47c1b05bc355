#include "oodhcn/eval.hpp"

#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>

#include "oodhcn/error.hpp"

namespace oodhcn {

namespace {

void check_aligned(std::size_t a, std::size_t b, std::size_t c) {
  if (a != b || a != c) throw Error("predictions, golds and labels must be aligned");
}

bool in_subset(OodLabel label, Subset subset) {
  switch (subset) {
    case Subset::kAll: return true;
    case Subset::kSegmentOod: return label == OodLabel::kSegmentOod;
    case Subset::kTurnOod: return label == OodLabel::kTurnOod;
  }
  return false;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

std::string fmt3(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

}  // namespace

std::optional<double> per_utterance_accuracy(std::span<const ActionId> predictions,
                                             std::span<const ActionId> golds,
                                             std::span<const OodLabel> labels, Subset subset) {
  check_aligned(predictions.size(), golds.size(), labels.size());
  std::size_t total = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!in_subset(labels[i], subset)) continue;
    ++total;
    if (golds[i] != kNoAction && predictions[i] == golds[i]) ++correct;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

OodScores ood_f1(std::span<const ActionId> predictions, std::span<const OodLabel> labels,
                 ActionId fallback) {
  if (predictions.size() != labels.size()) throw Error("predictions and labels must be aligned");
  OodScores s;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool predicted = predictions[i] == fallback;
    const bool gold = labels[i] == OodLabel::kTurnOod;
    if (predicted && gold) ++s.true_positives;
    if (predicted && !gold) ++s.false_positives;
    if (!predicted && gold) ++s.false_negatives;
  }
  const auto tp = static_cast<double>(s.true_positives);
  const std::size_t predicted_pos = s.true_positives + s.false_positives;
  const std::size_t gold_pos = s.true_positives + s.false_negatives;
  s.precision_undefined = predicted_pos == 0;
  s.recall_undefined = gold_pos == 0;
  s.precision = s.precision_undefined ? 0.0 : tp / static_cast<double>(predicted_pos);
  s.recall = s.recall_undefined ? 0.0 : tp / static_cast<double>(gold_pos);
  s.f1_undefined = s.precision + s.recall == 0.0;
  s.f1 = s.f1_undefined ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

MetricsRow compute_metrics(std::span<const ActionId> predictions, std::span<const ActionId> golds,
                           std::span<const OodLabel> labels, ActionId fallback) {
  check_aligned(predictions.size(), golds.size(), labels.size());
  MetricsRow row;
  row.turns = predictions.size();
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    switch (labels[i]) {
      case OodLabel::kInd: ++row.ind_turns; break;
      case OodLabel::kSegmentOod: ++row.segment_ood_turns; break;
      case OodLabel::kTurnOod: ++row.turn_ood_turns; break;
    }
    if (golds[i] != kNoAction && predictions[i] == golds[i]) ++row.correct;
  }
  row.overall_acc = per_utterance_accuracy(predictions, golds, labels, Subset::kAll).value_or(0.0);
  row.seg_ood_acc = per_utterance_accuracy(predictions, golds, labels, Subset::kSegmentOod);
  row.ood_acc = per_utterance_accuracy(predictions, golds, labels, Subset::kTurnOod);
  const OodScores scores = ood_f1(predictions, labels, fallback);
  row.ood_f1 = scores.f1;
  row.ood_precision = scores.precision;
  row.ood_recall = scores.recall;
  return row;
}

MetricsRow evaluate_model(const Checkpoint& checkpoint, const Corpus& test) {
  std::vector<ActionId> predictions, golds;
  std::vector<OodLabel> labels;
  for (const Dialog& d : test) {
    const FeaturizedDialog f = checkpoint.space.featurize(d, UnknownActionPolicy::kMarkUnknown);
    const auto predicted = predict_dialog(checkpoint, f);
    predictions.insert(predictions.end(), predicted.begin(), predicted.end());
    for (const auto& t : f.turns) golds.push_back(t.target);
    labels.insert(labels.end(), f.labels.begin(), f.labels.end());
  }
  return compute_metrics(predictions, golds, labels, checkpoint.space.actions.fallback_id());
}

namespace {

void write_row(std::ostringstream& out, const std::string& prefix, const MetricsRow& m) {
  out << prefix << "overall_acc = " << fmt(m.overall_acc) << '\n'
      << prefix << "seg_ood_acc = " << fmt(m.seg_ood_acc) << '\n'
      << prefix << "ood_acc = " << fmt(m.ood_acc) << '\n'
      << prefix << "ood_f1 = " << fmt(m.ood_f1) << '\n'
      << prefix << "ood_precision = " << fmt(m.ood_precision) << '\n'
      << prefix << "ood_recall = " << fmt(m.ood_recall) << '\n'
      << prefix << "turns = " << m.turns << '\n'
      << prefix << "ind_turns = " << m.ind_turns << '\n'
      << prefix << "segment_ood_turns = " << m.segment_ood_turns << '\n'
      << prefix << "turn_ood_turns = " << m.turn_ood_turns << '\n'
      << prefix << "correct = " << m.correct << '\n';
}

std::optional<double> read_optional(const std::string& v) {
  if (v == "NA") return std::nullopt;
  return std::stod(v);
}

MetricsRow read_row(const std::map<std::string, std::string>& kv, const std::string& prefix) {
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(prefix + key);
    if (it == kv.end()) throw Error("report record is missing '" + prefix + key + "'");
    return it->second;
  };
  MetricsRow m;
  m.overall_acc = std::stod(get("overall_acc"));
  m.seg_ood_acc = read_optional(get("seg_ood_acc"));
  m.ood_acc = read_optional(get("ood_acc"));
  m.ood_f1 = std::stod(get("ood_f1"));
  m.ood_precision = std::stod(get("ood_precision"));
  m.ood_recall = std::stod(get("ood_recall"));
  m.turns = std::stoul(get("turns"));
  m.ind_turns = std::stoul(get("ind_turns"));
  m.segment_ood_turns = std::stoul(get("segment_ood_turns"));
  m.turn_ood_turns = std::stoul(get("turn_ood_turns"));
  m.correct = std::stoul(get("correct"));
  return m;
}

}  // namespace

std::string write_report_record(const ReportRecord& record) {
  std::ostringstream out;
  out << "# oodhcn-report " << kReportFormatVersion << '\n';
  out << "model = " << record.model << '\n';
  write_row(out, "", record.augmented);
  if (record.clean) write_row(out, "clean.", *record.clean);
  for (const auto& [key, value] : record.config_echo) out << "config." << key << " = " << value << '\n';
  return out.str();
}

ReportRecord parse_report_record(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::vector<std::pair<std::string, std::string>> echo;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find(" = ");
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 3);
    if (key.rfind("config.", 0) == 0) {
      echo.emplace_back(key.substr(7), value);
    } else {
      kv[key] = value;
    }
  }
  ReportRecord r;
  auto it = kv.find("model");
  if (it == kv.end()) throw Error("report record is missing 'model'");
  r.model = it->second;
  try {
    r.augmented = read_row(kv, "");
    if (kv.contains("clean.overall_acc")) r.clean = read_row(kv, "clean.");
  } catch (const std::invalid_argument&) {
    throw Error("report record has a non-numeric metric");
  }
  r.config_echo = std::move(echo);
  return r;
}

std::string render_table(std::span<const ReportRecord> records, TableFormat format) {
  std::ostringstream out;
  if (format == TableFormat::kCsv) {
    out << "model,clean_overall_acc,overall_acc,seg_ood_acc,ood_acc,ood_f1\n";
    for (const auto& r : records) {
      out << r.model << ','
          << (r.clean ? fmt3(r.clean->overall_acc) : std::string("NA")) << ','
          << fmt3(r.augmented.overall_acc) << ',' << fmt3(r.augmented.seg_ood_acc) << ','
          << fmt3(r.augmented.ood_acc) << ',' << fmt3(r.augmented.ood_f1) << '\n';
    }
    return out.str();
  }
  out << std::left << std::setw(12) << "Model" << std::right << std::setw(14) << "Clean acc."
      << std::setw(14) << "Overall acc." << std::setw(14) << "Seg. OOD acc." << std::setw(10)
      << "OOD acc." << std::setw(9) << "OOD F1" << '\n';
  for (const auto& r : records) {
    out << std::left << std::setw(12) << r.model << std::right << std::setw(14)
        << (r.clean ? fmt3(r.clean->overall_acc) : std::string("NA")) << std::setw(14)
        << fmt3(r.augmented.overall_acc) << std::setw(14) << fmt3(r.augmented.seg_ood_acc)
        << std::setw(10) << fmt3(r.augmented.ood_acc) << std::setw(9)
        << fmt3(r.augmented.ood_f1) << '\n';
  }
  return out.str();
}

}  // namespace oodhcn
