#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace oodhcn {

using TokenId = std::int32_t;
using ActionId = std::int32_t;

// Action id of a turn whose system side has not been mapped to an ActionSet.
inline constexpr ActionId kNoAction = -1;

inline constexpr std::string_view kSilenceToken = "<SILENCE>";
inline constexpr std::string_view kUnkToken = "<UNK>";

enum class OodLabel : std::uint8_t { kInd, kTurnOod, kSegmentOod };

std::string_view to_string(OodLabel label);
OodLabel parse_ood_label(std::string_view text);

struct Turn {
  std::vector<std::string> user_tokens;
  ActionId system_action = kNoAction;
  std::string system_utterance;
  OodLabel ood_label = OodLabel::kInd;
  // KB fact lines that appeared in the transcript right before this exchange.
  std::vector<std::string> kb_facts;

  bool operator==(const Turn&) const = default;
};

struct Dialog {
  int id = 0;
  std::vector<Turn> turns;

  bool operator==(const Dialog&) const = default;
};

using Corpus = std::vector<Dialog>;

// Lowercases ASCII, splits on whitespace and peels punctuation (, . ? ! ; : ")
// off token edges. Any spelling of <silence> maps to kSilenceToken and an
// utterance with no tokens becomes {kSilenceToken}.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);
bool is_silence(const std::vector<std::string>& tokens);

// Transcript format: "N user<TAB>system" exchanges, "N fact" KB lines, one
// blank line after every dialog. Dialog ids are assigned 1, 2, ... in file
// order. Throws ParseError carrying the 1-based line number.
Corpus parse_dialogs(std::string_view text);
std::string write_dialogs(const Corpus& corpus);

Corpus read_corpus_file(const std::string& path);
void write_corpus_file(const std::string& path, const Corpus& corpus);

// Sidecar labels: "dialog_id<TAB>turn_idx<TAB>LABEL", turn_idx 0-based.
std::string write_labels(const Corpus& corpus);
// Every turn must be covered exactly once.
void apply_labels(Corpus& corpus, std::string_view labels_text);

std::size_t count_turns(const Corpus& corpus);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

}  // namespace oodhcn
