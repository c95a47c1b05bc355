#include "oodhcn/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "oodhcn/error.hpp"

namespace oodhcn {

namespace {

bool is_edge_punct(char c) {
  switch (c) {
    case ',': case '.': case '?': case '!': case ';': case ':': case '"':
      return true;
    default:
      return false;
  }
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Splits on '\n', dropping a single trailing '\r' per line.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

std::string_view to_string(OodLabel label) {
  switch (label) {
    case OodLabel::kInd: return "IND";
    case OodLabel::kTurnOod: return "TURN_OOD";
    case OodLabel::kSegmentOod: return "SEGMENT_OOD";
  }
  return "IND";
}

OodLabel parse_ood_label(std::string_view text) {
  if (text == "IND") return OodLabel::kInd;
  if (text == "TURN_OOD") return OodLabel::kTurnOod;
  if (text == "SEGMENT_OOD") return OodLabel::kSegmentOod;
  throw Error("unknown OOD label '" + std::string(text) + "'");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i) break;
    std::string word = lowercase(text.substr(i, j - i));
    i = j;

    if (word == "<silence>") {
      tokens.emplace_back(kSilenceToken);
      continue;
    }
    std::size_t lo = 0;
    std::size_t hi = word.size();
    while (lo < hi && is_edge_punct(word[lo])) ++lo;
    while (hi > lo && is_edge_punct(word[hi - 1])) --hi;
    for (std::size_t k = 0; k < lo; ++k) tokens.emplace_back(1, word[k]);
    if (hi > lo) tokens.push_back(word.substr(lo, hi - lo));
    for (std::size_t k = hi; k < word.size(); ++k) tokens.emplace_back(1, word[k]);
  }
  if (tokens.empty()) tokens.emplace_back(kSilenceToken);
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

bool is_silence(const std::vector<std::string>& tokens) {
  return tokens.size() == 1 && tokens.front() == kSilenceToken;
}

Corpus parse_dialogs(std::string_view text) {
  Corpus corpus;
  Dialog current;
  std::vector<std::string> pending_facts;
  std::size_t pending_facts_line = 0;

  auto close_dialog = [&]() {
    if (!pending_facts.empty()) {
      throw ParseError(pending_facts_line, "KB fact lines not followed by an exchange");
    }
    if (!current.turns.empty()) {
      current.id = static_cast<int>(corpus.size()) + 1;
      corpus.push_back(std::move(current));
      current = Dialog{};
    }
  };

  const auto lines = split_lines(text);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const std::size_t line_no = idx + 1;
    const std::string_view line = lines[idx];
    if (line.empty()) {
      close_dialog();
      continue;
    }
    std::size_t digits = 0;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
    if (digits == 0) throw ParseError(line_no, "missing line number");
    if (digits >= line.size() || line[digits] != ' ') {
      throw ParseError(line_no, "line number must be followed by a space");
    }
    const std::string_view body = line.substr(digits + 1);
    const auto fields = split_tabs(body);
    if (fields.size() == 1) {
      if (body.empty()) throw ParseError(line_no, "empty KB fact line");
      if (pending_facts.empty()) pending_facts_line = line_no;
      pending_facts.emplace_back(body);
      continue;
    }
    if (fields.size() != 2) throw ParseError(line_no, "exchange line must contain exactly one TAB");

    Turn turn;
    turn.user_tokens = tokenize(fields[0]);
    turn.system_utterance = std::string(fields[1]);
    turn.kb_facts = std::move(pending_facts);
    pending_facts.clear();
    current.turns.push_back(std::move(turn));
  }
  close_dialog();
  return corpus;
}

std::string write_dialogs(const Corpus& corpus) {
  std::string out;
  for (const Dialog& dialog : corpus) {
    int n = 1;
    for (const Turn& turn : dialog.turns) {
      for (const std::string& fact : turn.kb_facts) {
        out += std::to_string(n++);
        out += ' ';
        out += fact;
        out += '\n';
      }
      out += std::to_string(n++);
      out += ' ';
      out += join_tokens(turn.user_tokens);
      out += '\t';
      out += turn.system_utterance;
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("write failed for '" + path + "'");
}

Corpus read_corpus_file(const std::string& path) {
  try {
    return parse_dialogs(read_text_file(path));
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

void write_corpus_file(const std::string& path, const Corpus& corpus) {
  write_text_file(path, write_dialogs(corpus));
}

std::string write_labels(const Corpus& corpus) {
  std::string out;
  for (const Dialog& dialog : corpus) {
    for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
      out += std::to_string(dialog.id);
      out += '\t';
      out += std::to_string(t);
      out += '\t';
      out += to_string(dialog.turns[t].ood_label);
      out += '\n';
    }
  }
  return out;
}

void apply_labels(Corpus& corpus, std::string_view labels_text) {
  std::map<int, Dialog*> by_id;
  for (Dialog& dialog : corpus) by_id[dialog.id] = &dialog;
  std::map<std::pair<int, std::size_t>, bool> seen;

  const auto lines = split_lines(labels_text);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const std::size_t line_no = idx + 1;
    if (lines[idx].empty()) continue;
    const auto fields = split_tabs(lines[idx]);
    if (fields.size() != 3) throw ParseError(line_no, "label line needs 3 TAB-separated fields");
    int dialog_id = 0;
    std::size_t turn_idx = 0;
    try {
      dialog_id = std::stoi(std::string(fields[0]));
      turn_idx = static_cast<std::size_t>(std::stoul(std::string(fields[1])));
    } catch (const std::exception&) {
      throw ParseError(line_no, "non-numeric dialog id or turn index");
    }
    auto it = by_id.find(dialog_id);
    if (it == by_id.end()) throw ParseError(line_no, "unknown dialog id " + std::to_string(dialog_id));
    if (turn_idx >= it->second->turns.size()) throw ParseError(line_no, "turn index out of range");
    if (!seen.emplace(std::make_pair(dialog_id, turn_idx), true).second) {
      throw ParseError(line_no, "duplicate label");
    }
    try {
      it->second->turns[turn_idx].ood_label = parse_ood_label(fields[2]);
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (seen.size() != count_turns(corpus)) {
    throw Error("label file covers " + std::to_string(seen.size()) + " of " +
                std::to_string(count_turns(corpus)) + " turns");
  }
}

std::size_t count_turns(const Corpus& corpus) {
  std::size_t n = 0;
  for (const Dialog& d : corpus) n += d.turns.size();
  return n;
}

}  // namespace oodhcn
