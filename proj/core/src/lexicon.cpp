#include "oodhcn/lexicon.hpp"

#include <algorithm>
#include <set>

#include "oodhcn/error.hpp"
#include "oodhcn/rng.hpp"

namespace oodhcn {

namespace {

bool looks_like_slot_token(const std::string& token) {
  return token.size() >= 2 && token.front() == '<' && token.back() == '>';
}

std::string join_range(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

void Lexicon::add(std::string_view slot_type, std::string_view value) {
  if (slot_type.empty()) throw Error("lexicon slot type must be non-empty");
  const auto tokens = tokenize(value);
  if (is_silence(tokens)) throw Error("lexicon value for slot '" + std::string(slot_type) + "' is empty");
  for (const auto& t : tokens) {
    if (looks_like_slot_token(t)) throw Error("lexicon value '" + std::string(value) + "' looks like a slot token");
  }
  std::string key = join_tokens(tokens);
  auto [it, inserted] = value_to_slot_.emplace(key, std::string(slot_type));
  if (!inserted) {
    if (it->second != slot_type) {
      throw Error("lexicon value '" + key + "' bound to both '" + it->second + "' and '" +
                  std::string(slot_type) + "'");
    }
    return;
  }
  entries_.emplace_back(std::string(slot_type), std::move(key));
  max_value_tokens_ = std::max(max_value_tokens_, tokens.size());
}

std::optional<std::string> Lexicon::slot_of(std::string_view value) const {
  auto it = value_to_slot_.find(join_tokens(tokenize(value)));
  if (it == value_to_slot_.end()) return std::nullopt;
  return it->second;
}

std::vector<Lexicon::Match> Lexicon::scan(const std::vector<std::string>& tokens) const {
  std::vector<Match> matches;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t longest = std::min(max_value_tokens_, tokens.size() - i);
    bool hit = false;
    for (std::size_t len = longest; len >= 1; --len) {
      auto it = value_to_slot_.find(join_range(tokens, i, i + len));
      if (it != value_to_slot_.end()) {
        matches.push_back(Match{i, i + len, it->second});
        i += len;
        hit = true;
        break;
      }
    }
    if (!hit) ++i;
  }
  return matches;
}

std::uint64_t Lexicon::hash() const {
  std::uint64_t h = fnv1a64("lexicon");
  for (const auto& [slot, value] : entries_) {
    h = fnv1a64(slot, h);
    h = fnv1a64(std::string_view("\t"), h);
    h = fnv1a64(value, h);
    h = fnv1a64(std::string_view("\n"), h);
  }
  return h;
}

Lexicon Lexicon::parse(std::string_view text) {
  Lexicon lexicon;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw ParseError(line_no, "lexicon line must be 'slot_type<TAB>value'");
    }
    try {
      lexicon.add(line.substr(0, tab), line.substr(tab + 1));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return lexicon;
}

std::string Lexicon::write() const {
  std::string out;
  for (const auto& [slot, value] : entries_) {
    out += slot;
    out += '\t';
    out += value;
    out += '\n';
  }
  return out;
}

Lexicon read_lexicon_file(const std::string& path) {
  try {
    return Lexicon::parse(read_text_file(path));
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

Lexicon lexicon_from_kb_facts(const Corpus& corpus) {
  Lexicon lexicon;
  for (const Dialog& d : corpus) {
    for (const Turn& t : d.turns) {
      for (const std::string& fact : t.kb_facts) {
        const auto parts = tokenize(fact);
        if (parts.size() < 3 || parts[1].rfind("r_", 0) != 0) continue;
        std::string attr = parts[1].substr(2);
        if (attr == "location") attr = "area";
        if (attr == "price") attr = "pricerange";
        const std::string value = join_tokens({parts.begin() + 2, parts.end()});
        // First binding wins; real KBs occasionally reuse a string across attributes.
        for (const auto& [slot, v] : {std::pair{std::string("name"), parts[0]}, std::pair{attr, value}}) {
          const auto bound = lexicon.slot_of(v);
          if (!bound) lexicon.add(slot, v);
        }
      }
    }
  }
  return lexicon;
}

std::string slot_token(std::string_view slot_type) {
  return "<" + std::string(slot_type) + ">";
}

std::vector<std::string> delexicalize_tokens(const std::vector<std::string>& tokens,
                                             const Lexicon& lexicon) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  std::size_t i = 0;
  for (const auto& m : lexicon.scan(tokens)) {
    for (; i < m.begin; ++i) out.push_back(tokens[i]);
    out.push_back(slot_token(m.slot_type));
    i = m.end;
  }
  for (; i < tokens.size(); ++i) out.push_back(tokens[i]);
  return out;
}

std::string delexicalize(std::string_view utterance, const Lexicon& lexicon) {
  return join_tokens(delexicalize_tokens(tokenize(utterance), lexicon));
}

bool is_api_call(std::string_view utterance_or_template) {
  return utterance_or_template.rfind("api_call", 0) == 0;
}

ActionSet::ActionSet(std::vector<std::string> templates, const std::string& fallback_template) {
  templates.push_back(fallback_template);
  std::sort(templates.begin(), templates.end());
  templates.erase(std::unique(templates.begin(), templates.end()), templates.end());
  templates_ = std::move(templates);
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    index_.emplace(templates_[i], static_cast<ActionId>(i));
  }
  fallback_id_ = index_.at(fallback_template);
}

std::optional<ActionId> ActionSet::find(std::string_view tmpl) const {
  auto it = index_.find(std::string(tmpl));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t ActionSet::hash() const {
  std::uint64_t h = fnv1a64("actions");
  for (const auto& t : templates_) {
    h = fnv1a64(t, h);
    h = fnv1a64(std::string_view("\n"), h);
  }
  return fnv1a64(std::to_string(fallback_id_), h);
}

ActionSet extract_action_set(const Corpus& corpus, const Lexicon& lexicon,
                             std::string_view fallback_utterance) {
  if (corpus.empty()) throw Error("cannot extract an action set from an empty corpus");
  std::set<std::string> templates;
  for (const Dialog& d : corpus) {
    for (const Turn& t : d.turns) templates.insert(delexicalize(t.system_utterance, lexicon));
  }
  return ActionSet(std::vector<std::string>(templates.begin(), templates.end()),
                   delexicalize(fallback_utterance, lexicon));
}

void assign_actions(Corpus& corpus, const ActionSet& actions, const Lexicon& lexicon,
                    UnknownActionPolicy policy) {
  for (Dialog& d : corpus) {
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      Turn& turn = d.turns[t];
      const std::string tmpl = delexicalize(turn.system_utterance, lexicon);
      if (auto id = actions.find(tmpl)) {
        turn.system_action = *id;
      } else if (policy == UnknownActionPolicy::kMarkUnknown) {
        turn.system_action = kNoAction;
      } else {
        throw Error("dialog " + std::to_string(d.id) + " turn " + std::to_string(t) +
                    ": system template '" + tmpl + "' is not in the action set");
      }
    }
  }
}

}  // namespace oodhcn
