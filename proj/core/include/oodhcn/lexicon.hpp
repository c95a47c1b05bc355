#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "oodhcn/corpus.hpp"

namespace oodhcn {

// Slot-value lexicon. Values are stored tokenized (see tokenize()) and
// matched at the token level.
class Lexicon {
 public:
  struct Match {
    std::size_t begin = 0;
    std::size_t end = 0;  // one past the last matched token
    std::string slot_type;
  };

  // Throws on empty values, slot-token-shaped values ("<x>") and on a value
  // already bound to a different slot type.
  void add(std::string_view slot_type, std::string_view value);

  std::optional<std::string> slot_of(std::string_view value) const;

  // Leftmost-longest, non-overlapping matches scanning left to right.
  std::vector<Match> scan(const std::vector<std::string>& tokens) const;

  // (slot_type, value) pairs in insertion order.
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::uint64_t hash() const;

  // "slot_type<TAB>value" per line.
  static Lexicon parse(std::string_view text);
  std::string write() const;

 private:
  std::unordered_map<std::string, std::string> value_to_slot_;
  std::vector<std::pair<std::string, std::string>> entries_;
  std::size_t max_value_tokens_ = 0;
};

Lexicon read_lexicon_file(const std::string& path);

// Builds a lexicon from "name R_attr value" KB facts: the restaurant name under
// slot "name" and every value under its attribute (R_location -> area,
// R_price -> pricerange, R_x -> x otherwise).
Lexicon lexicon_from_kb_facts(const Corpus& corpus);

std::string slot_token(std::string_view slot_type);

// Replaces each leftmost-longest lexicon match by its slot token and returns
// the normalized (tokenized, space-joined) result.
std::string delexicalize(std::string_view utterance, const Lexicon& lexicon);
std::vector<std::string> delexicalize_tokens(const std::vector<std::string>& tokens,
                                             const Lexicon& lexicon);

bool is_api_call(std::string_view utterance_or_template);

// Discrete system actions: distinct delexicalized system utterances plus the
// fallback, ids assigned in lexicographic template order.
class ActionSet {
 public:
  ActionSet() = default;
  ActionSet(std::vector<std::string> templates, const std::string& fallback_template);

  std::optional<ActionId> find(std::string_view tmpl) const;
  const std::string& template_of(ActionId id) const {
    return templates_.at(static_cast<std::size_t>(id));
  }
  ActionId fallback_id() const { return fallback_id_; }
  std::size_t size() const { return templates_.size(); }
  const std::vector<std::string>& templates() const { return templates_; }
  std::uint64_t hash() const;

  bool operator==(const ActionSet& other) const {
    return templates_ == other.templates_ && fallback_id_ == other.fallback_id_;
  }

 private:
  std::vector<std::string> templates_;
  std::unordered_map<std::string, ActionId> index_;
  ActionId fallback_id_ = 0;
};

inline constexpr std::string_view kDefaultFallbackUtterance =
    "sorry i didn't catch that . could you please repeat ?";

// Throws on an empty corpus.
ActionSet extract_action_set(const Corpus& corpus, const Lexicon& lexicon,
                             std::string_view fallback_utterance);

enum class UnknownActionPolicy { kThrow, kMarkUnknown };

// Sets Turn::system_action from the delexicalized system utterance. Templates
// outside the set raise or become kNoAction depending on `policy`.
void assign_actions(Corpus& corpus, const ActionSet& actions, const Lexicon& lexicon,
                    UnknownActionPolicy policy = UnknownActionPolicy::kThrow);

}  // namespace oodhcn
