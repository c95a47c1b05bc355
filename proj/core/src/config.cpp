#include "oodhcn/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "oodhcn/corpus.hpp"
#include "oodhcn/error.hpp"

namespace oodhcn {

namespace {

enum class Kind { kInt, kDouble, kRate, kSeed, kText, kAutoInt, kAutoRate, kVariant, kSelection };

struct KeySpec {
  std::string_view key;
  Kind kind;
  std::string_view default_value;
};

constexpr KeySpec kKeys[] = {
    {"model.variant", Kind::kVariant, "hcn"},
    {"model.embedding_size", Kind::kAutoInt, "auto"},
    {"model.latent_size", Kind::kAutoInt, "auto"},
    {"model.dialog_hidden", Kind::kInt, "128"},
    {"model.predictor_hidden", Kind::kInt, "128"},
    {"model.embeddings", Kind::kText, ""},
    {"train.learning_rate", Kind::kDouble, "0.001"},
    {"train.patience", Kind::kInt, "20"},
    {"train.max_epochs", Kind::kInt, "200"},
    {"train.batch_size", Kind::kInt, "1"},
    {"train.word_dropout", Kind::kRate, "0.2"},
    {"train.clip_norm", Kind::kDouble, "5"},
    {"train.seed", Kind::kSeed, "1"},
    {"train.selection", Kind::kSelection, "td"},
    {"turn_dropout.ratio", Kind::kAutoRate, "auto"},
    {"turn_dropout.unk_prob", Kind::kRate, "0.5"},
    {"augment.p_ood_start", Kind::kRate, "0.2"},
    {"augment.p_ood_cont", Kind::kRate, "0.4"},
    {"augment.seed", Kind::kSeed, "1"},
    {"augment.independent_segment_prob", Kind::kRate, "0"},
    {"corpus.fallback_utterance", Kind::kText, ""},
    {"corpus.lexicon", Kind::kText, ""},
    {"toy.n_dialogs", Kind::kInt, "200"},
    {"toy.n_actions", Kind::kInt, "20"},
    {"toy.seed", Kind::kSeed, "1"},
    {"pipeline.root_seed", Kind::kSeed, "1"},
    {"pipeline.models", Kind::kText, "HCN,TD-HCN"},
};

const KeySpec* find_spec(std::string_view key) {
  for (const auto& s : kKeys) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const std::size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

bool parse_int(std::string_view s, long long& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  std::string copy(s);
  std::size_t used = 0;
  try {
    out = std::stod(copy, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == copy.size() && std::isfinite(out);
}

void check_value(const KeySpec& spec, std::string_view value) {
  long long i = 0;
  double d = 0.0;
  std::uint64_t u = 0;
  bool ok = true;
  switch (spec.kind) {
    case Kind::kInt: ok = parse_int(value, i); break;
    case Kind::kDouble: ok = parse_double(value, d); break;
    case Kind::kRate: ok = parse_double(value, d) && d >= 0.0 && d <= 1.0; break;
    case Kind::kSeed: ok = parse_u64(value, u); break;
    case Kind::kText: break;
    case Kind::kAutoInt: ok = value == "auto" || parse_int(value, i); break;
    case Kind::kAutoRate:
      ok = value == "auto" || (parse_double(value, d) && d >= 0.0 && d <= 1.0);
      break;
    case Kind::kVariant:
      try {
        parse_variant(value);
      } catch (const Error&) {
        ok = false;
      }
      break;
    case Kind::kSelection:
      try {
        parse_dev_selection(value);
      } catch (const Error&) {
        ok = false;
      }
      break;
  }
  if (!ok) {
    throw Error("invalid value '" + std::string(value) + "' for config key '" +
                std::string(spec.key) + "'");
  }
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& s : kKeys) values_.emplace(std::string(s.key), std::string(s.default_value));
}

std::vector<std::string> RunConfig::known_keys() {
  std::vector<std::string> out;
  for (const auto& s : kKeys) out.emplace_back(s.key);
  return out;
}

bool RunConfig::is_known(std::string_view key) { return find_spec(key) != nullptr; }

void RunConfig::set(std::string_view key, std::string_view value) {
  const KeySpec* spec = find_spec(key);
  if (!spec) throw Error("unknown config key '" + std::string(key) + "'");
  value = trim(value);
  check_value(*spec, value);
  values_.find(key)->second = std::string(value);
}

void RunConfig::merge_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ParseError(line_no, "malformed section header");
      section = std::string(trim(s.substr(1, s.size() - 2)));
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    std::string key(trim(s.substr(0, eq)));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    try {
      set(key, s.substr(eq + 1));
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
}

void RunConfig::merge_file(const std::string& path) { merge_text(read_text_file(path)); }

const std::string& RunConfig::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error("unknown config key '" + std::string(key) + "'");
  return it->second;
}

int RunConfig::get_int(std::string_view key) const {
  long long v = 0;
  if (!parse_int(get(key), v)) throw Error("config key '" + std::string(key) + "' is not an integer");
  return static_cast<int>(v);
}

double RunConfig::get_double(std::string_view key) const {
  double v = 0.0;
  if (!parse_double(get(key), v)) throw Error("config key '" + std::string(key) + "' is not a number");
  return v;
}

std::uint64_t RunConfig::get_seed(std::string_view key) const {
  std::uint64_t v = 0;
  if (!parse_u64(get(key), v)) throw Error("config key '" + std::string(key) + "' is not a seed");
  return v;
}

Variant RunConfig::variant() const { return parse_variant(get("model.variant")); }

ModelConfig RunConfig::model_config() const {
  ModelConfig mc = ModelConfig::defaults(variant());
  if (get("model.embedding_size") != "auto") mc.embedding_size = get_int("model.embedding_size");
  if (get("model.latent_size") != "auto") mc.latent_size = get_int("model.latent_size");
  mc.dialog_hidden = get_int("model.dialog_hidden");
  mc.predictor_hidden = get_int("model.predictor_hidden");
  mc.embeddings_path = get("model.embeddings");
  mc.validate();
  return mc;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig tc;
  tc.learning_rate = get_double("train.learning_rate");
  tc.patience = get_int("train.patience");
  tc.max_epochs = get_int("train.max_epochs");
  tc.batch_size = get_int("train.batch_size");
  tc.word_dropout = get_double("train.word_dropout");
  tc.clip_norm = get_double("train.clip_norm");
  tc.seed = get_seed("train.seed");
  tc.selection = parse_dev_selection(get("train.selection"));
  tc.turn_dropout_ratio = get("turn_dropout.ratio") == "auto"
                              ? default_turn_dropout_ratio(variant())
                              : get_double("turn_dropout.ratio");
  tc.turn_dropout_unk_prob = get_double("turn_dropout.unk_prob");
  tc.validate();
  return tc;
}

AugmentationConfig RunConfig::augmentation_config() const {
  AugmentationConfig ac;
  ac.p_ood_start = get_double("augment.p_ood_start");
  ac.p_ood_cont = get_double("augment.p_ood_cont");
  ac.seed = get_seed("augment.seed");
  ac.independent_segment_prob = get_double("augment.independent_segment_prob");
  ac.validate();
  return ac;
}

std::string RunConfig::fallback_utterance() const {
  const std::string& v = get("corpus.fallback_utterance");
  return v.empty() ? std::string(kDefaultFallbackUtterance) : v;
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : kKeys) out.emplace_back(std::string(s.key), get(s.key));
  return out;
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : echo()) out << k << " = " << v << '\n';
  return out.str();
}

}  // namespace oodhcn
