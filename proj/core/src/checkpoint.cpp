#include "oodhcn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "oodhcn/error.hpp"

namespace oodhcn {

namespace {

constexpr std::string_view kMagic = "oodhcn-checkpoint";

std::string hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << v;
  return out.str();
}

void put_f32(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int shift = 0; shift < 32; shift += 8) out += static_cast<char>((bits >> shift) & 0xffu);
}

float get_f32(std::string_view bytes, std::size_t offset) {
  std::uint32_t bits = 0;
  for (int k = 0; k < 4; ++k) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + k])) << (8 * k);
  }
  return std::bit_cast<float>(bits);
}

// Splits "key rest-of-line" at the first space or TAB.
std::pair<std::string_view, std::string_view> split_key(std::string_view line) {
  const std::size_t sep = line.find_first_of(" \t");
  if (sep == std::string_view::npos) return {line, {}};
  return {line.substr(0, sep), line.substr(sep + 1)};
}

long to_long(std::string_view text, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const long v = std::stol(std::string(text), &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError(line_no, "expected an integer, got '" + std::string(text) + "'");
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& cp) {
  const ModelConfig& mc = cp.model.config();
  std::string out;
  auto line = [&out](std::string_view key, const std::string& value) {
    out += key;
    out += ' ';
    out += value;
    out += '\n';
  };
  line(kMagic, std::to_string(kCheckpointFormatVersion));
  line("variant", std::string(to_string(mc.variant)));
  line("embedding_size", std::to_string(mc.embedding_size));
  line("latent_size", std::to_string(mc.latent_size));
  line("dialog_hidden", std::to_string(mc.dialog_hidden));
  line("predictor_hidden", std::to_string(mc.predictor_hidden));
  line("vocab_size", std::to_string(cp.space.vocab.size()));
  line("vocab_hash", hex(cp.space.vocab.hash()));
  line("action_count", std::to_string(cp.space.actions.size()));
  line("action_hash", hex(cp.space.actions.hash()));
  line("fallback_id", std::to_string(cp.space.actions.fallback_id()));
  for (const auto& [key, value] : cp.config_echo) line("config", key + "\t" + value);
  for (const auto& token : cp.space.vocab.tokens()) line("token", token);
  for (const auto& tmpl : cp.space.actions.templates()) line("action", tmpl);
  for (const auto& [slot, value] : cp.space.lexicon.entries()) line("lexicon", slot + "\t" + value);
  for (const nn::Parameter* p : cp.model.parameters()) {
    line("param", p->name + " " + std::to_string(p->value.rows()) + " " +
                      std::to_string(p->value.cols()) + " " + (p->trainable ? "1" : "0"));
  }
  out += "data\n";
  for (const nn::Parameter* p : cp.model.parameters()) {
    const double* values = p->value.data();
    for (Eigen::Index k = 0; k < p->value.size(); ++k) put_f32(out, values[k]);
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  ModelConfig mc;
  long vocab_size = -1;
  long action_count = -1;
  long fallback_id = -1;
  std::string vocab_hash, action_hash;
  std::vector<std::string> tokens, templates;
  std::vector<std::pair<std::string, std::string>> lexicon_entries, echo;
  struct ParamHeader {
    std::string name;
    long rows, cols;
    bool trainable;
  };
  std::vector<ParamHeader> headers;

  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool saw_data = false;
  while (pos < bytes.size()) {
    const std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) throw ParseError(line_no + 1, "truncated checkpoint header");
    const std::string_view line = bytes.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line == "data") {
      saw_data = true;
      break;
    }
    const auto [key, rest] = split_key(line);
    auto tab_pair = [&](std::string_view text) {
      const std::size_t tab = text.find('\t');
      if (tab == std::string_view::npos) throw ParseError(line_no, "expected a TAB-separated pair");
      return std::pair<std::string, std::string>(text.substr(0, tab), text.substr(tab + 1));
    };
    if (line_no == 1) {
      if (key != kMagic) throw ParseError(1, "not an oodhcn checkpoint");
      if (to_long(rest, 1) != kCheckpointFormatVersion) {
        throw ParseError(1, "unsupported checkpoint format version " + std::string(rest));
      }
    } else if (key == "variant") {
      mc.variant = parse_variant(rest);
    } else if (key == "embedding_size") {
      mc.embedding_size = static_cast<int>(to_long(rest, line_no));
    } else if (key == "latent_size") {
      mc.latent_size = static_cast<int>(to_long(rest, line_no));
    } else if (key == "dialog_hidden") {
      mc.dialog_hidden = static_cast<int>(to_long(rest, line_no));
    } else if (key == "predictor_hidden") {
      mc.predictor_hidden = static_cast<int>(to_long(rest, line_no));
    } else if (key == "vocab_size") {
      vocab_size = to_long(rest, line_no);
    } else if (key == "vocab_hash") {
      vocab_hash = std::string(rest);
    } else if (key == "action_count") {
      action_count = to_long(rest, line_no);
    } else if (key == "action_hash") {
      action_hash = std::string(rest);
    } else if (key == "fallback_id") {
      fallback_id = to_long(rest, line_no);
    } else if (key == "config") {
      echo.push_back(tab_pair(rest));
    } else if (key == "token") {
      tokens.emplace_back(rest);
    } else if (key == "action") {
      templates.emplace_back(rest);
    } else if (key == "lexicon") {
      lexicon_entries.push_back(tab_pair(rest));
    } else if (key == "param") {
      std::istringstream in{std::string(rest)};
      ParamHeader h;
      int trainable = 0;
      if (!(in >> h.name >> h.rows >> h.cols >> trainable)) {
        throw ParseError(line_no, "malformed param line");
      }
      h.trainable = trainable != 0;
      headers.push_back(std::move(h));
    } else {
      throw ParseError(line_no, "unknown checkpoint header key '" + std::string(key) + "'");
    }
  }
  if (!saw_data) throw Error("checkpoint has no data section");
  if (static_cast<long>(tokens.size()) != vocab_size) throw Error("checkpoint vocabulary size mismatch");
  if (static_cast<long>(templates.size()) != action_count) throw Error("checkpoint action count mismatch");
  if (fallback_id < 0 || fallback_id >= action_count) throw Error("checkpoint fallback id out of range");

  Checkpoint cp;
  cp.config_echo = std::move(echo);
  cp.space.vocab = Vocabulary::from_tokens(tokens);
  if (cp.space.vocab.tokens() != tokens || hex(cp.space.vocab.hash()) != vocab_hash) {
    throw Error("checkpoint vocabulary does not match its hash");
  }
  const std::string fallback_template = templates[static_cast<std::size_t>(fallback_id)];
  cp.space.actions = ActionSet(templates, fallback_template);
  if (hex(cp.space.actions.hash()) != action_hash) throw Error("checkpoint action set does not match its hash");
  for (const auto& [slot, value] : lexicon_entries) cp.space.lexicon.add(slot, value);

  cp.model = DialogModel(mc, static_cast<std::size_t>(vocab_size),
                         static_cast<std::size_t>(action_count), 0);
  auto params = cp.model.parameters();
  if (params.size() != headers.size()) throw Error("checkpoint parameter count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    nn::Parameter& p = *params[k];
    const ParamHeader& h = headers[k];
    if (p.name != h.name || p.value.rows() != h.rows || p.value.cols() != h.cols) {
      throw Error("checkpoint parameter '" + h.name + "' does not match the model layout");
    }
    p.trainable = h.trainable;
    const std::size_t count = static_cast<std::size_t>(p.value.size());
    if (pos + 4 * count > bytes.size()) throw Error("checkpoint data section is truncated");
    double* values = p.value.data();
    for (std::size_t i = 0; i < count; ++i) values[i] = get_f32(bytes, pos + 4 * i);
    pos += 4 * count;
  }
  if (pos != bytes.size()) throw Error("checkpoint has trailing bytes");
  return cp;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  write_text_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) {
  try {
    return deserialize_checkpoint(read_text_file(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

void quantize_to_float32(DialogModel& model) {
  for (nn::Parameter* p : model.parameters()) {
    p->value = p->value.cast<float>().cast<double>();
  }
}

std::vector<ActionId> predict_dialog(const Checkpoint& checkpoint, const FeaturizedDialog& dialog) {
  if (dialog.vocab_hash != checkpoint.space.vocab.hash() ||
      dialog.action_hash != checkpoint.space.actions.hash()) {
    throw Error("features of dialog " + std::to_string(dialog.dialog_id) +
                " were built against a different vocabulary or action set than the checkpoint");
  }
  return checkpoint.model.predict(dialog);
}

}  // namespace oodhcn
