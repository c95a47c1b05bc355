#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oodhcn/features.hpp"
#include "oodhcn/model.hpp"

namespace oodhcn {

inline constexpr int kCheckpointFormatVersion = 1;

// A trained model together with the feature space it was trained against and
// the resolved run configuration that produced it.
struct Checkpoint {
  FeatureSpace space;
  DialogModel model;
  std::vector<std::pair<std::string, std::string>> config_echo;
};

// Layout: text header lines (format version, model config, vocabulary and
// action-set hashes, the vocabulary, action templates, lexicon, config echo
// and one "param name rows cols trainable" line per tensor), a "data" line,
// then every tensor as little-endian float32 in declaration order
// (column-major).
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

// Rounds every parameter to float32, i.e. to exactly what a checkpoint stores.
void quantize_to_float32(DialogModel& model);

// Greedy per-turn actions; throws if the features were built against a
// different vocabulary or action set than the checkpoint's.
std::vector<ActionId> predict_dialog(const Checkpoint& checkpoint, const FeaturizedDialog& dialog);

}  // namespace oodhcn
