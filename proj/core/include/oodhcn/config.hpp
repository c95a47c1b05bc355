#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oodhcn/augment.hpp"
#include "oodhcn/model.hpp"
#include "oodhcn/train.hpp"

namespace oodhcn {

// Flat, fully-resolved run configuration. Every known key always has a value
// (its default until set); setting an unknown key or an unparsable value
// throws. "auto" sizes and ratios resolve to the per-variant defaults.
class RunConfig {
 public:
  RunConfig();

  static std::vector<std::string> known_keys();
  static bool is_known(std::string_view key);

  void set(std::string_view key, std::string_view value);
  // "key = value" lines, '#' comments, "[section]" headers that prefix the
  // keys below them ("[train]" + "seed = 3" -> "train.seed").
  void merge_text(std::string_view text);
  void merge_file(const std::string& path);

  const std::string& get(std::string_view key) const;
  int get_int(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::uint64_t get_seed(std::string_view key) const;

  Variant variant() const;
  ModelConfig model_config() const;
  TrainConfig train_config() const;
  AugmentationConfig augmentation_config() const;
  std::string fallback_utterance() const;

  std::vector<std::pair<std::string, std::string>> echo() const;
  std::string to_text() const;  // same syntax merge_text reads, keys in order

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace oodhcn
