#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "oodhcn/corpus.hpp"
#include "oodhcn/lexicon.hpp"
#include "oodhcn/rng.hpp"

namespace oodhcn {

struct AugmentationConfig {
  double p_ood_start = 0.2;
  double p_ood_cont = 0.4;
  std::uint64_t seed = 0;
  // Chance that an IND turn not preceded by an OOD block still receives an
  // interjection prefix.
  double independent_segment_prob = 0.0;

  void validate() const;
};

// Foreign-domain user utterances (turn-level OOD content).
struct OodPool {
  std::vector<std::vector<std::string>> utterances;
  std::string source;
  double weight = 1.0;
};

// Mistake-affirmation interjections (segment-level OOD content).
struct SegmentPool {
  std::vector<std::vector<std::string>> interjections;
};

// First user utterance of every dialog; SILENCE-only openings are skipped and
// duplicates dropped (first occurrence kept). Throws if nothing remains.
OodPool load_ood_pool(const Corpus& foreign_dialogs, std::string source = {});
// One interjection per non-empty line.
SegmentPool load_segment_pool(std::string_view text);
std::string write_segment_pool(const SegmentPool& pool);

class OodSampler {
 public:
  OodSampler() = default;
  // Uniform over the union of all utterances, or pool-by-weight then uniform
  // within the pool when `weighted` is set.
  explicit OodSampler(std::vector<OodPool> pools, bool weighted = false);

  const std::vector<std::string>& draw(Rng& rng) const;
  bool empty() const { return total_ == 0; }
  std::size_t size() const { return total_; }
  const std::vector<OodPool>& pools() const { return pools_; }

 private:
  std::vector<OodPool> pools_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
  bool weighted_ = false;
  double weight_sum_ = 0.0;
};

struct FallbackAction {
  ActionId id = kNoAction;
  std::string utterance{kDefaultFallbackUtterance};
};

// A run of TURN_OOD turns whose length is geometric:
// P(L = k) = p_ood_cont^(k-1) * (1 - p_ood_cont).
std::vector<Turn> sample_ood_block(Rng& rng, const AugmentationConfig& config,
                                   const OodSampler& pool, const FallbackAction& fallback);

// Before each original turn an OOD block is inserted with probability
// p_ood_start; the original turn that follows a block gets an interjection
// prefix and the SEGMENT_OOD label. Original turns keep their order and targets.
Dialog augment_dialog(const Dialog& dialog, const AugmentationConfig& config, Rng& rng,
                      const OodSampler& pool, const SegmentPool& segment_pool,
                      const FallbackAction& fallback);

struct AugmentStats {
  std::size_t dialogs = 0;
  std::size_t original_turns = 0;
  std::size_t ind_turns = 0;
  std::size_t turn_ood_turns = 0;
  std::size_t segment_ood_turns = 0;
  std::size_t ood_blocks = 0;
  std::map<std::size_t, std::size_t> block_lengths;

  void merge(const AugmentStats& other);
  // Flat "key = value" lines.
  std::string to_text() const;
  bool operator==(const AugmentStats&) const = default;
};

struct AugmentResult {
  Corpus dialogs;
  AugmentStats stats;
};

// Dialog d is augmented with Rng(derive_seed(config.seed, d.id)), so results
// do not depend on processing order.
AugmentResult augment_corpus(const Corpus& corpus, const AugmentationConfig& config,
                             const OodSampler& pool, const SegmentPool& segment_pool,
                             const FallbackAction& fallback);

}  // namespace oodhcn
