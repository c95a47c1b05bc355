#include "oodhcn/augment.hpp"

#include <set>
#include <sstream>

#include "oodhcn/error.hpp"

namespace oodhcn {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(std::string(name) + " must be in [0, 1], got " + std::to_string(p));
  }
}

}  // namespace

void AugmentationConfig::validate() const {
  check_probability(p_ood_start, "p_ood_start");
  check_probability(p_ood_cont, "p_ood_cont");
  check_probability(independent_segment_prob, "independent_segment_prob");
}

OodPool load_ood_pool(const Corpus& foreign_dialogs, std::string source) {
  OodPool pool;
  pool.source = std::move(source);
  std::set<std::vector<std::string>> seen;
  for (const Dialog& d : foreign_dialogs) {
    if (d.turns.empty()) continue;
    const auto& first = d.turns.front().user_tokens;
    if (first.empty() || is_silence(first)) continue;
    if (seen.insert(first).second) pool.utterances.push_back(first);
  }
  if (pool.utterances.empty()) {
    throw Error("OOD pool '" + pool.source + "' has no usable first user utterances");
  }
  return pool;
}

SegmentPool load_segment_pool(std::string_view text) {
  SegmentPool pool;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    auto tokens = tokenize(line);
    if (!is_silence(tokens)) pool.interjections.push_back(std::move(tokens));
  }
  return pool;
}

std::string write_segment_pool(const SegmentPool& pool) {
  std::string out;
  for (const auto& tokens : pool.interjections) {
    out += join_tokens(tokens);
    out += '\n';
  }
  return out;
}

OodSampler::OodSampler(std::vector<OodPool> pools, bool weighted)
    : pools_(std::move(pools)), weighted_(weighted) {
  for (const auto& p : pools_) {
    if (p.utterances.empty()) throw Error("OOD pool '" + p.source + "' is empty");
    if (weighted_ && !(p.weight > 0.0)) throw Error("OOD pool weights must be positive");
    offsets_.push_back(total_);
    total_ += p.utterances.size();
    weight_sum_ += p.weight;
  }
}

const std::vector<std::string>& OodSampler::draw(Rng& rng) const {
  if (total_ == 0) throw Error("cannot sample from an empty OOD pool");
  if (weighted_) {
    double u = rng.uniform() * weight_sum_;
    std::size_t k = 0;
    for (; k + 1 < pools_.size(); ++k) {
      if (u < pools_[k].weight) break;
      u -= pools_[k].weight;
    }
    const auto& pool = pools_[k].utterances;
    return pool[rng.uniform_index(pool.size())];
  }
  const std::size_t flat = rng.uniform_index(total_);
  std::size_t k = pools_.size() - 1;
  while (offsets_[k] > flat) --k;
  return pools_[k].utterances[flat - offsets_[k]];
}

std::vector<Turn> sample_ood_block(Rng& rng, const AugmentationConfig& config,
                                   const OodSampler& pool, const FallbackAction& fallback) {
  if (pool.empty()) throw Error("cannot sample an OOD block from an empty pool");
  std::vector<Turn> block;
  do {
    Turn turn;
    turn.user_tokens = pool.draw(rng);
    turn.system_action = fallback.id;
    turn.system_utterance = fallback.utterance;
    turn.ood_label = OodLabel::kTurnOod;
    block.push_back(std::move(turn));
  } while (rng.bernoulli(config.p_ood_cont));
  return block;
}

Dialog augment_dialog(const Dialog& dialog, const AugmentationConfig& config, Rng& rng,
                      const OodSampler& pool, const SegmentPool& segment_pool,
                      const FallbackAction& fallback) {
  config.validate();
  if (config.p_ood_start > 0.0 && pool.empty()) {
    throw Error("p_ood_start > 0 requires a non-empty OOD pool");
  }
  const bool needs_segments = config.p_ood_start > 0.0 || config.independent_segment_prob > 0.0;
  if (needs_segments && segment_pool.interjections.empty()) {
    throw Error("segment-level augmentation requires a non-empty segment pool");
  }

  auto prefixed = [&](const Turn& original) {
    Turn turn = original;
    const auto& interjection =
        segment_pool.interjections[rng.uniform_index(segment_pool.interjections.size())];
    turn.user_tokens = interjection;
    turn.user_tokens.insert(turn.user_tokens.end(), original.user_tokens.begin(),
                            original.user_tokens.end());
    turn.ood_label = OodLabel::kSegmentOod;
    return turn;
  };

  Dialog out;
  out.id = dialog.id;
  for (const Turn& original : dialog.turns) {
    if (rng.bernoulli(config.p_ood_start)) {
      auto block = sample_ood_block(rng, config, pool, fallback);
      for (auto& t : block) out.turns.push_back(std::move(t));
      out.turns.push_back(prefixed(original));
    } else if (config.independent_segment_prob > 0.0 &&
               rng.bernoulli(config.independent_segment_prob)) {
      out.turns.push_back(prefixed(original));
    } else {
      out.turns.push_back(original);
    }
  }
  return out;
}

void AugmentStats::merge(const AugmentStats& other) {
  dialogs += other.dialogs;
  original_turns += other.original_turns;
  ind_turns += other.ind_turns;
  turn_ood_turns += other.turn_ood_turns;
  segment_ood_turns += other.segment_ood_turns;
  ood_blocks += other.ood_blocks;
  for (const auto& [len, n] : other.block_lengths) block_lengths[len] += n;
}

std::string AugmentStats::to_text() const {
  std::ostringstream out;
  out << "dialogs = " << dialogs << '\n'
      << "original_turns = " << original_turns << '\n'
      << "ind_turns = " << ind_turns << '\n'
      << "turn_ood_turns = " << turn_ood_turns << '\n'
      << "segment_ood_turns = " << segment_ood_turns << '\n'
      << "ood_blocks = " << ood_blocks << '\n';
  for (const auto& [len, n] : block_lengths) out << "block_length." << len << " = " << n << '\n';
  return out.str();
}

namespace {

AugmentStats dialog_stats(const Dialog& original, const Dialog& augmented) {
  AugmentStats s;
  s.dialogs = 1;
  s.original_turns = original.turns.size();
  std::size_t run = 0;
  for (const Turn& t : augmented.turns) {
    switch (t.ood_label) {
      case OodLabel::kInd: ++s.ind_turns; break;
      case OodLabel::kTurnOod: ++s.turn_ood_turns; break;
      case OodLabel::kSegmentOod: ++s.segment_ood_turns; break;
    }
    if (t.ood_label == OodLabel::kTurnOod) {
      ++run;
    } else if (run > 0) {
      ++s.ood_blocks;
      ++s.block_lengths[run];
      run = 0;
    }
  }
  return s;
}

}  // namespace

AugmentResult augment_corpus(const Corpus& corpus, const AugmentationConfig& config,
                             const OodSampler& pool, const SegmentPool& segment_pool,
                             const FallbackAction& fallback) {
  config.validate();
  AugmentResult result;
  result.dialogs.reserve(corpus.size());
  for (const Dialog& d : corpus) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(d.id)));
    Dialog augmented = augment_dialog(d, config, rng, pool, segment_pool, fallback);
    result.stats.merge(dialog_stats(d, augmented));
    result.dialogs.push_back(std::move(augmented));
  }
  return result;
}

}  // namespace oodhcn
