#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "oodhcn/corpus.hpp"

namespace oodhcn {

// Unified token index. Index 0 is UNK and 1 is SILENCE; the remaining tokens
// follow in lexicographic order, so the mapping depends only on the token set.
class Vocabulary {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr TokenId kSilence = 1;
  static constexpr TokenId kReserved = 2;

  Vocabulary();
  // Reserved tokens in `tokens` are ignored; duplicates are collapsed.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  TokenId lookup(std::string_view token) const;  // OOV -> kUnk
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  std::uint64_t hash() const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Collects user-side tokens. Only user utterances feed the models, so system
// text and KB facts do not contribute.
class VocabularyBuilder {
 public:
  VocabularyBuilder& add(const Corpus& corpus);
  VocabularyBuilder& add_tokens(const std::vector<std::string>& tokens);
  Vocabulary build() const;

 private:
  std::vector<std::string> tokens_;
};

Vocabulary build_vocabulary(std::span<const Corpus> corpora);

// Per-token vectors stored column-wise (d x V).
struct EmbeddingTable {
  Eigen::MatrixXd vectors;
  bool frozen = true;

  std::size_t dimension() const { return static_cast<std::size_t>(vectors.rows()); }
};

// Frozen N(0, stddev^2) table, the stand-in when no pretrained file is given.
EmbeddingTable random_embeddings(const Vocabulary& vocab, int dimension, std::uint64_t seed,
                                 double stddev = 0.1);

// Reads "V d" then "token v1 ... vd" lines. Vocabulary tokens missing from the
// file get random_embeddings() rows drawn from `seed`; file tokens outside the
// vocabulary are ignored.
EmbeddingTable load_embeddings(std::string_view text, const Vocabulary& vocab, std::uint64_t seed);
EmbeddingTable load_embeddings_file(const std::string& path, const Vocabulary& vocab,
                                    std::uint64_t seed);
std::string write_embeddings(const EmbeddingTable& table, const Vocabulary& vocab);

}  // namespace oodhcn
