#include "oodhcn/vocabulary.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "oodhcn/error.hpp"
#include "oodhcn/rng.hpp"

namespace oodhcn {

Vocabulary::Vocabulary() {
  tokens_.emplace_back(kUnkToken);
  tokens_.emplace_back(kSilenceToken);
  index_.emplace(tokens_[0], kUnk);
  index_.emplace(tokens_[1], kSilence);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  std::erase_if(tokens, [](const std::string& t) { return t == kUnkToken || t == kSilenceToken; });
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());

  Vocabulary vocab;
  vocab.tokens_.reserve(tokens.size() + kReserved);
  for (auto& t : tokens) {
    vocab.index_.emplace(t, static_cast<TokenId>(vocab.tokens_.size()));
    vocab.tokens_.push_back(std::move(t));
  }
  return vocab;
}

TokenId Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = fnv1a64("vocabulary");
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64(std::string_view("\n"), h);
  }
  return h;
}

VocabularyBuilder& VocabularyBuilder::add(const Corpus& corpus) {
  for (const Dialog& d : corpus) {
    for (const Turn& t : d.turns) add_tokens(t.user_tokens);
  }
  return *this;
}

VocabularyBuilder& VocabularyBuilder::add_tokens(const std::vector<std::string>& tokens) {
  tokens_.insert(tokens_.end(), tokens.begin(), tokens.end());
  return *this;
}

Vocabulary VocabularyBuilder::build() const { return Vocabulary::from_tokens(tokens_); }

Vocabulary build_vocabulary(std::span<const Corpus> corpora) {
  VocabularyBuilder builder;
  for (const Corpus& c : corpora) builder.add(c);
  return builder.build();
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, int dimension, std::uint64_t seed,
                                 double stddev) {
  if (dimension <= 0) throw Error("embedding dimension must be positive");
  EmbeddingTable table;
  table.vectors.resize(dimension, static_cast<Eigen::Index>(vocab.size()));
  Rng rng(derive_seed(seed, "embeddings"));
  for (Eigen::Index col = 0; col < table.vectors.cols(); ++col) {
    for (Eigen::Index row = 0; row < table.vectors.rows(); ++row) {
      table.vectors(row, col) = stddev * rng.normal();
    }
  }
  table.frozen = true;
  return table;
}

EmbeddingTable load_embeddings(std::string_view text, const Vocabulary& vocab, std::uint64_t seed) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing 'V d' header");
  long declared_rows = 0;
  long dim = 0;
  {
    std::istringstream header(line);
    if (!(header >> declared_rows >> dim) || declared_rows < 0 || dim <= 0) {
      throw ParseError(1, "malformed 'V d' header");
    }
  }
  EmbeddingTable table = random_embeddings(vocab, static_cast<int>(dim), seed);
  long rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    Eigen::VectorXd v(dim);
    for (long k = 0; k < dim; ++k) {
      std::string num;
      if (!(fields >> num)) throw ParseError(line_no, "expected " + std::to_string(dim) + " values");
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
      if (ec != std::errc() || ptr != num.data() + num.size()) {
        throw ParseError(line_no, "bad number '" + num + "'");
      }
      v(k) = value;
    }
    std::string extra;
    if (fields >> extra) throw ParseError(line_no, "too many values");
    ++rows;
    if (vocab.contains(token)) table.vectors.col(vocab.lookup(token)) = v;
  }
  if (rows != declared_rows) {
    throw ParseError(line_no, "header declares " + std::to_string(declared_rows) + " rows, found " +
                                  std::to_string(rows));
  }
  table.frozen = true;
  return table;
}

EmbeddingTable load_embeddings_file(const std::string& path, const Vocabulary& vocab,
                                    std::uint64_t seed) {
  try {
    return load_embeddings(read_text_file(path), vocab, seed);
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

std::string write_embeddings(const EmbeddingTable& table, const Vocabulary& vocab) {
  std::ostringstream out;
  out.precision(17);
  out << vocab.size() << ' ' << table.dimension() << '\n';
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << vocab.token(static_cast<TokenId>(i));
    for (Eigen::Index r = 0; r < table.vectors.rows(); ++r) {
      out << ' ' << table.vectors(r, static_cast<Eigen::Index>(i));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace oodhcn
