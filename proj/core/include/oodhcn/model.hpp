#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oodhcn/features.hpp"
#include "oodhcn/nn.hpp"
#include "oodhcn/vocabulary.hpp"

namespace oodhcn {

enum class Variant { kHcn, kHhcn, kVhcn };

std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view text);

struct ModelConfig {
  Variant variant = Variant::kHcn;
  int embedding_size = 64;
  int latent_size = 0;  // VHCN only
  int dialog_hidden = 128;
  int predictor_hidden = 128;
  // Optional "V d" embedding file. HCN keeps it frozen; HHCN/VHCN use it as
  // the initial value of a trainable table.
  std::string embeddings_path;

  // Per-variant sizes: HCN 64, HHCN 128, VHCN 128 with latent 8.
  static ModelConfig defaults(Variant variant);
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

enum class Mode { kTrain, kInfer };

struct VaeEncoding {
  nn::Vector mu;
  nn::Vector sigma;
  nn::Vector z;
};

struct TurnEncoding {
  nn::Vector vector;
  std::optional<VaeEncoding> vae;
};

struct DialogState {
  nn::Vector h;
  nn::Vector c;
};

// Summed over the turns of a dialog; all terms are minimised.
struct DialogLoss {
  double action = 0.0;  // softmax cross-entropy
  double bow = 0.0;     // VHCN bag-of-words reconstruction
  double kl = 0.0;      // VHCN closed-form KL
  std::size_t turns = 0;         // every turn, the KL denominator
  std::size_t scored_turns = 0;  // turns with a known target

  double total() const { return action + bow + kl; }
};

// HCN / HHCN / VHCN. Turn encoder (mean of frozen embeddings, LSTM, or LSTM
// VAE) feeding a dialog LSTM whose input also carries x_BoW, f_ctx, the
// previous action and the action mask; a one-hidden-layer ReLU predictor maps
// the dialog state to action logits.
class DialogModel {
 public:
  DialogModel() = default;
  DialogModel(const ModelConfig& config, std::size_t vocab_size, std::size_t action_count,
              std::uint64_t seed, const EmbeddingTable* pretrained = nullptr);

  const ModelConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t action_count() const { return action_count_; }
  std::size_t turn_vector_size() const;
  std::size_t dialog_input_size() const;

  // In train mode VHCN samples z = mu + sigma * eps with eps ~ N(0, I) drawn
  // from `rng`; in infer mode z = mu. HCN and HHCN ignore mode and rng.
  TurnEncoding encode_turn(const TurnFeatures& features, Mode mode, Rng* rng = nullptr) const;

  DialogState initial_state() const;
  // Advances `state` by one turn and returns masked action logits (masked-out
  // entries are -inf).
  nn::Vector dialog_step(DialogState& state, const nn::Vector& turn_vector,
                         const TurnFeatures& features) const;

  // VAE bag-of-words decoder logits for a latent vector.
  nn::Vector bow_logits(const nn::Vector& z) const;

  // Greedy argmax per turn (ties go to the lowest id), infer mode.
  std::vector<ActionId> predict(const FeaturizedDialog& dialog) const;

  DialogLoss loss(const FeaturizedDialog& dialog, Mode mode, Rng* rng = nullptr) const;
  // Same as loss() and accumulates parameter gradients.
  DialogLoss forward_backward(const FeaturizedDialog& dialog, Mode mode, Rng* rng = nullptr);

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;
  void zero_grad();

 private:
  enum Slot : std::size_t {
    kEmbedding,
    kTurnLstmW, kTurnLstmB,
    kMuW, kMuB, kLogVarW, kLogVarB, kBowW, kBowB,
    kDialogLstmW, kDialogLstmB,
    kHiddenW, kHiddenB,
    kOutputW, kOutputB,
    kSlotCount
  };

  struct TurnCache;

  bool has(Slot s) const { return slot_index_[s] >= 0; }
  nn::Parameter& param(Slot s) { return params_[static_cast<std::size_t>(slot_index_[s])]; }
  const nn::Parameter& param(Slot s) const {
    return params_[static_cast<std::size_t>(slot_index_[s])];
  }
  void add_param(Slot s, std::string name, Eigen::Index rows, Eigen::Index cols, bool trainable = true);

  DialogLoss forward(const FeaturizedDialog& dialog, Mode mode, Rng* rng,
                     std::vector<TurnCache>* caches) const;
  void backward(const FeaturizedDialog& dialog, Mode mode, const std::vector<TurnCache>& caches);
  void forward_turn(const TurnFeatures& features, Mode mode, Rng* rng, DialogState& state,
                    TurnCache& cache) const;
  nn::Vector dialog_input(const nn::Vector& turn_vector, const TurnFeatures& features) const;
  void check_features(const TurnFeatures& features) const;

  ModelConfig config_;
  std::size_t vocab_size_ = 0;
  std::size_t action_count_ = 0;
  std::vector<nn::Parameter> params_;
  std::array<int, kSlotCount> slot_index_{};
};

}  // namespace oodhcn
