#include "oodhcn/model.hpp"

#include <cmath>
#include <limits>

#include "oodhcn/error.hpp"

namespace oodhcn {

using nn::Matrix;
using nn::Vector;

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kHcn: return "HCN";
    case Variant::kHhcn: return "HHCN";
    case Variant::kVhcn: return "VHCN";
  }
  return "HCN";
}

Variant parse_variant(std::string_view text) {
  if (text == "HCN" || text == "hcn") return Variant::kHcn;
  if (text == "HHCN" || text == "hhcn") return Variant::kHhcn;
  if (text == "VHCN" || text == "vhcn") return Variant::kVhcn;
  throw Error("unknown model variant '" + std::string(text) + "' (expected HCN, HHCN or VHCN)");
}

ModelConfig ModelConfig::defaults(Variant variant) {
  ModelConfig c;
  c.variant = variant;
  switch (variant) {
    case Variant::kHcn: c.embedding_size = 64; c.latent_size = 0; break;
    case Variant::kHhcn: c.embedding_size = 128; c.latent_size = 0; break;
    case Variant::kVhcn: c.embedding_size = 128; c.latent_size = 8; break;
  }
  return c;
}

void ModelConfig::validate() const {
  if (embedding_size <= 0) throw Error("embedding size must be positive");
  if (dialog_hidden <= 0 || predictor_hidden <= 0) throw Error("hidden sizes must be positive");
  if (variant == Variant::kVhcn && latent_size <= 0) throw Error("VHCN requires a positive latent size");
  if (variant != Variant::kVhcn && latent_size != 0) {
    throw Error("latent size is only valid for VHCN (got " + std::to_string(latent_size) + " for " +
                std::string(to_string(variant)) + ")");
  }
}

struct DialogModel::TurnCache {
  std::vector<nn::LstmStep> turn_steps;
  Vector noise;
  Vector mu, sigma;
  Vector z;
  Vector bow_logits;
  Vector turn_vector;
  nn::LstmStep dialog_step;
  Vector hidden_pre, hidden;
  Vector logits;
};

void DialogModel::add_param(Slot s, std::string name, Eigen::Index rows, Eigen::Index cols,
                            bool trainable) {
  slot_index_[s] = static_cast<int>(params_.size());
  params_.emplace_back(std::move(name), rows, cols, trainable);
}

DialogModel::DialogModel(const ModelConfig& config, std::size_t vocab_size,
                         std::size_t action_count, std::uint64_t seed,
                         const EmbeddingTable* pretrained)
    : config_(config), vocab_size_(vocab_size), action_count_(action_count) {
  config_.validate();
  if (vocab_size < 2 || action_count < 1) throw Error("model needs a vocabulary and an action set");
  slot_index_.fill(-1);
  Rng rng(derive_seed(seed, "init"));

  const auto d = static_cast<Eigen::Index>(config_.embedding_size);
  const auto v = static_cast<Eigen::Index>(vocab_size);
  const auto a = static_cast<Eigen::Index>(action_count);
  const auto hd = static_cast<Eigen::Index>(config_.dialog_hidden);
  const auto hp = static_cast<Eigen::Index>(config_.predictor_hidden);
  const bool recurrent_turns = config_.variant != Variant::kHcn;

  if (pretrained != nullptr) {
    if (pretrained->vectors.rows() != d || pretrained->vectors.cols() != v) {
      throw Error("embedding table is " + std::to_string(pretrained->vectors.rows()) + "x" +
                  std::to_string(pretrained->vectors.cols()) + ", model expects " +
                  std::to_string(d) + "x" + std::to_string(v));
    }
  }
  add_param(kEmbedding, "embedding", d, v, recurrent_turns);
  if (pretrained != nullptr) {
    param(kEmbedding).value = pretrained->vectors;
  } else if (recurrent_turns) {
    nn::init_normal(param(kEmbedding).value, rng, 0.1);
  } else {
    // Same draws as random_embeddings(vocab, d, seed).
    Rng emb_rng(derive_seed(seed, "embeddings"));
    nn::init_normal(param(kEmbedding).value, emb_rng, 0.1);
  }

  if (recurrent_turns) {
    add_param(kTurnLstmW, "turn_lstm.w", 4 * d, 2 * d);
    add_param(kTurnLstmB, "turn_lstm.b", 4 * d, 1);
    nn::init_lstm(param(kTurnLstmW).value, param(kTurnLstmB).value, d, rng);
  }
  if (config_.variant == Variant::kVhcn) {
    const auto k = static_cast<Eigen::Index>(config_.latent_size);
    add_param(kMuW, "vae.mu.w", k, d);
    add_param(kMuB, "vae.mu.b", k, 1);
    add_param(kLogVarW, "vae.logvar.w", k, d);
    add_param(kLogVarB, "vae.logvar.b", k, 1);
    add_param(kBowW, "vae.bow.w", v, k);
    add_param(kBowB, "vae.bow.b", v, 1);
    nn::init_glorot_uniform(param(kMuW).value, rng);
    nn::init_glorot_uniform(param(kLogVarW).value, rng);
    nn::init_glorot_uniform(param(kBowW).value, rng);
  }

  const auto input = static_cast<Eigen::Index>(dialog_input_size());
  add_param(kDialogLstmW, "dialog_lstm.w", 4 * hd, input + hd);
  add_param(kDialogLstmB, "dialog_lstm.b", 4 * hd, 1);
  nn::init_lstm(param(kDialogLstmW).value, param(kDialogLstmB).value, input, rng);
  add_param(kHiddenW, "predictor.hidden.w", hp, hd);
  add_param(kHiddenB, "predictor.hidden.b", hp, 1);
  add_param(kOutputW, "predictor.output.w", a, hp);
  add_param(kOutputB, "predictor.output.b", a, 1);
  nn::init_glorot_uniform(param(kHiddenW).value, rng);
  nn::init_glorot_uniform(param(kOutputW).value, rng);
}

std::size_t DialogModel::turn_vector_size() const {
  return config_.variant == Variant::kVhcn ? static_cast<std::size_t>(config_.latent_size)
                                           : static_cast<std::size_t>(config_.embedding_size);
}

std::size_t DialogModel::dialog_input_size() const {
  return turn_vector_size() + vocab_size_ + ContextFeatures::kSize + 2 * action_count_;
}

void DialogModel::check_features(const TurnFeatures& f) const {
  if (f.bow.size() != vocab_size_ || f.mask.size() != action_count_ ||
      f.prev_action.size() != action_count_) {
    throw Error("turn features do not match the model dimensions (vocabulary " +
                std::to_string(vocab_size_) + ", actions " + std::to_string(action_count_) + ")");
  }
  if (f.tokens.empty()) throw Error("turn features carry an empty token sequence");
  for (TokenId t : f.tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size_) {
      throw Error("token id " + std::to_string(t) + " outside the model vocabulary");
    }
  }
}

Vector DialogModel::dialog_input(const Vector& turn_vector, const TurnFeatures& f) const {
  Vector x(static_cast<Eigen::Index>(dialog_input_size()));
  Eigen::Index pos = 0;
  x.segment(pos, turn_vector.size()) = turn_vector;
  pos += turn_vector.size();
  for (std::uint8_t b : f.bow) x(pos++) = b;
  for (std::uint8_t b : f.context.slots) x(pos++) = b;
  x(pos++) = f.context.api_results;
  for (std::uint8_t b : f.prev_action) x(pos++) = b;
  for (std::uint8_t b : f.mask) x(pos++) = b;
  return x;
}

DialogState DialogModel::initial_state() const {
  const auto hd = static_cast<Eigen::Index>(config_.dialog_hidden);
  return DialogState{Vector::Zero(hd), Vector::Zero(hd)};
}

Vector DialogModel::bow_logits(const Vector& z) const {
  if (config_.variant != Variant::kVhcn) throw Error("bag-of-words decoder exists only for VHCN");
  return param(kBowW).value * z + param(kBowB).value.col(0);
}

void DialogModel::forward_turn(const TurnFeatures& f, Mode mode, Rng* rng, DialogState& state,
                               TurnCache& cache) const {
  check_features(f);
  const Matrix& emb = param(kEmbedding).value;
  if (config_.variant == Variant::kHcn) {
    cache.turn_vector = nn::embed_mean(f.tokens, emb);
  } else {
    const auto d = emb.rows();
    Vector h = Vector::Zero(d);
    Vector c = Vector::Zero(d);
    cache.turn_steps.clear();
    cache.turn_steps.reserve(f.tokens.size());
    for (TokenId t : f.tokens) {
      cache.turn_steps.push_back(nn::lstm_step(emb.col(t), h, c, param(kTurnLstmW).value,
                                               param(kTurnLstmB).value.col(0)));
      h = cache.turn_steps.back().h;
      c = cache.turn_steps.back().c;
    }
    if (config_.variant == Variant::kHhcn) {
      cache.turn_vector = h;
    } else {
      cache.mu = param(kMuW).value * h + param(kMuB).value.col(0);
      const Vector log_var = param(kLogVarW).value * h + param(kLogVarB).value.col(0);
      cache.sigma = (0.5 * log_var.array()).exp();
      if (mode == Mode::kTrain) {
        if (rng == nullptr) throw Error("VHCN train mode needs a random source");
        cache.noise.resize(cache.mu.size());
        for (Eigen::Index j = 0; j < cache.noise.size(); ++j) cache.noise(j) = rng->normal();
        cache.z = nn::reparameterize(cache.mu, cache.sigma, cache.noise);
      } else {
        cache.noise = Vector::Zero(cache.mu.size());
        cache.z = cache.mu;
      }
      cache.bow_logits = bow_logits(cache.z);
      cache.turn_vector = cache.z;
    }
  }

  cache.dialog_step = nn::lstm_step(dialog_input(cache.turn_vector, f), state.h, state.c,
                                    param(kDialogLstmW).value, param(kDialogLstmB).value.col(0));
  state.h = cache.dialog_step.h;
  state.c = cache.dialog_step.c;
  cache.hidden_pre = param(kHiddenW).value * state.h + param(kHiddenB).value.col(0);
  cache.hidden = cache.hidden_pre.cwiseMax(0.0);
  cache.logits = param(kOutputW).value * cache.hidden + param(kOutputB).value.col(0);
}

TurnEncoding DialogModel::encode_turn(const TurnFeatures& features, Mode mode, Rng* rng) const {
  TurnCache cache;
  DialogState scratch = initial_state();
  forward_turn(features, mode, rng, scratch, cache);
  TurnEncoding out;
  out.vector = cache.turn_vector;
  if (config_.variant == Variant::kVhcn) out.vae = VaeEncoding{cache.mu, cache.sigma, cache.z};
  return out;
}

Vector DialogModel::dialog_step(DialogState& state, const Vector& turn_vector,
                                const TurnFeatures& features) const {
  check_features(features);
  if (static_cast<std::size_t>(turn_vector.size()) != turn_vector_size()) {
    throw Error("turn vector has length " + std::to_string(turn_vector.size()) + ", expected " +
                std::to_string(turn_vector_size()));
  }
  const nn::LstmStep step = nn::lstm_step(dialog_input(turn_vector, features), state.h, state.c,
                                          param(kDialogLstmW).value,
                                          param(kDialogLstmB).value.col(0));
  state.h = step.h;
  state.c = step.c;
  const Vector hidden =
      (param(kHiddenW).value * state.h + param(kHiddenB).value.col(0)).cwiseMax(0.0);
  Vector logits = param(kOutputW).value * hidden + param(kOutputB).value.col(0);
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (!features.mask[static_cast<std::size_t>(k)]) {
      logits(k) = -std::numeric_limits<double>::infinity();
    }
  }
  return logits;
}

std::vector<ActionId> DialogModel::predict(const FeaturizedDialog& dialog) const {
  std::vector<ActionId> out;
  out.reserve(dialog.turns.size());
  DialogState state = initial_state();
  TurnCache cache;
  for (const TurnFeatures& f : dialog.turns) {
    forward_turn(f, Mode::kInfer, nullptr, state, cache);
    ActionId best = kNoAction;
    double best_logit = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < cache.logits.size(); ++k) {
      if (!f.mask[static_cast<std::size_t>(k)]) continue;
      if (best == kNoAction || cache.logits(k) > best_logit) {
        best = static_cast<ActionId>(k);
        best_logit = cache.logits(k);
      }
    }
    out.push_back(best);
  }
  return out;
}

DialogLoss DialogModel::forward(const FeaturizedDialog& dialog, Mode mode, Rng* rng,
                                std::vector<TurnCache>* caches) const {
  DialogLoss loss;
  DialogState state = initial_state();
  std::vector<TurnCache> local(caches == nullptr ? 1 : 0);
  if (caches != nullptr) caches->resize(dialog.turns.size());
  for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
    const TurnFeatures& f = dialog.turns[t];
    TurnCache& cache = caches != nullptr ? (*caches)[t] : local.front();
    forward_turn(f, mode, rng, state, cache);
    if (f.target != kNoAction) {
      loss.action += nn::softmax_ce(cache.logits, f.target, f.mask);
      ++loss.scored_turns;
    }
    if (config_.variant == Variant::kVhcn) {
      loss.bow += nn::bow_sigmoid_ce(cache.bow_logits, f.bow);
      loss.kl += nn::gaussian_kl(cache.mu, cache.sigma);
    }
    ++loss.turns;
  }
  return loss;
}

void DialogModel::backward(const FeaturizedDialog& dialog, Mode mode,
                           const std::vector<TurnCache>& caches) {
  const auto hd = static_cast<Eigen::Index>(config_.dialog_hidden);
  Vector dh_next = Vector::Zero(hd);
  Vector dc_next = Vector::Zero(hd);
  const auto tv = static_cast<Eigen::Index>(turn_vector_size());

  for (std::size_t idx = dialog.turns.size(); idx-- > 0;) {
    const TurnFeatures& f = dialog.turns[idx];
    const TurnCache& cache = caches[idx];

    Vector dlogits = Vector::Zero(cache.logits.size());
    if (f.target != kNoAction) nn::softmax_ce(cache.logits, f.target, f.mask, &dlogits);
    param(kOutputW).grad.noalias() += dlogits * cache.hidden.transpose();
    param(kOutputB).grad.col(0) += dlogits;
    Vector dhidden = param(kOutputW).value.transpose() * dlogits;
    for (Eigen::Index k = 0; k < dhidden.size(); ++k) {
      if (cache.hidden_pre(k) <= 0.0) dhidden(k) = 0.0;
    }
    param(kHiddenW).grad.noalias() += dhidden * cache.dialog_step.h.transpose();
    param(kHiddenB).grad.col(0) += dhidden;
    const Vector dh = param(kHiddenW).value.transpose() * dhidden + dh_next;

    const nn::LstmStepGrads g = nn::lstm_step_backward(
        cache.dialog_step, param(kDialogLstmW).value, dh, dc_next, param(kDialogLstmW).grad,
        param(kDialogLstmB).grad);
    dh_next = g.dh_prev;
    dc_next = g.dc_prev;
    Vector dturn = g.dx.head(tv);

    if (config_.variant == Variant::kHcn) {
      if (param(kEmbedding).trainable) {
        nn::embed_mean_backward(f.tokens, dturn, param(kEmbedding).grad);
      }
      continue;
    }

    Vector dh_enc;
    if (config_.variant == Variant::kHhcn) {
      dh_enc = dturn;
    } else {
      Vector dbow;
      nn::bow_sigmoid_ce(cache.bow_logits, f.bow, &dbow);
      param(kBowW).grad.noalias() += dbow * cache.z.transpose();
      param(kBowB).grad.col(0) += dbow;
      const Vector dz = dturn + param(kBowW).value.transpose() * dbow;

      Vector dmu_kl, dsigma_kl;
      nn::gaussian_kl(cache.mu, cache.sigma, &dmu_kl, &dsigma_kl);
      const Vector dmu = dz + dmu_kl;
      Vector dsigma = dsigma_kl;
      if (mode == Mode::kTrain) dsigma += dz.cwiseProduct(cache.noise);
      const Vector dlog_var = 0.5 * dsigma.cwiseProduct(cache.sigma);

      const Vector& h_last = cache.turn_steps.back().h;
      param(kMuW).grad.noalias() += dmu * h_last.transpose();
      param(kMuB).grad.col(0) += dmu;
      param(kLogVarW).grad.noalias() += dlog_var * h_last.transpose();
      param(kLogVarB).grad.col(0) += dlog_var;
      dh_enc = param(kMuW).value.transpose() * dmu + param(kLogVarW).value.transpose() * dlog_var;
    }

    Vector dc_enc = Vector::Zero(dh_enc.size());
    for (std::size_t s = cache.turn_steps.size(); s-- > 0;) {
      const nn::LstmStepGrads tg =
          nn::lstm_step_backward(cache.turn_steps[s], param(kTurnLstmW).value, dh_enc, dc_enc,
                                 param(kTurnLstmW).grad, param(kTurnLstmB).grad);
      if (param(kEmbedding).trainable) param(kEmbedding).grad.col(f.tokens[s]) += tg.dx;
      dh_enc = tg.dh_prev;
      dc_enc = tg.dc_prev;
    }
  }
}

DialogLoss DialogModel::loss(const FeaturizedDialog& dialog, Mode mode, Rng* rng) const {
  return forward(dialog, mode, rng, nullptr);
}

DialogLoss DialogModel::forward_backward(const FeaturizedDialog& dialog, Mode mode, Rng* rng) {
  std::vector<TurnCache> caches;
  const DialogLoss loss = forward(dialog, mode, rng, &caches);
  backward(dialog, mode, caches);
  return loss;
}

std::vector<nn::Parameter*> DialogModel::parameters() {
  std::vector<nn::Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const nn::Parameter*> DialogModel::parameters() const {
  std::vector<const nn::Parameter*> out;
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

void DialogModel::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace oodhcn
