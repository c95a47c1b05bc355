#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oodhcn/corpus.hpp"
#include "oodhcn/rng.hpp"

namespace oodhcn::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A trainable tensor (rows x cols; biases are single-column) with its
// accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string name, Eigen::Index rows, Eigen::Index cols, bool trainable = true);

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

// --- turn encoding -------------------------------------------------------

// Mean of the embedding columns of `tokens`. Throws on an empty sequence.
Vector embed_mean(std::span<const TokenId> tokens, const Matrix& table);
// Accumulates d(loss)/d(table) given d(loss)/d(mean).
void embed_mean_backward(std::span<const TokenId> tokens, const Vector& grad_out, Matrix& grad_table);

// --- LSTM cell ------------------------------------------------------------
//
// Weight layout: W is 4H x (I + H) applied to [x; h_prev], gate blocks in the
// order input, forget, output, candidate.

struct LstmStep {
  Vector x, h_prev, c_prev;
  Vector i, f, o, g;
  Vector c, h;
};

LstmStep lstm_step(const Vector& x, const Vector& h_prev, const Vector& c_prev, const Matrix& w,
                   const Vector& b);

struct LstmStepGrads {
  Vector dx, dh_prev, dc_prev;
};

// Back-propagates (dh, dc) through one step, accumulating into dw and db.
LstmStepGrads lstm_step_backward(const LstmStep& step, const Matrix& w, const Vector& dh,
                                 const Vector& dc, Matrix& dw, Matrix& db);

// --- losses ---------------------------------------------------------------

// -log softmax(logits + log(mask))[target]. Masked-out entries get zero
// probability. Throws if the target is masked out or out of range.
double softmax_ce(const Vector& logits, ActionId target, std::span<const std::uint8_t> mask,
                  Vector* grad_logits = nullptr);

// Probabilities of the masked softmax.
Vector masked_softmax(const Vector& logits, std::span<const std::uint8_t> mask);

// Sum over entries of -[t log s(l) + (1 - t) log(1 - s(l))], s = logistic.
double bow_sigmoid_ce(const Vector& logits, std::span<const std::uint8_t> target,
                      Vector* grad_logits = nullptr);

// KL(N(mu, diag sigma^2) || N(0, I)) = sum_j -1/2 (1 + log sigma_j^2 - mu_j^2 - sigma_j^2).
double gaussian_kl(const Vector& mu, const Vector& sigma, Vector* grad_mu = nullptr,
                   Vector* grad_sigma = nullptr);

Vector reparameterize(const Vector& mu, const Vector& sigma, const Vector& noise);

// --- optimisation ---------------------------------------------------------

struct AdamState {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

// One bias-corrected Adam update from each parameter's `grad`. Frozen
// parameters are skipped. Moments are allocated lazily on the first call.
void adam_step(std::span<Parameter* const> params, AdamState& state);

// Rescales gradients so their global L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

// --- verification ---------------------------------------------------------

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

// Central differences of f around `point` compared with `analytic`; error per
// coordinate is max(0, |a - n| - abs_floor) / max(1e-8, |a| + |n|). The floor
// absorbs cancellation noise of the difference quotient (about eps * |f| / h)
// on near-zero gradients. Throws on non-finite values.
GradCheckResult grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> point, std::span<const double> analytic,
                           double h = 1e-5, double abs_floor = 0.0);

// --- initialisation -------------------------------------------------------

void init_glorot_uniform(Matrix& m, Rng& rng);
void init_orthogonal(Matrix& m, Rng& rng);
void init_normal(Matrix& m, Rng& rng, double stddev);
// Glorot input block, orthogonal recurrent blocks, zero bias with forget bias 1.
void init_lstm(Matrix& w, Matrix& b, Eigen::Index input_size, Rng& rng);

inline double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace oodhcn::nn
