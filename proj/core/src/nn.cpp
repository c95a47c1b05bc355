#include "oodhcn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oodhcn/error.hpp"

namespace oodhcn::nn {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Vector sigmoid(const Vector& x) { return x.unaryExpr([](double v) { return logistic(v); }); }

}  // namespace

Parameter::Parameter(std::string name_, Eigen::Index rows, Eigen::Index cols, bool trainable_)
    : name(std::move(name_)),
      value(Matrix::Zero(rows, cols)),
      grad(Matrix::Zero(rows, cols)),
      trainable(trainable_) {}

Vector embed_mean(std::span<const TokenId> tokens, const Matrix& table) {
  if (tokens.empty()) throw Error("embed_mean of an empty token sequence");
  Vector sum = Vector::Zero(table.rows());
  for (TokenId t : tokens) {
    if (t < 0 || t >= table.cols()) throw Error("token id " + std::to_string(t) + " outside table");
    sum += table.col(t);
  }
  return sum / static_cast<double>(tokens.size());
}

void embed_mean_backward(std::span<const TokenId> tokens, const Vector& grad_out, Matrix& grad_table) {
  if (tokens.empty()) return;
  const double scale = 1.0 / static_cast<double>(tokens.size());
  for (TokenId t : tokens) grad_table.col(t) += scale * grad_out;
}

LstmStep lstm_step(const Vector& x, const Vector& h_prev, const Vector& c_prev, const Matrix& w,
                   const Vector& b) {
  const Eigen::Index hidden = h_prev.size();
  if (w.rows() != 4 * hidden || w.cols() != x.size() + hidden || b.size() != 4 * hidden ||
      c_prev.size() != hidden) {
    throw Error("lstm_step dimension mismatch: W " + shape(w) + ", x " + std::to_string(x.size()) +
                ", h " + std::to_string(hidden) + ", c " + std::to_string(c_prev.size()) +
                ", b " + std::to_string(b.size()));
  }
  LstmStep s;
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  const Eigen::Index in = x.size();
  Vector a = b;
  a.noalias() += w.leftCols(in) * x;
  a.noalias() += w.rightCols(hidden) * h_prev;
  s.i = sigmoid(a.segment(0, hidden));
  s.f = sigmoid(a.segment(hidden, hidden));
  s.o = sigmoid(a.segment(2 * hidden, hidden));
  s.g = a.segment(3 * hidden, hidden).array().tanh();
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
  s.h = s.o.cwiseProduct(Vector(s.c.array().tanh()));
  return s;
}

LstmStepGrads lstm_step_backward(const LstmStep& s, const Matrix& w, const Vector& dh,
                                 const Vector& dc, Matrix& dw, Matrix& db) {
  const Eigen::Index hidden = s.h.size();
  const Eigen::Index in = s.x.size();
  const Vector tanh_c = s.c.array().tanh();
  const Vector dc_total =
      dc.array() + dh.array() * s.o.array() * (1.0 - tanh_c.array().square());

  Vector da(4 * hidden);
  da.segment(0, hidden) = dc_total.array() * s.g.array() * s.i.array() * (1.0 - s.i.array());
  da.segment(hidden, hidden) =
      dc_total.array() * s.c_prev.array() * s.f.array() * (1.0 - s.f.array());
  da.segment(2 * hidden, hidden) = dh.array() * tanh_c.array() * s.o.array() * (1.0 - s.o.array());
  da.segment(3 * hidden, hidden) = dc_total.array() * s.i.array() * (1.0 - s.g.array().square());

  dw.leftCols(in).noalias() += da * s.x.transpose();
  dw.rightCols(hidden).noalias() += da * s.h_prev.transpose();
  db.col(0) += da;

  LstmStepGrads g;
  g.dx.noalias() = w.leftCols(in).transpose() * da;
  g.dh_prev.noalias() = w.rightCols(hidden).transpose() * da;
  g.dc_prev = dc_total.cwiseProduct(s.f);
  return g;
}

Vector masked_softmax(const Vector& logits, std::span<const std::uint8_t> mask) {
  if (static_cast<Eigen::Index>(mask.size()) != logits.size()) {
    throw Error("mask length " + std::to_string(mask.size()) + " != logits length " +
                std::to_string(logits.size()));
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) max_logit = std::max(max_logit, logits(k));
  }
  if (!std::isfinite(max_logit)) throw Error("mask excludes every action");
  Vector p = Vector::Zero(logits.size());
  double z = 0.0;
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) {
      p(k) = std::exp(logits(k) - max_logit);
      z += p(k);
    }
  }
  return p / z;
}

double softmax_ce(const Vector& logits, ActionId target, std::span<const std::uint8_t> mask,
                  Vector* grad_logits) {
  if (target < 0 || target >= logits.size()) {
    throw Error("target " + std::to_string(target) + " outside " + std::to_string(logits.size()) +
                " logits");
  }
  if (static_cast<Eigen::Index>(mask.size()) != logits.size()) {
    throw Error("mask length does not match logits");
  }
  if (!mask[static_cast<std::size_t>(target)]) throw Error("target action is masked out");

  double max_logit = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) max_logit = std::max(max_logit, logits(k));
  }
  double z = 0.0;
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) z += std::exp(logits(k) - max_logit);
  }
  const double log_z = std::log(z) + max_logit;
  if (grad_logits != nullptr) {
    grad_logits->resize(logits.size());
    for (Eigen::Index k = 0; k < logits.size(); ++k) {
      (*grad_logits)(k) = mask[static_cast<std::size_t>(k)] ? std::exp(logits(k) - log_z) : 0.0;
    }
    (*grad_logits)(target) -= 1.0;
  }
  return log_z - logits(target);
}

double bow_sigmoid_ce(const Vector& logits, std::span<const std::uint8_t> target,
                      Vector* grad_logits) {
  if (static_cast<Eigen::Index>(target.size()) != logits.size()) {
    throw Error("BoW target length does not match logits");
  }
  if (grad_logits != nullptr) grad_logits->resize(logits.size());
  double loss = 0.0;
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    const std::uint8_t t = target[static_cast<std::size_t>(k)];
    if (t > 1) throw Error("BoW target must be binary");
    const double l = logits(k);
    loss += std::max(l, 0.0) - l * t + std::log1p(std::exp(-std::abs(l)));
    if (grad_logits != nullptr) (*grad_logits)(k) = logistic(l) - t;
  }
  return loss;
}

double gaussian_kl(const Vector& mu, const Vector& sigma, Vector* grad_mu, Vector* grad_sigma) {
  if (mu.size() != sigma.size()) throw Error("gaussian_kl: mu and sigma lengths differ");
  double kl = 0.0;
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    const double s = sigma(j);
    if (!(s > 0.0) || !std::isfinite(s)) throw Error("gaussian_kl: sigma must be positive and finite");
    kl += -0.5 * (1.0 + 2.0 * std::log(s) - mu(j) * mu(j) - s * s);
  }
  if (grad_mu != nullptr) *grad_mu = mu;
  if (grad_sigma != nullptr) *grad_sigma = sigma - sigma.cwiseInverse();
  return kl;
}

Vector reparameterize(const Vector& mu, const Vector& sigma, const Vector& noise) {
  if (mu.size() != sigma.size() || mu.size() != noise.size()) {
    throw Error("reparameterize: mu, sigma and noise lengths differ");
  }
  return mu + sigma.cwiseProduct(noise);
}

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  if (state.first_moment.empty() && state.step == 0) {
    for (const Parameter* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw Error("Adam state tracks " + std::to_string(state.first_moment.size()) +
                " parameters, got " + std::to_string(params.size()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
      throw Error("Adam shape mismatch for parameter '" + p.name + "'");
    }
    if (!p.trainable) continue;
    m = state.beta1 * m + (1.0 - state.beta1) * p.grad;
    v = state.beta2 * v + (1.0 - state.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= state.learning_rate * (m.array() / c1) /
                       ((v.array() / c2).sqrt() + state.epsilon);
  }
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    if (p->trainable) sq += p->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (Parameter* p : params) {
      if (p->trainable) p->grad *= scale;
    }
  }
  return norm;
}

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> point, std::span<const double> analytic,
                           double h, double abs_floor) {
  if (point.size() != analytic.size()) throw Error("grad_check: point and gradient sizes differ");
  std::vector<double> x(point.begin(), point.end());
  GradCheckResult result;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double plus = f(x);
    x[i] = saved - h;
    const double minus = f(x);
    x[i] = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double a = analytic[i];
    if (!std::isfinite(plus) || !std::isfinite(minus) || !std::isfinite(a)) {
      throw Error("grad_check: non-finite value at coordinate " + std::to_string(i));
    }
    const double err = std::max(0.0, std::abs(a - numeric) - abs_floor) /
                      std::max(1e-8, std::abs(a) + std::abs(numeric));
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
    }
  }
  return result;
}

void init_glorot_uniform(Matrix& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
  }
}

void init_normal(Matrix& m, Rng& rng, double stddev) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = stddev * rng.normal();
  }
}

void init_orthogonal(Matrix& m, Rng& rng) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  const bool tall = rows >= cols;
  Matrix gaussian(tall ? rows : cols, tall ? cols : rows);
  init_normal(gaussian, rng, 1.0);
  Eigen::HouseholderQR<Matrix> qr(gaussian);
  Matrix q = qr.householderQ() * Matrix::Identity(gaussian.rows(), gaussian.cols());
  // Sign fix so the result is uniformly distributed over orthogonal matrices.
  const Matrix r = qr.matrixQR().topRows(gaussian.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    if (r(k, k) < 0.0) q.col(k) *= -1.0;
  }
  m = tall ? q : Matrix(q.transpose());
}

void init_lstm(Matrix& w, Matrix& b, Eigen::Index input_size, Rng& rng) {
  const Eigen::Index hidden = w.rows() / 4;
  Matrix input_block(w.rows(), input_size);
  init_glorot_uniform(input_block, rng);
  w.leftCols(input_size) = input_block;
  for (int gate = 0; gate < 4; ++gate) {
    Matrix block(hidden, hidden);
    init_orthogonal(block, rng);
    w.block(gate * hidden, input_size, hidden, hidden) = block;
  }
  b.setZero();
  b.block(hidden, 0, hidden, 1).setConstant(1.0);
}

}  // namespace oodhcn::nn
