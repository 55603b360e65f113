#include "induct/targets.hpp"

#include <cmath>
#include <stdexcept>

namespace induct {

std::vector<Real> stack_patch(const Matrix& seq, std::size_t m, std::size_t n) {
  const std::size_t d = seq.rows;
  std::vector<Real> patch((n - m + 1) * d);
  for (std::size_t t = m; t <= n; ++t)
    for (std::size_t i = 0; i < d; ++i) patch[(t - m) * d + i] = seq(i, t - 1);
  return patch;
}

std::vector<Real> eval_ih2(const Matrix& seq, const Matrix& w_star) {
  const std::size_t d = seq.rows, L = seq.cols;
  if (L < 3) throw std::invalid_argument("eval_ih2: L must be >= 3");
  if (w_star.rows != d || w_star.cols != d) throw std::invalid_argument("eval_ih2: w_star must be d x d");
  const std::vector<Real> xl = seq.col(L - 1);
  const std::vector<Real> wx = matvec(w_star.transposed(), xl);  // (x_L^T W)_j
  std::vector<Real> logits(L - 2);
  for (std::size_t s = 2; s <= L - 1; ++s) {
    Real dot = 0.0;
    for (std::size_t i = 0; i < d; ++i) dot += wx[i] * seq(i, s - 2);  // x_{s-1}
    logits[s - 2] = dot;
  }
  const std::vector<Real> w = softmax_masked(logits);
  std::vector<Real> out(d, 0.0);
  for (std::size_t s = 2; s <= L - 1; ++s)
    for (std::size_t i = 0; i < d; ++i) out[i] += w[s - 2] * seq(i, s - 1);
  return out;
}

std::vector<Real> eval_ihn(const Matrix& seq, int n, const Matrix& w_star) {
  const std::size_t d = seq.rows, L = seq.cols;
  if (n < 2 || n > 100) throw std::invalid_argument("eval_ihn: n must be in [2, 100]");
  const std::size_t nn = static_cast<std::size_t>(n);
  if (L <= nn) throw std::invalid_argument("eval_ihn: L must be >= n+1");
  const std::size_t pd = (nn - 1) * d;
  if (w_star.rows != pd || w_star.cols != pd)
    throw std::invalid_argument("eval_ihn: w_star must be (n-1)d x (n-1)d");
  const std::vector<Real> q = stack_patch(seq, L - nn + 2, L);
  const std::vector<Real> qw = matvec(w_star.transposed(), q);  // (q^T W)_j
  std::vector<Real> logits(L - nn);
  for (std::size_t s = nn; s <= L - 1; ++s) {
    const std::vector<Real> key = stack_patch(seq, s - nn + 1, s - 1);
    Real dot = 0.0;
    for (std::size_t i = 0; i < pd; ++i) dot += qw[i] * key[i];
    logits[s - nn] = dot;
  }
  const std::vector<Real> w = softmax_masked(logits);
  std::vector<Real> out(d, 0.0);
  for (std::size_t s = nn; s <= L - 1; ++s)
    for (std::size_t i = 0; i < d; ++i) out[i] += w[s - nn] * seq(i, s - 1);
  return out;
}

std::vector<Real> eval_gihn(const Matrix& seq, int n, const SimilarityFn& g) {
  const std::size_t d = seq.rows, L = seq.cols;
  if (n < 2 || n > 100) throw std::invalid_argument("eval_gihn: n must be in [2, 100]");
  const std::size_t nn = static_cast<std::size_t>(n);
  if (L <= nn) throw std::invalid_argument("eval_gihn: L must be >= n+1");
  const std::vector<Real> q = stack_patch(seq, L - nn + 2, L);
  std::vector<Real> logits(L - nn);
  for (std::size_t s = nn; s <= L - 1; ++s) {
    const std::vector<Real> key = stack_patch(seq, s - nn + 1, s - 1);
    logits[s - nn] = g(q, key);
  }
  const std::vector<Real> w = softmax_masked(logits);
  std::vector<Real> out(d, 0.0);
  for (std::size_t s = nn; s <= L - 1; ++s)
    for (std::size_t i = 0; i < d; ++i) out[i] += w[s - nn] * seq(i, s - 1);
  return out;
}

std::array<Real, 2> eval_mixed(const Matrix& seq, Real alpha_star, Real w_star) {
  if (seq.rows != 1) throw std::invalid_argument("eval_mixed: token dimension must be 1");
  const std::size_t L = seq.cols;
  if (L < 4) throw std::invalid_argument("eval_mixed: L must be >= 4");
  Matrix w(1, 1);
  w(0, 0) = w_star * w_star;
  const std::vector<Real> ih = eval_ih2(seq, w);
  return {alpha_star / (1 + alpha_star) * seq(0, L - 3), ih[0] / (1 + alpha_star)};
}

std::vector<Real> eval_target(const InductionTarget& target, const Matrix& seq) {
  return std::visit(
      [&](const auto& t) -> std::vector<Real> {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, IH2Target>) {
          return eval_ih2(seq, t.w_star);
        } else if constexpr (std::is_same_v<T, IHnTarget>) {
          return eval_ihn(seq, t.n, t.w_star);
        } else if constexpr (std::is_same_v<T, GIHnTarget>) {
          return eval_gihn(seq, t.n, t.g);
        } else if constexpr (std::is_same_v<T, FourGramTarget>) {
          if (seq.cols < 3) throw std::invalid_argument("four-gram: L must be >= 3");
          return seq.col(seq.cols - 3);
        } else {
          const std::array<Real, 2> v = eval_mixed(seq, t.alpha_star, t.w_star);
          return {v[0], v[1]};
        }
      },
      target);
}

Matrix sample_sequence(Dist dist, Rng& rng, std::size_t d, std::size_t L) {
  switch (dist) {
    case Dist::gaussian:
      return gaussian_sample(rng, d, L);
    case Dist::boolean:
      return boolean_sample(rng, d, L);
    case Dist::uniform01:
      return uniform_sample(rng, d, L, 0.0, 1.0);
  }
  throw std::logic_error("sample_sequence: unknown distribution");
}

Real approx_error_fn(const SeqFn& target, const SeqFn& model, std::size_t d, std::size_t L, Real p_norm,
                     std::size_t n_samples, Dist dist, Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("approx_error: n_samples must be >= 1");
  const bool sup_mode = std::isinf(p_norm);
  if (!sup_mode && p_norm != 2.0) throw std::invalid_argument("approx_error: p must be 2 or inf");
  Real acc = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const Matrix x = sample_sequence(dist, rng, d, L);
    const std::vector<Real> t = target(x);
    const std::vector<Real> m = model(x);
    const Real gap = max_abs_diff(t, m);
    if (sup_mode)
      acc = std::max(acc, gap);
    else
      acc += gap * gap;
  }
  return sup_mode ? acc : std::sqrt(acc / static_cast<Real>(n_samples));
}

Real approx_error(const InductionTarget& target, const TransformerParams& model, std::size_t L, Real p_norm,
                  std::size_t n_samples, Dist dist, Rng& rng) {
  const std::size_t d = model.token_dim();
  return approx_error_fn([&](const Matrix& x) { return eval_target(target, x); },
                         [&](const Matrix& x) { return forward_last(x, model); }, d, L, p_norm, n_samples,
                         dist, rng);
}

}  // namespace induct
