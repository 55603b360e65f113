#pragma once

#include <array>
#include <functional>
#include <variant>
#include <vector>

#include "induct/linalg.hpp"
#include "induct/transformer.hpp"

namespace induct {

// Similarity between two (n-1)*d patch vectors.
using SimilarityFn = std::function<Real(std::span<const Real>, std::span<const Real>)>;

struct IH2Target {
  Matrix w_star;  // d x d
};
struct IHnTarget {
  int n;
  Matrix w_star;  // (n-1)d x (n-1)d
};
struct GIHnTarget {
  int n;
  SimilarityFn g;
};
struct FourGramTarget {};
struct MixedTarget {
  Real alpha_star;
  Real w_star;  // in (0,1); d = 1
};

using InductionTarget = std::variant<IH2Target, IHnTarget, GIHnTarget, FourGramTarget, MixedTarget>;

// Patch X_{m:n} stacked oldest-token-first, tokens m..n inclusive (1-based).
std::vector<Real> stack_patch(const Matrix& seq, std::size_t m, std::size_t n);

std::vector<Real> eval_ih2(const Matrix& seq, const Matrix& w_star);
std::vector<Real> eval_ihn(const Matrix& seq, int n, const Matrix& w_star);
std::vector<Real> eval_gihn(const Matrix& seq, int n, const SimilarityFn& g);
std::array<Real, 2> eval_mixed(const Matrix& seq, Real alpha_star, Real w_star);
std::vector<Real> eval_target(const InductionTarget& target, const Matrix& seq);

enum class Dist { gaussian, boolean, uniform01 };
Matrix sample_sequence(Dist dist, Rng& rng, std::size_t d, std::size_t L);

// Monte-Carlo approximation-error estimate between two sequence functions.
// p = inf: max over samples of the sup-norm gap (a sampled lower bound on the
// true sup). p = 2: root-mean of squared sup-norm gaps.
using SeqFn = std::function<std::vector<Real>(const Matrix&)>;
Real approx_error_fn(const SeqFn& target, const SeqFn& model, std::size_t d, std::size_t L, Real p_norm,
                     std::size_t n_samples, Dist dist, Rng& rng);

Real approx_error(const InductionTarget& target, const TransformerParams& model, std::size_t L, Real p_norm,
                  std::size_t n_samples, Dist dist, Rng& rng);

}  // namespace induct
