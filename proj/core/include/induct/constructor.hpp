#pragma once

#include <functional>
#include <vector>

#include "induct/linalg.hpp"
#include "induct/targets.hpp"
#include "induct/transformer.hpp"

namespace induct {

// Memory-kernel machinery: indicator kernels 1{t = lag} approximated by sums
// of exponentials phi(t) = sum_k alpha_k exp(-beta_k (t-1)).

struct ExpTerm {
  Real alpha;
  Real beta;  // > 0
};

struct KernelFit {
  int lag = 0;
  std::vector<ExpTerm> terms;
  Real ell1_error = 0.0;  // finite-horizon l1 residual plus analytic tail
  int horizon = 0;
};

// Rates come in an arithmetic progression beta_k = beta0 * k, k = 1..H.
// Bases are then nested across head counts, and the progression makes the
// fit a polynomial regression in exp(-beta0 (t-1)).
struct BetaGridSpec {
  Real beta0 = 0.5;
};

// l1(N) distance between the indicator 1{t = lag} and the kernel, summed over
// t = 1..horizon plus the analytic geometric tail beyond the horizon.
Real kernel_ell1_error(const std::vector<ExpTerm>& terms, int lag, int horizon);

// Least-squares fit of the indicator on t = 1..horizon over the rate grid.
KernelFit fit_indicator_kernel(int lag, int n_terms, int horizon, BetaGridSpec grid = {});
// Same with explicit rates; duplicate rates are rejected.
KernelFit fit_indicator_kernel(int lag, const std::vector<Real>& rates, int horizon);

// Integer head allocation over lags 1..n-1, proportional to exp(0.01 i),
// largest-remainder rounding, each at least 1, summing to H.
std::vector<int> allocate_heads(int n, int H);

// Kernel fits for lags 1..n-1 with heads split by allocate_heads.
std::vector<KernelFit> fit_kernels(int n, int H, int horizon, BetaGridSpec grid = {});

// Two-layer single-head transformer realizing IH2 (D = 2d), first-layer RPE
// slope p1. Error decays like exp(-p1).
TransformerParams build_ih2(const Matrix& w_star, Real p1);

// Two-layer H-head transformer realizing IHn (D = nd). Fits must cover lags
// 1..n-1; the builder refuses H < n-1.
TransformerParams build_ihn(int n, const Matrix& w_star, const std::vector<KernelFit>& fits);

// Layer-1 patch error sup_s || z_s - X_{s-n+1:s} ||_inf over s = n..L,
// maximized over the given sequences.
Real measure_patch_error(const TransformerParams& params, int n, const std::vector<Matrix>& seqs);

// ---------------------------------------------------------------------------
// POD machinery for generalized induction heads.

using BasisFn = std::function<Real(std::span<const Real>)>;

struct PODSpec {
  Real alpha = 1.0;       // singular-value decay exponent: sigma_k = O(k^-(1+alpha))
  std::size_t dim = 1;    // patch dimension (n-1)*d
  std::vector<Real> sigma;  // nonincreasing, length K_max
  std::vector<BasisFn> phi;
  std::vector<BasisFn> psi;
  Real c_inf = 0.0;  // uniform bound on |phi_k|, |psi_k| over [-2,2]^dim
  Real c_lip = 0.0;  // uniform Lipschitz bound
  std::size_t k_max() const { return sigma.size(); }
};

// Synthetic test family: sigma_k = k^-(1+alpha), orthonormal trigonometric
// bases on [-2,2]^dim (cosine for phi, sine for psi), finite rank K_max.
PODSpec synthetic_pod(Real alpha, std::size_t k_max, std::size_t dim);

// Rank-K truncation g_K(u, v) = sum_{k<=K} sigma_k phi_k(u) psi_k(v).
SimilarityFn pod_truncate(const PODSpec& pod, std::size_t K);

// Minimizer of c1*sqrt(K log M / M) + c2 * L / K^alpha over K in 1..K_max.
std::size_t choose_K(std::size_t M, std::size_t L, Real alpha, std::size_t k_max, Real c1 = 1.0,
                     Real c2 = 1.0);

// Width-m two-layer ReLU fit of a scalar function on the box [-b, b]^dim by
// random features with solved outer weights. The first two hidden units are a
// fixed opposite-direction pair with kinks outside the box, so affine
// functions of the first coordinate are represented exactly.
struct ScalarFFN {
  Matrix w_in;               // m x dim
  std::vector<Real> b_in;    // m
  std::vector<Real> w_out;   // m
  Real heldout_max_error = 0.0;
  bool ridge_fallback = false;

  Real eval(std::span<const Real> x) const;
};

ScalarFFN fit_basis_ffn(const BasisFn& f, std::size_t m, std::size_t dim, Real half_width,
                        std::size_t n_train, Rng& rng);

// Two-layer H-head transformer with a width-M first-layer FFN realizing GIHn
// for a POD-described similarity. D = n*d + 2*(n-1)*K; phi-hat values live at
// coordinates nd..nd+K-1 and psi-hat values at nd+(n-1)K..nd+(n-1)K+K-1
// (0-based; the remaining reserved coordinates stay zero).
TransformerParams build_gihn(int n, std::size_t d, const PODSpec& pod, std::size_t K,
                             const std::vector<ScalarFFN>& phi_hats, const std::vector<ScalarFFN>& psi_hats,
                             const std::vector<KernelFit>& fits);

// Convenience: fit kernels and basis FFNs, then assemble. M is the total FFN
// width, split as M/(2K) per basis function.
TransformerParams build_gihn_auto(int n, std::size_t d, const PODSpec& pod, std::size_t K, std::size_t M,
                                  int H, int horizon, Rng& rng);

// Empirical three-term error decomposition for a built GIHn model against the
// full similarity, in the L2-of-sup metric over sampled sequences:
//   total <= term_ffn + term_patch + term_trunc  (triangle inequality)
struct GihnErrorTerms {
  Real total = 0.0;
  Real term_ffn = 0.0;    // fitted bases vs true bases, both on hatted patches
  Real term_patch = 0.0;  // true truncated similarity, hatted vs true patches
  Real term_trunc = 0.0;  // truncated vs full similarity on true patches
};
GihnErrorTerms measure_gihn_decomposition(const TransformerParams& model, int n, std::size_t d,
                                          const PODSpec& pod, std::size_t K, std::size_t L,
                                          std::size_t n_samples, Dist dist, Rng& rng);

}  // namespace induct
