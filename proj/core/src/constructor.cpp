#include "induct/constructor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>

namespace induct {

Real kernel_ell1_error(const std::vector<ExpTerm>& terms, int lag, int horizon) {
  Real err = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    Real phi = 0.0;
    for (const ExpTerm& term : terms) phi += term.alpha * std::exp(-term.beta * (t - 1));
    err += std::abs((t == lag ? 1.0 : 0.0) - phi);
  }
  for (const ExpTerm& term : terms)
    err += std::abs(term.alpha) * std::exp(-term.beta * horizon) / (1.0 - std::exp(-term.beta));
  return err;
}

KernelFit fit_indicator_kernel(int lag, const std::vector<Real>& rates, int horizon) {
  if (rates.empty()) throw std::invalid_argument("fit_indicator_kernel: need at least one rate");
  if (horizon < std::max(4 * lag, 64))
    throw std::invalid_argument("fit_indicator_kernel: horizon must be >= max(4*lag, 64)");
  std::set<Real> uniq(rates.begin(), rates.end());
  if (uniq.size() != rates.size()) throw std::invalid_argument("fit_indicator_kernel: duplicate rates");
  for (Real b : rates)
    if (b <= 0.0) throw std::invalid_argument("fit_indicator_kernel: rates must be positive");

  Matrix a(horizon, rates.size());
  std::vector<Real> y(horizon, 0.0);
  y[lag - 1] = 1.0;
  for (int t = 1; t <= horizon; ++t)
    for (std::size_t k = 0; k < rates.size(); ++k) a(t - 1, k) = std::exp(-rates[k] * (t - 1));
  const LstsqResult sol = lstsq(a, y);

  KernelFit fit;
  fit.lag = lag;
  fit.horizon = horizon;
  for (std::size_t k = 0; k < rates.size(); ++k) fit.terms.push_back({sol.x[k], rates[k]});
  fit.ell1_error = kernel_ell1_error(fit.terms, lag, horizon);
  return fit;
}

KernelFit fit_indicator_kernel(int lag, int n_terms, int horizon, BetaGridSpec grid) {
  if (n_terms < 1) throw std::invalid_argument("fit_indicator_kernel: n_terms must be >= 1");
  if (grid.beta0 <= 0.0) throw std::invalid_argument("fit_indicator_kernel: beta0 must be positive");
  std::vector<Real> rates(n_terms);
  for (int k = 0; k < n_terms; ++k) rates[k] = grid.beta0 * (k + 1);
  return fit_indicator_kernel(lag, rates, horizon);
}

std::vector<int> allocate_heads(int n, int H) {
  if (n < 2) throw std::invalid_argument("allocate_heads: n must be >= 2");
  if (H < n - 1) throw std::invalid_argument("allocate_heads: H must be >= n-1");
  const int nl = n - 1;
  std::vector<Real> weight(nl);
  Real total = 0.0;
  for (int i = 0; i < nl; ++i) {
    weight[i] = std::exp(0.01 * (i + 1));
    total += weight[i];
  }
  std::vector<int> alloc(nl);
  std::vector<Real> quota(nl), rem(nl);
  int assigned = 0;
  for (int i = 0; i < nl; ++i) {
    quota[i] = H * weight[i] / total;
    alloc[i] = std::max(1, static_cast<int>(std::floor(quota[i])));
    rem[i] = quota[i] - std::floor(quota[i]);
    assigned += alloc[i];
  }
  // Largest remainder for the shortfall; take from the largest if over.
  std::vector<int> order(nl);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  int k = 0;
  while (assigned < H) {
    ++alloc[order[k % nl]];
    ++assigned;
    ++k;
  }
  while (assigned > H) {
    const int j = static_cast<int>(std::max_element(alloc.begin(), alloc.end()) - alloc.begin());
    if (alloc[j] <= 1) throw std::logic_error("allocate_heads: cannot satisfy minimum of 1");
    --alloc[j];
    --assigned;
  }
  return alloc;
}

std::vector<KernelFit> fit_kernels(int n, int H, int horizon, BetaGridSpec grid) {
  const std::vector<int> alloc = allocate_heads(n, H);
  std::vector<KernelFit> fits;
  for (int i = 1; i <= n - 1; ++i) fits.push_back(fit_indicator_kernel(i, alloc[i - 1], horizon, grid));
  return fits;
}

TransformerParams build_ih2(const Matrix& w_star, Real p1) {
  if (p1 <= 0.0) throw std::invalid_argument("build_ih2: p1 must be positive");
  if (w_star.rows != w_star.cols) throw std::invalid_argument("build_ih2: w_star must be square");
  const std::size_t d = w_star.rows, D = 2 * d;

  TransformerParams tf;
  tf.w_e = Matrix(D, d);
  tf.w_e.set_block(0, 0, Matrix::identity(d));
  tf.b_e.assign(D, 0.0);

  LayerParams l1;
  HeadParams h1;
  h1.w_q = Matrix(D, D);
  h1.w_k = Matrix(D, D);
  h1.w_v = Matrix(D, D);
  h1.w_v.set_block(d, 0, Matrix::identity(d));  // lower shift block
  h1.rpe_slope = p1;
  l1.heads.push_back(std::move(h1));
  l1.w_o = Matrix::identity(D);
  l1.use_residual = true;
  tf.layers.push_back(std::move(l1));

  LayerParams l2;
  HeadParams h2;
  h2.w_q = Matrix(D, D);
  h2.w_q.set_block(d, 0, Matrix::identity(d));  // picks x_s into lower block
  h2.w_k = Matrix(D, D);
  h2.w_k.set_block(d, d, w_star);  // W* applied to y_tau
  h2.w_v = Matrix(D, D);
  h2.w_v.set_block(0, 0, Matrix::identity(d));
  h2.rpe_slope = 0.0;
  l2.heads.push_back(std::move(h2));
  l2.w_o = Matrix::identity(D);
  l2.use_residual = false;
  l2.key_floor = 2;  // the target softmax ranges over keys 2..L-1
  tf.layers.push_back(std::move(l2));

  Matrix readout(d, D);
  readout.set_block(0, 0, Matrix::identity(d));
  tf.readout = readout;
  return tf;
}

// Selectors mapping the hidden layout (x_s, xh_{s-1}, ..., xh_{s-n+1}) to
// oldest-first patches. Query patch X_{s-n+2:s} block j comes from hidden
// block n-2-j; key patch X_{s-n+1:s-1} block j from hidden block n-1-j.
static Matrix query_selector(int n, std::size_t d, std::size_t D) {
  Matrix q((n - 1) * d, D);
  for (int j = 0; j < n - 1; ++j)
    for (std::size_t r = 0; r < d; ++r) q(j * d + r, static_cast<std::size_t>(n - 2 - j) * d + r) = 1.0;
  return q;
}

static Matrix key_selector(int n, std::size_t d, std::size_t D) {
  Matrix k((n - 1) * d, D);
  for (int j = 0; j < n - 1; ++j)
    for (std::size_t r = 0; r < d; ++r) k(j * d + r, static_cast<std::size_t>(n - 1 - j) * d + r) = 1.0;
  return k;
}

static std::vector<HeadParams> kernel_heads(int n, std::size_t d, std::size_t D,
                                            const std::vector<KernelFit>& fits) {
  if (static_cast<int>(fits.size()) != n - 1)
    throw std::invalid_argument("build: need one kernel fit per lag 1..n-1");
  std::vector<HeadParams> heads;
  for (int i = 1; i <= n - 1; ++i) {
    const KernelFit& fit = fits[i - 1];
    if (fit.lag != i) throw std::invalid_argument("build: kernel fits must be ordered by lag");
    for (const ExpTerm& term : fit.terms) {
      HeadParams h;
      h.w_q = Matrix(D, D);
      h.w_k = Matrix(D, D);
      h.w_v = Matrix(D, D);
      // Shift block scaled by alpha and the geometric normalizer, undoing the
      // softmax partition function in the long-context limit.
      const Real scale = term.alpha / (1.0 - std::exp(-term.beta));
      for (std::size_t r = 0; r < d; ++r) h.w_v(static_cast<std::size_t>(i) * d + r, r) = scale;
      h.rpe_slope = term.beta;
      heads.push_back(std::move(h));
    }
  }
  return heads;
}

TransformerParams build_ihn(int n, const Matrix& w_star, const std::vector<KernelFit>& fits) {
  if (n < 2 || n > 100) throw std::invalid_argument("build_ihn: n must be in [2, 100]");
  int H = 0;
  for (const KernelFit& f : fits) H += static_cast<int>(f.terms.size());
  if (H < n - 1) throw std::invalid_argument("build_ihn: H must be >= n-1");
  if (w_star.rows != w_star.cols) throw std::invalid_argument("build_ihn: w_star must be square");
  if (w_star.rows % (n - 1) != 0) throw std::invalid_argument("build_ihn: w_star must be (n-1)d x (n-1)d");
  const std::size_t d = w_star.rows / (n - 1);
  const std::size_t D = static_cast<std::size_t>(n) * d;

  TransformerParams tf;
  tf.w_e = Matrix(D, d);
  tf.w_e.set_block(0, 0, Matrix::identity(d));
  tf.b_e.assign(D, 0.0);

  LayerParams l1;
  l1.heads = kernel_heads(n, d, D, fits);
  l1.w_o = Matrix::identity(D);
  l1.use_residual = true;
  tf.layers.push_back(std::move(l1));

  LayerParams l2;
  HeadParams h2;
  h2.w_q = Matrix(D, D);
  h2.w_q.set_block(0, 0, query_selector(n, d, D));
  h2.w_k = Matrix(D, D);
  h2.w_k.set_block(0, 0, w_star * key_selector(n, d, D));
  h2.w_v = Matrix(D, D);
  h2.w_v.set_block(0, 0, Matrix::identity(d));
  h2.rpe_slope = 0.0;
  l2.heads.push_back(std::move(h2));
  l2.w_o = Matrix::identity(D);
  l2.use_residual = false;
  l2.key_floor = static_cast<std::size_t>(n);  // target softmax ranges over keys n..L-1
  tf.layers.push_back(std::move(l2));

  Matrix readout(d, D);
  readout.set_block(0, 0, Matrix::identity(d));
  tf.readout = readout;
  return tf;
}

Real measure_patch_error(const TransformerParams& params, int n, const std::vector<Matrix>& seqs) {
  const std::size_t d = params.token_dim();
  Real worst = 0.0;
  for (const Matrix& seq : seqs) {
    const std::size_t L = seq.cols;
    const Matrix z = forward_layers(seq, params, 1);
    for (std::size_t s = static_cast<std::size_t>(n); s <= L; ++s) {
      for (int i = 0; i < n; ++i)
        for (std::size_t r = 0; r < d; ++r)
          worst = std::max(worst, std::abs(z(static_cast<std::size_t>(i) * d + r, s - 1) - seq(r, s - 1 - i)));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// POD machinery

PODSpec synthetic_pod(Real alpha, std::size_t k_max, std::size_t dim) {
  PODSpec pod;
  pod.alpha = alpha;
  pod.dim = dim;
  pod.sigma.resize(k_max);
  for (std::size_t k = 0; k < k_max; ++k) pod.sigma[k] = std::pow(static_cast<Real>(k + 1), -(1.0 + alpha));
  const Real pi = std::numbers::pi_v<Real>;
  const Real amp = std::pow(std::sqrt(2.0), static_cast<Real>(dim));
  for (std::size_t k = 1; k <= k_max; ++k) {
    // Orthonormal on [-2,2]^dim under the uniform probability measure.
    pod.phi.push_back([k, dim, pi](std::span<const Real> u) {
      Real v = 1.0;
      for (std::size_t j = 0; j < dim; ++j) v *= std::sqrt(2.0) * std::cos(k * pi * (u[j] + 2.0) / 4.0);
      return v;
    });
    pod.psi.push_back([k, dim, pi](std::span<const Real> u) {
      Real v = 1.0;
      for (std::size_t j = 0; j < dim; ++j) v *= std::sqrt(2.0) * std::sin(k * pi * (u[j] + 2.0) / 4.0);
      return v;
    });
  }
  pod.c_inf = amp;
  pod.c_lip = amp * static_cast<Real>(k_max) * pi / 4.0 * std::sqrt(static_cast<Real>(dim));
  return pod;
}

SimilarityFn pod_truncate(const PODSpec& pod, std::size_t K) {
  if (K < 1 || K > pod.k_max()) throw std::invalid_argument("pod_truncate: K out of range");
  std::vector<Real> sigma(pod.sigma.begin(), pod.sigma.begin() + K);
  std::vector<BasisFn> phi(pod.phi.begin(), pod.phi.begin() + K);
  std::vector<BasisFn> psi(pod.psi.begin(), pod.psi.begin() + K);
  return [sigma, phi, psi](std::span<const Real> u, std::span<const Real> v) {
    Real g = 0.0;
    for (std::size_t k = 0; k < sigma.size(); ++k) g += sigma[k] * phi[k](u) * psi[k](v);
    return g;
  };
}

std::size_t choose_K(std::size_t M, std::size_t L, Real alpha, std::size_t k_max, Real c1, Real c2) {
  if (k_max < 1) throw std::invalid_argument("choose_K: k_max must be >= 1");
  std::size_t best = 1;
  Real best_val = std::numeric_limits<Real>::infinity();
  for (std::size_t K = 1; K <= k_max; ++K) {
    const Real val = c1 * std::sqrt(static_cast<Real>(K) * std::log(static_cast<Real>(M)) / M) +
                     c2 * static_cast<Real>(L) / std::pow(static_cast<Real>(K), alpha);
    if (val < best_val) {
      best_val = val;
      best = K;
    }
  }
  return best;
}

Real ScalarFFN::eval(std::span<const Real> x) const {
  Real out = 0.0;
  for (std::size_t j = 0; j < w_in.rows; ++j) {
    Real z = b_in[j];
    for (std::size_t i = 0; i < w_in.cols; ++i) z += w_in(j, i) * x[i];
    if (z > 0.0) out += w_out[j] * z;
  }
  return out;
}

ScalarFFN fit_basis_ffn(const BasisFn& f, std::size_t m, std::size_t dim, Real half_width,
                        std::size_t n_train, Rng& rng) {
  if (m < 2) throw std::invalid_argument("fit_basis_ffn: width must be >= 2");
  // Separate substreams so the feature set is nested across widths and the
  // train/held-out samples do not depend on m.
  Rng feat_rng = rng.substream(1);
  Rng train_rng = rng.substream(2);
  Rng held_rng = rng.substream(3);

  ScalarFFN net;
  net.w_in = Matrix(m, dim);
  net.b_in.assign(m, 0.0);
  const Real reach = half_width * std::sqrt(static_cast<Real>(dim));
  // Units 0 and 1: fixed opposite-direction pair with kinks outside the box,
  // so they are affine on it and span affine functions of the first coordinate.
  net.w_in(0, 0) = 1.0;
  net.b_in[0] = reach * (1.0 + 1e-9);
  net.w_in(1, 0) = -1.0;
  net.b_in[1] = reach * (1.0 + 1e-9);
  for (std::size_t j = 2; j < m; ++j) {
    Real norm2 = 0.0;
    std::vector<Real> dir(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      dir[i] = feat_rng.next_gaussian();
      norm2 += dir[i] * dir[i];
    }
    const Real norm = std::sqrt(std::max(norm2, 1e-300));
    for (std::size_t i = 0; i < dim; ++i) net.w_in(j, i) = dir[i] / norm;
    net.b_in[j] = feat_rng.next_uniform(-reach, reach);
  }

  const std::size_t n_held = std::max<std::size_t>(512, n_train / 4);
  Matrix feats(n_train, m);
  std::vector<Real> y(n_train);
  std::vector<Real> pt(dim);
  for (std::size_t r = 0; r < n_train; ++r) {
    for (std::size_t i = 0; i < dim; ++i) pt[i] = train_rng.next_uniform(-half_width, half_width);
    y[r] = f(pt);
    for (std::size_t j = 0; j < m; ++j) {
      Real z = net.b_in[j];
      for (std::size_t i = 0; i < dim; ++i) z += net.w_in(j, i) * pt[i];
      feats(r, j) = std::max(z, 0.0);
    }
  }
  const LstsqResult sol = lstsq(feats, y);
  if (sol.rank < m) {
    net.ridge_fallback = true;
    net.w_out = solve_ridge(feats, y, 1e-8);
  } else {
    net.w_out = sol.x;
  }

  Real worst = 0.0;
  for (std::size_t r = 0; r < n_held; ++r) {
    for (std::size_t i = 0; i < dim; ++i) pt[i] = held_rng.next_uniform(-half_width, half_width);
    worst = std::max(worst, std::abs(net.eval(pt) - f(pt)));
  }
  net.heldout_max_error = worst;
  return net;
}

TransformerParams build_gihn(int n, std::size_t d, const PODSpec& pod, std::size_t K,
                             const std::vector<ScalarFFN>& phi_hats, const std::vector<ScalarFFN>& psi_hats,
                             const std::vector<KernelFit>& fits) {
  if (K < 1 || K > pod.k_max()) throw std::invalid_argument("build_gihn: K out of range");
  if (phi_hats.size() != K || psi_hats.size() != K)
    throw std::invalid_argument("build_gihn: need K fitted phi and psi networks");
  const std::size_t patch_dim = static_cast<std::size_t>(n - 1) * d;
  if (pod.dim != patch_dim) throw std::invalid_argument("build_gihn: pod dimension mismatch");
  int H = 0;
  for (const KernelFit& f : fits) H += static_cast<int>(f.terms.size());
  if (H < n - 1) throw std::invalid_argument("build_gihn: H must be >= n-1");
  const std::size_t nd = static_cast<std::size_t>(n) * d;
  const std::size_t D = nd + 2 * static_cast<std::size_t>(n - 1) * K;
  const std::size_t phi_base = nd;                                        // phi-hat coordinates
  const std::size_t psi_base = nd + static_cast<std::size_t>(n - 1) * K;  // psi-hat coordinates

  TransformerParams tf;
  tf.w_e = Matrix(D, d);
  tf.w_e.set_block(0, 0, Matrix::identity(d));
  tf.b_e.assign(D, 0.0);

  LayerParams l1;
  l1.heads = kernel_heads(n, d, D, fits);
  l1.w_o = Matrix::identity(D);
  l1.use_residual = true;

  // First-layer FFN: 2K scalar networks in parallel. phi-hat nets read the
  // query patch of each token, psi-hat nets its key patch; outputs land in
  // the reserved coordinates (the FFN residual adds them to zeros).
  const Matrix q_sel = query_selector(n, d, D);
  const Matrix k_sel = key_selector(n, d, D);
  std::size_t width = 0;
  for (const ScalarFFN& s : phi_hats) width += s.w_in.rows;
  for (const ScalarFFN& s : psi_hats) width += s.w_in.rows;
  FFNParams ffn;
  ffn.w_in = Matrix(width, D);
  ffn.b_in.assign(width, 0.0);
  ffn.w_out = Matrix(D, width);
  std::size_t row = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const ScalarFFN& net = phi_hats[k];
    ffn.w_in.set_block(row, 0, net.w_in * q_sel);
    for (std::size_t j = 0; j < net.w_in.rows; ++j) {
      ffn.b_in[row + j] = net.b_in[j];
      ffn.w_out(phi_base + k, row + j) = net.w_out[j];
    }
    row += net.w_in.rows;
  }
  for (std::size_t k = 0; k < K; ++k) {
    const ScalarFFN& net = psi_hats[k];
    ffn.w_in.set_block(row, 0, net.w_in * k_sel);
    for (std::size_t j = 0; j < net.w_in.rows; ++j) {
      ffn.b_in[row + j] = net.b_in[j];
      ffn.w_out(psi_base + k, row + j) = net.w_out[j];
    }
    row += net.w_in.rows;
  }
  l1.ffn = std::move(ffn);
  tf.layers.push_back(std::move(l1));

  LayerParams l2;
  HeadParams h2;
  h2.w_q = Matrix(D, D);
  h2.w_k = Matrix(D, D);
  for (std::size_t k = 0; k < K; ++k) {
    const Real root = std::sqrt(pod.sigma[k]);
    h2.w_q(k, phi_base + k) = root;
    h2.w_k(k, psi_base + k) = root;
  }
  h2.w_v = Matrix(D, D);
  h2.w_v.set_block(0, 0, Matrix::identity(d));
  h2.rpe_slope = 0.0;
  l2.heads.push_back(std::move(h2));
  l2.w_o = Matrix::identity(D);
  l2.use_residual = false;
  l2.key_floor = static_cast<std::size_t>(n);
  tf.layers.push_back(std::move(l2));

  Matrix readout(d, D);
  readout.set_block(0, 0, Matrix::identity(d));
  tf.readout = readout;
  return tf;
}

TransformerParams build_gihn_auto(int n, std::size_t d, const PODSpec& pod, std::size_t K, std::size_t M,
                                  int H, int horizon, Rng& rng) {
  const std::vector<KernelFit> fits = fit_kernels(n, H, horizon);
  const std::size_t per_net = std::max<std::size_t>(2, M / (2 * K));
  std::vector<ScalarFFN> phi_hats, psi_hats;
  for (std::size_t k = 0; k < K; ++k)
    phi_hats.push_back(fit_basis_ffn(pod.phi[k], per_net, pod.dim, 2.0, 4096, rng));
  for (std::size_t k = 0; k < K; ++k)
    psi_hats.push_back(fit_basis_ffn(pod.psi[k], per_net, pod.dim, 2.0, 4096, rng));
  return build_gihn(n, d, pod, K, phi_hats, psi_hats, fits);
}

GihnErrorTerms measure_gihn_decomposition(const TransformerParams& model, int n, std::size_t d,
                                          const PODSpec& pod, std::size_t K, std::size_t L,
                                          std::size_t n_samples, Dist dist, Rng& rng) {
  const std::size_t nn = static_cast<std::size_t>(n);
  const SimilarityFn g_k = pod_truncate(pod, K);
  const SimilarityFn g_full = pod_truncate(pod, pod.k_max());

  // Weighted-value output over keys n..L-1 given per-key logits.
  const auto combine = [&](const Matrix& seq, const std::vector<Real>& logits) {
    const std::vector<Real> w = softmax_masked(logits);
    std::vector<Real> out(d, 0.0);
    for (std::size_t s = nn; s <= L - 1; ++s)
      for (std::size_t i = 0; i < d; ++i) out[i] += w[s - nn] * seq(i, s - 1);
    return out;
  };

  const auto hat_patch_query = [&](const Matrix& z, std::size_t s) {  // X^hat_{s-n+2:s}
    std::vector<Real> u((nn - 1) * d);
    for (std::size_t j = 0; j < nn - 1; ++j)
      for (std::size_t r = 0; r < d; ++r) u[j * d + r] = z((nn - 2 - j) * d + r, s - 1);
    return u;
  };
  const auto hat_patch_key = [&](const Matrix& z, std::size_t s) {  // X^hat_{s-n+1:s-1}
    std::vector<Real> v((nn - 1) * d);
    for (std::size_t j = 0; j < nn - 1; ++j)
      for (std::size_t r = 0; r < d; ++r) v[j * d + r] = z((nn - 1 - j) * d + r, s - 1);
    return v;
  };

  Real acc_total = 0.0, acc_ffn = 0.0, acc_patch = 0.0, acc_trunc = 0.0;
  for (std::size_t it = 0; it < n_samples; ++it) {
    const Matrix seq = sample_sequence(dist, rng, d, L);
    const std::vector<Real> out_model = forward_last(seq, model);
    const Matrix z1 = forward_layers(seq, model, 1);

    const std::vector<Real> q_hat = hat_patch_query(z1, L);
    const std::vector<Real> q_true = stack_patch(seq, L - nn + 2, L);
    std::vector<Real> lg_k_hat(L - nn), lg_k_true(L - nn), lg_full(L - nn);
    for (std::size_t s = nn; s <= L - 1; ++s) {
      const std::vector<Real> key_hat = hat_patch_key(z1, s);
      const std::vector<Real> key_true = stack_patch(seq, s - nn + 1, s - 1);
      lg_k_hat[s - nn] = g_k(q_hat, key_hat);
      lg_k_true[s - nn] = g_k(q_true, key_true);
      lg_full[s - nn] = g_full(q_true, key_true);
    }
    const std::vector<Real> out_k_hat = combine(seq, lg_k_hat);
    const std::vector<Real> out_k_true = combine(seq, lg_k_true);
    const std::vector<Real> out_full = combine(seq, lg_full);

    const auto sq = [](Real x) { return x * x; };
    acc_total += sq(max_abs_diff(out_model, out_full));
    acc_ffn += sq(max_abs_diff(out_model, out_k_hat));
    acc_patch += sq(max_abs_diff(out_k_hat, out_k_true));
    acc_trunc += sq(max_abs_diff(out_k_true, out_full));
  }
  const Real inv = 1.0 / static_cast<Real>(n_samples);
  GihnErrorTerms terms;
  terms.total = std::sqrt(acc_total * inv);
  terms.term_ffn = std::sqrt(acc_ffn * inv);
  terms.term_patch = std::sqrt(acc_patch * inv);
  terms.term_trunc = std::sqrt(acc_trunc * inv);
  return terms;
}

}  // namespace induct
