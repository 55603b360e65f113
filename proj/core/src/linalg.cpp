#include "induct/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace induct {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<Real> Matrix::col(std::size_t j) const {
  std::vector<Real> v(rows);
  for (std::size_t i = 0; i < rows; ++i) v[i] = (*this)(i, j);
  return v;
}

std::vector<Real> Matrix::row(std::size_t i) const {
  return {data.begin() + static_cast<std::ptrdiff_t>(i * cols),
          data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols)};
}

void Matrix::set_col(std::size_t j, std::span<const Real> v) {
  for (std::size_t i = 0; i < rows; ++i) (*this)(i, j) = v[i];
}

void Matrix::set_block(std::size_t i0, std::size_t j0, const Matrix& src) {
  if (i0 + src.rows > rows || j0 + src.cols > cols) throw std::invalid_argument("set_block: out of range");
  for (std::size_t i = 0; i < src.rows; ++i)
    for (std::size_t j = 0; j < src.cols; ++j) (*this)(i0 + i, j0 + j) = src(i, j);
}

Matrix Matrix::transposed() const {
  Matrix t(cols, rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool Matrix::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](Real x) { return std::isfinite(x); });
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: dimension mismatch");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const Real aik = a(i, k);
      if (aik == 0.0) continue;
      const Real* brow = &b.data[k * b.cols];
      Real* crow = &c.data[i * c.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("add: dimension mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("sub: dimension mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
  return c;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (rows != other.rows || cols != other.cols) throw std::invalid_argument("add: dimension mismatch");
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
  return *this;
}

Matrix& Matrix::operator*=(Real s) {
  for (Real& x : data) x *= s;
  return *this;
}

std::vector<Real> matvec(const Matrix& a, std::span<const Real> x) {
  if (a.cols != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
  std::vector<Real> y(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    Real s = 0.0;
    const Real* row = &a.data[i * a.cols];
    for (std::size_t j = 0; j < a.cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

Real max_abs(std::span<const Real> v) {
  Real m = 0.0;
  for (Real x : v) m = std::max(m, std::abs(x));
  return m;
}

Real max_abs_diff(std::span<const Real> a, std::span<const Real> b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_abs_diff: size mismatch");
  Real m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Real frobenius_norm(const Matrix& a) {
  Real s = 0.0;
  for (Real x : a.data) s += x * x;
  return std::sqrt(s);
}

Real entry_abs_sum(const Matrix& a) {
  Real s = 0.0;
  for (Real x : a.data) s += std::abs(x);
  return s;
}

Real spectral_norm(const Matrix& a, int iters) {
  if (a.rows == 0 || a.cols == 0) return 0.0;
  std::vector<Real> v(a.cols, 1.0 / std::sqrt(static_cast<Real>(a.cols)));
  Real norm = 0.0;
  for (int it = 0; it < iters; ++it) {
    std::vector<Real> av = matvec(a, v);
    std::vector<Real> atav = matvec(a.transposed(), av);
    Real n = std::sqrt(std::inner_product(atav.begin(), atav.end(), atav.begin(), 0.0));
    if (n == 0.0) return 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = atav[i] / n;
    norm = std::sqrt(n);
  }
  return norm;
}

std::vector<Real> softmax_masked(std::span<const Real> logits) {
  Real mx = kMasked;
  for (Real x : logits)
    if (!is_masked(x)) mx = std::max(mx, x);
  if (is_masked(mx)) throw std::invalid_argument("softmax: fully masked logit vector (empty attention context)");
  std::vector<Real> out(logits.size(), 0.0);
  Real z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (is_masked(logits[i])) continue;
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (Real& x : out)
    if (x != 0.0) x /= z;
  return out;
}

Matrix column_softmax(const Matrix& logits) {
  Matrix out(logits.rows, logits.cols);
  std::vector<Real> colbuf(logits.rows);
  for (std::size_t j = 0; j < logits.cols; ++j) {
    for (std::size_t i = 0; i < logits.rows; ++i) colbuf[i] = logits(i, j);
    std::vector<Real> sm = softmax_masked(colbuf);
    out.set_col(j, sm);
  }
  return out;
}

std::uint64_t Rng::next_u64() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Real Rng::next_double() {
  return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53;
}

Real Rng::next_uniform(Real lo, Real hi) { return lo + (hi - lo) * next_double(); }

Real Rng::next_gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  Real u1 = 0.0;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  const Real u2 = next_double();
  const Real r = std::sqrt(-2.0 * std::log(u1));
  const Real theta = 2.0 * std::numbers::pi_v<Real> * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

Real Rng::next_sign() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

Rng Rng::substream(std::uint64_t idx) const {
  // Derive the substream seed by running SplitMix64 once on (state, idx).
  Rng mixer(state_ ^ (0xA0761D6478BD642FULL * (idx + 1)));
  return Rng(mixer.next_u64());
}

Matrix gaussian_sample(Rng& rng, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("gaussian_sample: dimensions must be positive");
  Matrix m(rows, cols);
  for (Real& x : m.data) x = rng.next_gaussian();
  return m;
}

Matrix boolean_sample(Rng& rng, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("boolean_sample: dimensions must be positive");
  Matrix m(rows, cols);
  for (Real& x : m.data) x = rng.next_sign();
  return m;
}

Matrix uniform_sample(Rng& rng, std::size_t rows, std::size_t cols, Real lo, Real hi) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("uniform_sample: dimensions must be positive");
  Matrix m(rows, cols);
  for (Real& x : m.data) x = rng.next_uniform(lo, hi);
  return m;
}

LstsqResult lstsq(const Matrix& a, std::span<const Real> b, Real rcond) {
  if (a.rows != b.size()) throw std::invalid_argument("lstsq: dimension mismatch");
  const std::size_t mr = a.rows, nc = a.cols;
  Matrix r = a;
  std::vector<Real> rhs(b.begin(), b.end());
  std::vector<std::size_t> perm(nc);
  for (std::size_t j = 0; j < nc; ++j) perm[j] = j;
  std::vector<Real> colnorm2(nc, 0.0);
  for (std::size_t j = 0; j < nc; ++j)
    for (std::size_t i = 0; i < mr; ++i) colnorm2[j] += r(i, j) * r(i, j);

  const std::size_t kmax = std::min(mr, nc);
  std::size_t rank = 0;
  Real r00 = 0.0;
  for (std::size_t k = 0; k < kmax; ++k) {
    // Column pivot: largest remaining column norm (recomputed; sizes are small).
    std::size_t piv = k;
    Real best = -1.0;
    for (std::size_t j = k; j < nc; ++j) {
      Real s = 0.0;
      for (std::size_t i = k; i < mr; ++i) s += r(i, j) * r(i, j);
      colnorm2[j] = s;
      if (s > best) {
        best = s;
        piv = j;
      }
    }
    if (piv != k) {
      for (std::size_t i = 0; i < mr; ++i) std::swap(r(i, k), r(i, piv));
      std::swap(perm[k], perm[piv]);
      std::swap(colnorm2[k], colnorm2[piv]);
    }
    Real normx = std::sqrt(best);
    if (k == 0) r00 = normx;
    if (normx <= rcond * r00 || normx == 0.0) break;
    // Householder reflector for column k.
    Real alpha = (r(k, k) >= 0.0) ? -normx : normx;
    std::vector<Real> v(mr - k);
    v[0] = r(k, k) - alpha;
    for (std::size_t i = k + 1; i < mr; ++i) v[i - k] = r(i, k);
    Real vnorm2 = 0.0;
    for (Real x : v) vnorm2 += x * x;
    if (vnorm2 > 0.0) {
      for (std::size_t j = k; j < nc; ++j) {
        Real dot = 0.0;
        for (std::size_t i = k; i < mr; ++i) dot += v[i - k] * r(i, j);
        const Real f = 2.0 * dot / vnorm2;
        for (std::size_t i = k; i < mr; ++i) r(i, j) -= f * v[i - k];
      }
      Real dot = 0.0;
      for (std::size_t i = k; i < mr; ++i) dot += v[i - k] * rhs[i];
      const Real f = 2.0 * dot / vnorm2;
      for (std::size_t i = k; i < mr; ++i) rhs[i] -= f * v[i - k];
    }
    r(k, k) = alpha;
    ++rank;
  }

  // Back-substitute on the leading rank x rank triangle.
  std::vector<Real> y(nc, 0.0);
  for (std::size_t ii = rank; ii-- > 0;) {
    Real s = rhs[ii];
    for (std::size_t j = ii + 1; j < rank; ++j) s -= r(ii, j) * y[j];
    y[ii] = s / r(ii, ii);
  }
  LstsqResult res;
  res.rank = rank;
  res.x.assign(nc, 0.0);
  for (std::size_t j = 0; j < nc; ++j) res.x[perm[j]] = y[j];
  return res;
}

std::vector<Real> solve_ridge(const Matrix& a, std::span<const Real> b, Real lambda) {
  if (a.rows != b.size()) throw std::invalid_argument("solve_ridge: dimension mismatch");
  const std::size_t n = a.cols;
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      Real s = 0.0;
      for (std::size_t k = 0; k < a.rows; ++k) s += a(k, i) * a(k, j);
      g(i, j) = s;
      g(j, i) = s;
    }
  for (std::size_t i = 0; i < n; ++i) g(i, i) += lambda;
  std::vector<Real> atb(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < a.rows; ++k) atb[i] += a(k, i) * b[k];
  // Cholesky.
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      Real s = g(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) throw std::domain_error("solve_ridge: matrix not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  std::vector<Real> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    Real s = atb[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * z[k];
    z[i] = s / l(i, i);
  }
  std::vector<Real> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    Real s = z[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

LineFit line_fit(std::span<const Real> xs, std::span<const Real> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("line_fit: need >= 2 points");
  const Real n = static_cast<Real>(xs.size());
  Real sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  LineFit f;
  const Real denom = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  Real ss_res = 0, ss_tot = 0;
  const Real ybar = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Real pred = f.slope * xs[i] + f.intercept;
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
  }
  f.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

}  // namespace induct
