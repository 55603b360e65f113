#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace induct {

using Real = double;

// Sentinel for masked attention logits. Masked entries are skipped inside the
// softmax instead of being exponentiated.
inline constexpr Real kMasked = -std::numeric_limits<Real>::infinity();

inline bool is_masked(Real x) { return x == kMasked; }

// Dense real matrix, row-major.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Real> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, Real fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static Matrix identity(std::size_t n);

  Real& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  Real operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::vector<Real> col(std::size_t j) const;
  std::vector<Real> row(std::size_t i) const;
  void set_col(std::size_t j, std::span<const Real> v);
  // Writes src into the block with upper-left corner (i0, j0).
  void set_block(std::size_t i0, std::size_t j0, const Matrix& src);

  Matrix transposed() const;
  bool all_finite() const;

  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend Matrix operator+(const Matrix& a, const Matrix& b);
  friend Matrix operator-(const Matrix& a, const Matrix& b);
  Matrix& operator+=(const Matrix& other);
  Matrix& operator*=(Real s);
};

std::vector<Real> matvec(const Matrix& a, std::span<const Real> x);

Real max_abs(std::span<const Real> v);
Real max_abs_diff(std::span<const Real> a, std::span<const Real> b);

// Frobenius norm and entrywise absolute sum (the (1,1) norm).
Real frobenius_norm(const Matrix& a);
Real entry_abs_sum(const Matrix& a);
// Spectral norm by power iteration on A^T A.
Real spectral_norm(const Matrix& a, int iters = 200);

// Softmax of a logit vector with masked entries mapping to exact 0.
// Subtracts the per-vector max over unmasked entries before exponentiation.
// Throws std::invalid_argument if every entry is masked.
std::vector<Real> softmax_masked(std::span<const Real> logits);

// Column-wise masked softmax: every column must contain at least one unmasked
// entry. Output columns are nonnegative and sum to 1.
Matrix column_softmax(const Matrix& logits);

// SplitMix64 stream. One instance per experiment run; substreams for parallel
// shards are derived by index. The algorithm is the public-domain SplitMix64:
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
// Gaussians come from a Box-Muller pair on two uniform draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  // Uniform in [0, 1), 53-bit resolution.
  Real next_double();
  Real next_uniform(Real lo, Real hi);
  // Standard normal.
  Real next_gaussian();
  // Uniform over {-1, +1}.
  Real next_sign();

  std::uint64_t seed() const { return seed_of_record_; }
  // Independent stream for shard `idx`, reproducible from the base seed.
  Rng substream(std::uint64_t idx) const;

 private:
  std::uint64_t state_;
  std::uint64_t seed_of_record_ = 0;
  bool have_spare_ = false;
  Real spare_ = 0.0;
};

// i.i.d. standard normal entries.
Matrix gaussian_sample(Rng& rng, std::size_t rows, std::size_t cols);
// i.i.d. uniform over {-1, +1}.
Matrix boolean_sample(Rng& rng, std::size_t rows, std::size_t cols);
// i.i.d. uniform over [lo, hi).
Matrix uniform_sample(Rng& rng, std::size_t rows, std::size_t cols, Real lo = 0.0, Real hi = 1.0);

// Minimum-norm least squares min ||A x - b||_2 by column-pivoted Householder
// QR with rank truncation at rcond * |R(0,0)|. Rank-deficient inputs are fine.
struct LstsqResult {
  std::vector<Real> x;
  std::size_t rank = 0;
};
LstsqResult lstsq(const Matrix& a, std::span<const Real> b, Real rcond = 1e-12);

// Ridge-regularized normal equations: (A^T A + lambda I) x = A^T b.
std::vector<Real> solve_ridge(const Matrix& a, std::span<const Real> b, Real lambda);

// Ordinary least-squares line fit y = slope * x + intercept.
struct LineFit {
  Real slope = 0.0;
  Real intercept = 0.0;
  Real r2 = 0.0;
};
LineFit line_fit(std::span<const Real> xs, std::span<const Real> ys);

}  // namespace induct
