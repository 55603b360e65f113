#include <cmath>

#include "doctest.h"
#include "induct/constructor.hpp"
#include "induct/linalg.hpp"
#include "induct/targets.hpp"
#include "induct/transformer.hpp"

using namespace induct;

TEST_CASE("rpe matrix conventions") {
  const Matrix r0 = rpe_matrix(0.0, 3);
  // Unmasked entries are 0; query s=3 attends keys {1,2}.
  CHECK(r0(0, 2) == 0.0);
  CHECK(r0(1, 2) == 0.0);
  CHECK(is_masked(r0(2, 2)));
  CHECK(is_masked(r0(0, 0)));

  const Matrix r1 = rpe_matrix(1.0, 3);
  CHECK(r1(0, 2) == -1.0);  // (tau=1, s=3): -(s - tau - 1)
  CHECK(r1(1, 2) == 0.0);   // (tau=2, s=3)

  // Slope 5, L=2: token 2's attention sits entirely on token 1.
  const Matrix r5 = rpe_matrix(5.0, 2);
  const std::vector<Real> w = softmax_masked(r5.col(1));
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 0.0);
}

TEST_CASE("head forward limits") {
  Rng rng(21);
  const std::size_t D = 3, L = 6;
  const Matrix z = gaussian_sample(rng, D, L);

  HeadParams shift;
  shift.w_q = Matrix(D, D);
  shift.w_k = Matrix(D, D);
  shift.w_v = Matrix::identity(D);
  shift.rpe_slope = 60.0;  // attention collapses onto the previous token
  const Matrix out = head_forward(z, shift);
  for (std::size_t s = 2; s <= L; ++s)
    for (std::size_t i = 0; i < D; ++i) CHECK(std::abs(out(i, s - 1) - z(i, s - 2)) < 1e-12);

  HeadParams zero = shift;
  zero.w_v = Matrix(D, D);
  const Matrix out0 = head_forward(z, zero);
  for (Real x : out0.data) CHECK(x == 0.0);

  // L=2: single-key softmax regardless of logits.
  HeadParams dp;
  dp.w_q = gaussian_sample(rng, D, D);
  dp.w_k = gaussian_sample(rng, D, D);
  dp.w_v = gaussian_sample(rng, D, D);
  const Matrix z2 = gaussian_sample(rng, D, 2);
  const Matrix o2 = head_forward(z2, dp);
  const std::vector<Real> expect = matvec(dp.w_v, z2.col(0));
  CHECK(max_abs_diff(o2.col(1), expect) < 1e-14);

  // First column has no context: zero output, flagged.
  std::vector<char> flagged;
  head_forward(z, shift, nullptr, 1, &flagged);
  CHECK(flagged[0] == 1);
  CHECK(flagged[1] == 0);
}

TEST_CASE("uniform attention equals direct averaging") {
  Rng rng(22);
  const std::size_t D = 2, L = 7;
  const Matrix z = gaussian_sample(rng, D, L);
  HeadParams uniform;
  uniform.w_q = Matrix(D, D);
  uniform.w_k = Matrix(D, D);
  uniform.w_v = Matrix::identity(D);
  uniform.rpe_slope = 0.0;
  const Matrix out = head_forward(z, uniform);
  for (std::size_t s = 2; s <= L; ++s) {
    for (std::size_t i = 0; i < D; ++i) {
      Real mean = 0.0;
      for (std::size_t tau = 1; tau < s; ++tau) mean += z(i, tau - 1);
      mean /= static_cast<Real>(s - 1);
      CHECK(std::abs(out(i, s - 1) - mean) < 1e-12);
    }
  }
}

TEST_CASE("empty network returns the last token") {
  TransformerParams tf;
  tf.w_e = Matrix::identity(3);
  tf.b_e.assign(3, 0.0);
  Rng rng(23);
  const Matrix x = gaussian_sample(rng, 3, 5);
  CHECK(max_abs_diff(forward_last(x, tf), x.col(4)) == 0.0);
}

TEST_CASE("theorem-3.1 construction is exact at L=3") {
  Rng rng(24);
  const Matrix w_star = gaussian_sample(rng, 2, 2);
  const TransformerParams tf = build_ih2(w_star, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = gaussian_sample(rng, 2, 3);
    CHECK(max_abs_diff(forward_last(x, tf), x.col(1)) < 1e-15);
  }
}

TEST_CASE("relu pair reproduces the identity map") {
  FFNParams ffn;
  ffn.w_in = Matrix(2, 1);
  ffn.w_in(0, 0) = 1.0;
  ffn.w_in(1, 0) = -1.0;
  ffn.b_in = {0.0, 0.0};
  ffn.w_out = Matrix(1, 2);
  ffn.w_out(0, 0) = 1.0;
  ffn.w_out(0, 1) = -1.0;
  for (Real x : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
    const std::vector<Real> y = ffn_forward(ffn, std::vector<Real>{x});
    CHECK(y[0] == doctest::Approx(x).epsilon(1e-15));
  }
}

TEST_CASE("causality: prefix columns are untouched by later tokens") {
  Rng rng(25);
  const std::size_t d = 2, D = 4, L = 8;
  for (int trial = 0; trial < 20; ++trial) {
    TransformerParams tf;
    tf.w_e = gaussian_sample(rng, D, d);
    tf.b_e.assign(D, 0.25);
    for (int u = 0; u < 2; ++u) {
      LayerParams layer;
      for (int h = 0; h < 2; ++h) {
        HeadParams hp;
        hp.w_q = gaussian_sample(rng, D, D);
        hp.w_k = gaussian_sample(rng, D, D);
        hp.w_v = gaussian_sample(rng, D, D);
        if (h == 0) hp.rpe_slope = std::abs(rng.next_gaussian());
        layer.heads.push_back(std::move(hp));
      }
      layer.w_o = gaussian_sample(rng, D, D);
      layer.use_residual = (u == 0);
      tf.layers.push_back(std::move(layer));
    }
    const Matrix x = gaussian_sample(rng, d, L);
    const Matrix z = forward(x, tf);
    for (int rep = 0; rep < 3; ++rep) {
      const std::size_t j = 1 + rng.next_u64() % L;
      Matrix xp = x;
      xp(rng.next_u64() % d, j - 1) += rng.next_gaussian();
      const Matrix zp = forward(xp, tf);
      for (std::size_t s = 0; s + 1 < j; ++s)
        for (std::size_t i = 0; i < D; ++i) REQUIRE(z(i, s) == zp(i, s));
    }
  }
}

TEST_CASE("forward passes are bitwise deterministic") {
  Rng rng(26);
  const Matrix w_star = gaussian_sample(rng, 2, 2);
  const TransformerParams tf = build_ih2(w_star, 4.0);
  const Matrix x = gaussian_sample(rng, 2, 10);
  const std::vector<Real> a = forward_last(x, tf);
  const std::vector<Real> b = forward_last(x, tf);
  CHECK(a == b);
}

TEST_CASE("json round trip preserves the forward pass") {
  Rng rng(27);
  const Matrix w_star = gaussian_sample(rng, 2, 2);
  TransformerParams tf = build_ih2(w_star, 2.5);
  const std::string text = transformer_to_json(tf);
  const TransformerParams back = transformer_from_json(text);
  const Matrix x = gaussian_sample(rng, 2, 9);
  CHECK(forward_last(x, tf) == forward_last(x, back));
  CHECK(back.layers[1].key_floor == 2);
}
