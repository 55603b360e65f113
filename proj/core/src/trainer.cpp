#include "induct/trainer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace induct {

namespace {

// First-layer outputs y_s and, when requested, dy_s/dp_tilde, s = 1..L
// (y_1 has an empty context and is 0). p_tilde = +inf copies x_{s-1}.
void first_layer(const ReparamModel& m, const Matrix& seq, std::vector<Real>* y, std::vector<Real>* dy) {
  const std::size_t L = seq.cols;
  y->assign(L, 0.0);
  if (dy) dy->assign(L, 0.0);
  if (std::isinf(m.p_tilde)) {
    for (std::size_t s = 2; s <= L; ++s) (*y)[s - 1] = seq(0, s - 2);
    return;
  }
  for (std::size_t s = 2; s <= L; ++s) {
    Real denom = 0.0, mean_off = 0.0;
    for (std::size_t k = 0; k <= s - 2; ++k) denom += std::exp(-m.p_tilde * k);
    Real ys = 0.0, dys = 0.0;
    if (dy) {
      Real first = 0.0;
      for (std::size_t k = 0; k <= s - 2; ++k) first += k * std::exp(-m.p_tilde * k);
      mean_off = first / denom;
    }
    for (std::size_t tau = 1; tau <= s - 1; ++tau) {
      const Real off = static_cast<Real>(s - 1 - tau);
      const Real a = std::exp(-m.p_tilde * off) / denom;
      ys += a * seq(0, tau - 1);
      if (dy) dys += a * (mean_off - off) * seq(0, tau - 1);
    }
    (*y)[s - 1] = ys;
    if (dy) (*dy)[s - 1] = dys;
  }
}

}  // namespace

std::array<Real, 2> reparam_forward(const ReparamModel& m, const Matrix& seq) {
  if (seq.rows != 1) throw std::invalid_argument("reparam_forward: token dimension must be 1");
  const std::size_t L = seq.cols;
  if (L < 5) throw std::invalid_argument("reparam_forward: L must be >= 5");
  std::vector<Real> y;
  first_layer(m, seq, &y, nullptr);

  const Real pc = std::min(m.p, kPCap);
  const Real xl = seq(0, L - 1);
  const Real c = m.w_q * m.w_k;
  std::vector<Real> pi_logits(L - 2), rho_logits(L - 2);
  for (std::size_t s = 2; s <= L - 1; ++s) {
    pi_logits[s - 2] = -pc * static_cast<Real>(L - 1 - s);
    rho_logits[s - 2] = c * xl * y[s - 1];
  }
  const std::vector<Real> pi = softmax_masked(pi_logits);
  const std::vector<Real> rho = softmax_masked(rho_logits);
  Real out1 = 0.0, out2 = 0.0;
  for (std::size_t s = 2; s <= L - 1; ++s) {
    out1 += y[s - 1] * pi[s - 2];
    out2 += seq(0, s - 1) * rho[s - 2];
  }
  return {m.w_v1 * out1, m.w_v2 * out2};
}

Real reparam_loss_grad(const ReparamModel& m, const Matrix& seq, Real alpha_star, Real w_star,
                       ReparamGrad* grad, Real* loss_g4_part, Real* loss_ih2_part) {
  const std::size_t L = seq.cols;
  std::vector<Real> y, dy;
  const bool need_ptilde = grad != nullptr && !std::isinf(m.p_tilde);
  first_layer(m, seq, &y, need_ptilde ? &dy : nullptr);

  const Real pc = std::min(m.p, kPCap);
  const Real xl = seq(0, L - 1);
  const Real c = m.w_q * m.w_k;
  const std::size_t n_keys = L - 2;
  std::vector<Real> pi_logits(n_keys), rho_logits(n_keys);
  for (std::size_t s = 2; s <= L - 1; ++s) {
    pi_logits[s - 2] = -pc * static_cast<Real>(L - 1 - s);
    rho_logits[s - 2] = c * xl * y[s - 1];
  }
  const std::vector<Real> pi = softmax_masked(pi_logits);
  const std::vector<Real> rho = softmax_masked(rho_logits);

  // Target.
  const Real t1 = alpha_star / (1.0 + alpha_star) * seq(0, L - 3);
  std::vector<Real> tgt_logits(n_keys);
  for (std::size_t s = 2; s <= L - 1; ++s) tgt_logits[s - 2] = w_star * w_star * xl * seq(0, s - 2);
  const std::vector<Real> tgt_w = softmax_masked(tgt_logits);
  Real t2 = 0.0;
  for (std::size_t s = 2; s <= L - 1; ++s) t2 += seq(0, s - 1) * tgt_w[s - 2];
  t2 /= 1.0 + alpha_star;

  Real sum1 = 0.0, sum2 = 0.0;
  for (std::size_t s = 2; s <= L - 1; ++s) {
    sum1 += y[s - 1] * pi[s - 2];
    sum2 += seq(0, s - 1) * rho[s - 2];
  }
  const Real out1 = m.w_v1 * sum1;
  const Real out2 = m.w_v2 * sum2;
  const Real e1 = out1 - t1;
  const Real e2 = out2 - t2;
  if (loss_g4_part) *loss_g4_part = 0.5 * e1 * e1;
  if (loss_ih2_part) *loss_ih2_part = 0.5 * e2 * e2;
  const Real loss = 0.5 * (e1 * e1 + e2 * e2);
  if (!grad) return loss;

  grad->w_v1 += e1 * sum1;
  grad->w_v2 += e2 * sum2;

  // pi_s depends on p through the offsets (L-1-s).
  Real mean_off = 0.0, weighted = 0.0;
  for (std::size_t s = 2; s <= L - 1; ++s) mean_off += pi[s - 2] * static_cast<Real>(L - 1 - s);
  for (std::size_t s = 2; s <= L - 1; ++s)
    weighted += y[s - 1] * pi[s - 2] * (mean_off - static_cast<Real>(L - 1 - s));
  grad->p += e1 * m.w_v1 * weighted;

  // rho_s depends on (w_q, w_k) through c = w_q w_k, and on p_tilde through y.
  Real sum_xy = 0.0, sum_y = 0.0;
  for (std::size_t s = 2; s <= L - 1; ++s) {
    sum_xy += seq(0, s - 1) * rho[s - 2] * y[s - 1];
    sum_y += rho[s - 2] * y[s - 1];
  }
  const Real dout2_dc = m.w_v2 * xl * (sum_xy - sum2 * sum_y);
  grad->w_q += e2 * dout2_dc * m.w_k;
  grad->w_k += e2 * dout2_dc * m.w_q;

  if (need_ptilde) {
    Real dsum1 = 0.0;
    for (std::size_t s = 2; s <= L - 1; ++s) dsum1 += dy[s - 1] * pi[s - 2];
    Real sum_xdy = 0.0, sum_dy = 0.0;
    for (std::size_t s = 2; s <= L - 1; ++s) {
      sum_xdy += seq(0, s - 1) * rho[s - 2] * dy[s - 1];
      sum_dy += rho[s - 2] * dy[s - 1];
    }
    const Real dout2_dpt = m.w_v2 * c * xl * (sum_xdy - sum2 * sum_dy);
    grad->p_tilde += e1 * m.w_v1 * dsum1 + e2 * dout2_dpt;
  }
  return loss;
}

TrainResult sgd_train(const TrainConfig& cfg) {
  if (cfg.lr < 0 || cfg.batch <= 0 || cfg.steps <= 0)
    throw std::invalid_argument("sgd_train: rate must be >= 0, batch and steps positive");
  Rng rng(cfg.seed);
  Rng eval_rng = rng.substream(1);

  ReparamModel m;
  m.p_tilde = (cfg.stage == TrainStage::stage2) ? std::numeric_limits<Real>::infinity() : cfg.sigma_init;
  m.w_v1 = m.w_v2 = m.p = m.w_q = m.w_k = cfg.sigma_init;

  const bool update_first = cfg.stage != TrainStage::stage2;
  const bool update_second = cfg.stage != TrainStage::stage1;

  std::vector<Matrix> eval_set;
  if (cfg.eval_every > 0) {
    eval_set.reserve(cfg.eval_batch);
    for (int i = 0; i < cfg.eval_batch; ++i)
      eval_set.push_back(sample_sequence(cfg.dist, eval_rng, 1, cfg.L));
  }
  const auto eval_losses = [&](int step, TrainResult* out) {
    Real lg = 0.0, li = 0.0;
    for (const Matrix& x : eval_set) {
      Real a = 0.0, b = 0.0;
      reparam_loss_grad(m, x, cfg.alpha_star, cfg.w_star, nullptr, &a, &b);
      lg += a;
      li += b;
    }
    out->evals.push_back({step, lg / eval_set.size(), li / eval_set.size()});
  };

  TrainResult result;
  ReparamGrad adam_m, adam_v;
  const Real beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Real initial_loss = -1.0;

  for (int step = 0; step < cfg.steps; ++step) {
    ReparamGrad grad;
    Real batch_lg = 0.0, batch_li = 0.0;
    for (int b = 0; b < cfg.batch; ++b) {
      const Matrix x = sample_sequence(cfg.dist, rng, 1, cfg.L);
      Real lg = 0.0, li = 0.0;
      reparam_loss_grad(m, x, cfg.alpha_star, cfg.w_star, &grad, &lg, &li);
      batch_lg += lg;
      batch_li += li;
    }
    const Real inv = 1.0 / cfg.batch;
    batch_lg *= inv;
    batch_li *= inv;
    grad.p_tilde *= inv;
    grad.w_v1 *= inv;
    grad.w_v2 *= inv;
    grad.p *= inv;
    grad.w_q *= inv;
    grad.w_k *= inv;

    if (step % cfg.record_every == 0) result.records.push_back({step, m, batch_lg, batch_li});
    if (cfg.eval_every > 0 && step % cfg.eval_every == 0) eval_losses(step, &result);

    const Real total = batch_lg + batch_li;
    if (initial_loss < 0) initial_loss = total;
    if (!(total <= 1000.0 * initial_loss)) {  // also catches NaN

      result.diverged = true;
      break;
    }

    const auto apply = [&](Real* param, Real g, Real* mm, Real* vv) {
      if (cfg.optimizer == Optimizer::sgd) {
        *param -= cfg.lr * g;
      } else {
        *mm = beta1 * *mm + (1 - beta1) * g;
        *vv = beta2 * *vv + (1 - beta2) * g * g;
        const Real mhat = *mm / (1 - std::pow(beta1, step + 1));
        const Real vhat = *vv / (1 - std::pow(beta2, step + 1));
        *param -= cfg.lr * mhat / (std::sqrt(vhat) + eps);
      }
    };
    if (update_first) apply(&m.p_tilde, grad.p_tilde, &adam_m.p_tilde, &adam_v.p_tilde);
    if (update_second) {
      apply(&m.w_v1, grad.w_v1, &adam_m.w_v1, &adam_v.w_v1);
      apply(&m.w_v2, grad.w_v2, &adam_m.w_v2, &adam_v.w_v2);
      apply(&m.p, grad.p, &adam_m.p, &adam_v.p);
      apply(&m.w_q, grad.w_q, &adam_m.w_q, &adam_v.w_q);
      apply(&m.w_k, grad.w_k, &adam_m.w_k, &adam_v.w_k);
      m.p = std::min(m.p, kPCap);
    }
  }
  if (cfg.eval_every > 0) eval_losses(cfg.steps, &result);
  result.final_model = m;
  return result;
}

ProbeResult probe_first_layer(const TransformerParams& params, int n, const std::vector<Matrix>& seqs,
                              Real ridge) {
  if (seqs.empty()) throw std::invalid_argument("probe_first_layer: need sequences");
  const std::size_t d = params.token_dim();
  const std::size_t D = params.hidden_dim();
  const std::size_t nd = static_cast<std::size_t>(n) * d;
  if (D < nd) throw std::invalid_argument("probe_first_layer: hidden dimension below n*d");

  std::size_t n_rows = 0;
  for (const Matrix& seq : seqs) n_rows += seq.cols - n + 1;
  Matrix a(n_rows, D);
  Matrix b(n_rows, nd);
  std::size_t r = 0;
  for (const Matrix& seq : seqs) {
    const Matrix z = forward_layers(seq, params, 1);
    for (std::size_t s = static_cast<std::size_t>(n); s <= seq.cols; ++s, ++r) {
      for (std::size_t i = 0; i < D; ++i) a(r, i) = z(i, s - 1);
      const std::vector<Real> patch = stack_patch(seq, s - n + 1, s);
      for (std::size_t i = 0; i < nd; ++i) b(r, i) = patch[i];
    }
  }
  // Solve the ridge normal equations column-by-column of P.
  Real ss = 0.0;
  for (std::size_t j = 0; j < nd; ++j) {
    const std::vector<Real> col = b.col(j);
    const std::vector<Real> pj = solve_ridge(a, col, ridge);
    const std::vector<Real> pred = matvec(a, pj);
    for (std::size_t i = 0; i < n_rows; ++i) ss += (col[i] - pred[i]) * (col[i] - pred[i]);
  }
  return {std::sqrt(ss), ridge};
}

TransformerParams random_first_layer_like(const TransformerParams& like, Rng& rng) {
  TransformerParams out;
  out.w_e = like.w_e;
  out.b_e = like.b_e;
  LayerParams layer;
  const LayerParams& src = like.layers.front();
  const std::size_t D = like.hidden_dim();
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(D));
  for (const HeadParams& h0 : src.heads) {
    HeadParams h;
    h.w_q = gaussian_sample(rng, D, D);
    h.w_k = gaussian_sample(rng, D, D);
    h.w_v = gaussian_sample(rng, D, D);
    h.w_q *= scale;
    h.w_k *= scale;
    h.w_v *= scale;
    if (h0.rpe_slope) h.rpe_slope = std::abs(rng.next_gaussian());
    layer.heads.push_back(std::move(h));
  }
  layer.w_o = Matrix::identity(D);
  layer.use_residual = src.use_residual;
  layer.key_floor = src.key_floor;
  out.layers.push_back(std::move(layer));
  return out;
}

}  // namespace induct
