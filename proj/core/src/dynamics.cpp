#include "induct/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace induct {

Real M_of(Real p, int L) {
  if (p < 0.0) throw std::invalid_argument("M_of: p must be >= 0");
  if (p < 1e-8) return static_cast<Real>(L - 2);
  return (1.0 - std::exp(-p * (L - 2))) / (1.0 - std::exp(-p));
}

Real m_of(Real p, int L) {
  if (p < 0.0) throw std::invalid_argument("m_of: p must be >= 0");
  if (p < 1e-8) return static_cast<Real>(L - 3) * static_cast<Real>(L - 2) / 2.0;
  const Real e = std::exp(-p);
  return (e - (L - 2) * std::exp(-p * (L - 2)) + (L - 3) * std::exp(-p * (L - 1))) / ((1.0 - e) * (1.0 - e));
}

Real loss_g4(Real p, Real g, Real alpha_star, int L) {
  const Real pc = std::min(p, kPCap);
  const Real gs = alpha_star / (1.0 + alpha_star);
  const Real M1 = M_of(pc, L), M2 = M_of(2.0 * pc, L);
  return 0.5 * gs * gs + 0.5 * g * g * M2 / (M1 * M1) - gs * g / M1;
}

G4Grad grad_g4(Real p, Real g, Real alpha_star, int L) {
  const Real pc = std::min(p, kPCap);
  const Real gs = alpha_star / (1.0 + alpha_star);
  const Real M1 = M_of(pc, L), M2 = M_of(2.0 * pc, L);
  const Real m1 = m_of(pc, L), m2 = m_of(2.0 * pc, L);
  G4Grad d;
  // m(p) -> 0 as p -> inf; express dp via m to keep the cancellation exact.
  d.dp = (m1 * g / (M1 * M1)) * (gs - g * M2 / M1) + g * g * m2 / (M1 * M1);
  d.dg = (gs - g * M2 / M1) / M1;
  return d;
}

bool ih2_domain_ok(Real w, Real w_star) {
  return 2.0 * w * w < 1.0 && w * w + w_star * w_star < 1.0;
}

Real loss_ih2(Real w, Real h, Real alpha_star, Real w_star, int L) {
  if (!ih2_domain_ok(w, w_star)) throw std::domain_error("loss_ih2: state left the analyzed region");
  const Real a1 = 1.0 + alpha_star;
  const Real s4 = w_star * w_star * w_star * w_star;
  const Real sum2 = w * w + w_star * w_star;
  return std::pow(1.0 - 4.0 * s4, -0.5) / (2.0 * a1 * a1 * (L - 2)) +
         0.5 * h * h * std::pow(1.0 - 4.0 * std::pow(w, 4.0), -0.5) / (L - 2) -
         h * std::pow(1.0 - sum2 * sum2, -0.5) / (a1 * (L - 2));
}

IH2Grad grad_ih2(Real w, Real h, Real alpha_star, Real w_star, int L) {
  if (!ih2_domain_ok(w, w_star)) throw std::domain_error("grad_ih2: state left the analyzed region");
  const Real a1 = 1.0 + alpha_star;
  const Real sum2 = w * w + w_star * w_star;
  IH2Grad d;
  d.dw = h / (a1 * (L - 2)) * std::pow(1.0 - sum2 * sum2, -1.5) * sum2 * 2.0 * w -
         h * h / (L - 2) * std::pow(1.0 - 4.0 * std::pow(w, 4.0), -1.5) * 4.0 * w * w * w;
  d.dh = std::pow(1.0 - sum2 * sum2, -0.5) / (a1 * (L - 2)) -
         h * std::pow(1.0 - 4.0 * std::pow(w, 4.0), -0.5) / (L - 2);
  return d;
}

Real ih2_dloss_dprod(Real prod, Real h, Real alpha_star, Real w_star, int L) {
  const Real a1 = 1.0 + alpha_star;
  const Real sum2 = prod + w_star * w_star;
  if (std::abs(prod) >= 0.5 || std::abs(sum2) >= 1.0)
    throw std::domain_error("ih2_dloss_dprod: product left the analyzed region");
  return 2.0 * h * h * prod * std::pow(1.0 - 4.0 * prod * prod, -1.5) / (L - 2) -
         h * sum2 * std::pow(1.0 - sum2 * sum2, -1.5) / (a1 * (L - 2));
}

// --------------------------------------------------------------------------
// Stage I

Real stage1_q(Real pt, int L) {
  Real q = 0.0;
  for (int tau = 1; tau <= L - 2; ++tau) {
    Real r = 0.0;
    for (int s = tau + 1; s <= L - 1; ++s) {
      Real denom = 0.0;
      for (int k = 0; k <= s - 2; ++k) denom += std::exp(-pt * k);
      r += std::exp(-pt * (s - 1 - tau)) / denom;
    }
    q += r * r;
  }
  return q;
}

Real stage1_qprime(Real pt, int L) {
  // d/dpt of the attention weight a_{tau,s} is a_{tau,s} (E_s - (s-1-tau))
  // with E_s the mean key offset under the softmax at query s.
  Real qp = 0.0;
  for (int tau = 1; tau <= L - 2; ++tau) {
    Real r = 0.0, dr = 0.0;
    for (int s = tau + 1; s <= L - 1; ++s) {
      Real denom = 0.0, first = 0.0;
      for (int k = 0; k <= s - 2; ++k) {
        const Real e = std::exp(-pt * k);
        denom += e;
        first += k * e;
      }
      const Real a = std::exp(-pt * (s - 1 - tau)) / denom;
      const Real es = first / denom;
      r += a;
      dr += a * (es - (s - 1 - tau));
    }
    qp += 2.0 * r * dr;
  }
  return qp;
}

Real stage1_rhs(Real pt, const Stage1Params& params) {
  const int L = params.L;
  const Real drive = 2.0 * params.alpha_star * params.g0 /
                     ((1.0 + params.alpha_star) * (L - 2)) * m_of(params.p0, L) /
                     (M_of(params.p0, L) * M_of(params.p0, L));
  return -params.g0 * params.g0 / ((L - 2.0) * (L - 2.0)) * stage1_qprime(pt, L) + drive;
}

std::vector<Stage1Point> run_stage1(Real ptilde0, Real dt, Real t_end, const Stage1Params& params,
                                    std::size_t stride) {
  if (dt <= 0.0) throw std::invalid_argument("run_stage1: dt must be positive");
  std::vector<Stage1Point> out;
  Real pt = ptilde0, t = 0.0;
  std::size_t k = 0;
  const auto f = [&](Real x) { return stage1_rhs(x, params); };
  while (t < t_end) {
    if (k % stride == 0) out.push_back({t, pt});
    const Real k1 = f(pt);
    const Real k2 = f(pt + 0.5 * dt * k1);
    const Real k3 = f(pt + 0.5 * dt * k2);
    const Real k4 = f(pt + dt * k3);
    pt += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += dt;
    ++k;
  }
  out.push_back({t, pt});
  return out;
}

// --------------------------------------------------------------------------
// Stage-II gradient flow

namespace {

struct Deriv {
  Real dg, dh, dp, dw;
};

Deriv gf_rhs(const GFState& s, const GFParams& prm) {
  const G4Grad g4 = grad_g4(s.p, s.w_v1, prm.alpha_star, prm.L);
  const IH2Grad ih = grad_ih2(s.w_kq, s.w_v2, prm.alpha_star, prm.w_star, prm.L);
  return {g4.dg, ih.dh, g4.dp, ih.dw};
}

GFState gf_step(const GFState& s, const Deriv& d, Real dt) {
  GFState n = s;
  n.w_v1 += dt * d.dg;
  n.w_v2 += dt * d.dh;
  n.p = std::min(n.p + dt * d.dp, kPCap);
  n.w_kq += dt * d.dw;
  return n;
}

bool state_ok(const GFState& s, const GFParams& prm) {
  return s.p >= 0.0 && ih2_domain_ok(s.w_kq, prm.w_star);
}

// One RK4 step; false if any stage leaves the loss domain.
bool try_rk4(const GFState& s, const GFParams& prm, Real dt, GFState* out) {
  if (!state_ok(s, prm)) return false;
  const Deriv k1 = gf_rhs(s, prm);
  const GFState s2 = gf_step(s, k1, dt / 2.0);
  if (!state_ok(s2, prm)) return false;
  const Deriv k2 = gf_rhs(s2, prm);
  const GFState s3 = gf_step(s, k2, dt / 2.0);
  if (!state_ok(s3, prm)) return false;
  const Deriv k3 = gf_rhs(s3, prm);
  const GFState s4 = gf_step(s, k3, dt);
  if (!state_ok(s4, prm)) return false;
  const Deriv k4 = gf_rhs(s4, prm);
  const Deriv avg{(k1.dg + 2 * k2.dg + 2 * k3.dg + k4.dg) / 6.0,
                  (k1.dh + 2 * k2.dh + 2 * k3.dh + k4.dh) / 6.0,
                  (k1.dp + 2 * k2.dp + 2 * k3.dp + k4.dp) / 6.0,
                  (k1.dw + 2 * k2.dw + 2 * k3.dw + k4.dw) / 6.0};
  GFState n = gf_step(s, avg, dt);
  if (!state_ok(n, prm)) return false;
  *out = n;
  return true;
}

}  // namespace

Real default_t_end(const GFParams& prm) {
  const Real a1 = 1.0 + prm.alpha_star;
  return 50.0 * a1 * a1 * prm.L * std::log(1.0 / prm.sigma_init) / (prm.w_star * prm.w_star);
}

GFTrajectory integrate_gf(const GFState& init, const GFParams& prm, Real dt, Real t_end,
                          std::size_t stride) {
  if (dt <= 0.0) throw std::invalid_argument("integrate_gf: dt must be positive");
  if (prm.L < 5) throw std::invalid_argument("integrate_gf: L must be >= 5");
  if (!(prm.w_star > 0.0 && prm.w_star < 1.0 / std::sqrt(2.0)))
    throw std::invalid_argument("integrate_gf: w_star must lie in (0, 1/sqrt(2))");
  if (!state_ok(init, prm)) throw std::domain_error("integrate_gf: initial state outside loss domain");

  GFTrajectory traj;
  traj.params = prm;
  const std::size_t n_steps = static_cast<std::size_t>(std::ceil(t_end / dt));
  traj.t.reserve(n_steps / stride + 2);

  GFState s = init;
  Real t = 0.0;
  const auto record = [&]() {
    traj.t.push_back(t);
    traj.states.push_back(s);
    traj.loss_g4.push_back(loss_g4(s.p, s.w_v1, prm.alpha_star, prm.L));
    traj.loss_ih2.push_back(loss_ih2(s.w_kq, s.w_v2, prm.alpha_star, prm.w_star, prm.L));
  };
  for (std::size_t k = 0; k < n_steps; ++k) {
    if (k % stride == 0) record();
    GFState next;
    Real h = dt;
    int halvings = 0;
    Real advanced = 0.0;
    while (advanced < dt - 1e-15) {
      if (try_rk4(s, prm, h, &next)) {
        s = next;
        advanced += h;
      } else {
        h /= 2.0;
        if (++halvings > 20) throw std::domain_error("integrate_gf: persistent domain exit");
      }
    }
    t += dt;
  }
  record();
  return traj;
}

GFTrajectory integrate_gf_default(const GFParams& prm, Real dt, std::size_t stride) {
  const GFState init{prm.sigma_init, prm.sigma_init, prm.sigma_init, prm.sigma_init};
  return integrate_gf(init, prm, dt, default_t_end(prm), stride);
}

PhaseReport detect_phases(const GFTrajectory& traj, PhaseThresholds thr) {
  if (traj.size() < 2) throw std::invalid_argument("detect_phases: empty trajectory");
  const GFParams& prm = traj.params;
  PhaseReport rep;
  rep.thresholds = thr;

  const Real lg0 = traj.loss_g4.front();
  const Real li0 = traj.loss_ih2.front();
  std::size_t i_ti = traj.size();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.loss_g4[i] <= thr.low * lg0) {
      rep.t_i = traj.t[i];
      i_ti = i;
      break;
    }
  }
  if (i_ti < traj.size()) rep.lih2_at_ti_over_init = traj.loss_ih2[i_ti] / li0;

  // Observation time: w_V2 settled at its w -> 0 quasi-stationary value.
  const Real s4 = std::pow(prm.w_star, 4.0);
  const Real h_settled = prm.h_star() * std::pow(1.0 - s4, -0.5) * (1.0 - thr.settle_tol);
  std::size_t i_to = traj.size();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.states[i].w_v2 >= h_settled) {
      rep.t_o = traj.t[i];
      i_to = i;
      break;
    }
  }
  if (i_to == traj.size()) return rep;
  const Real li_to = traj.loss_ih2[i_to];
  rep.lih2_to_over_init = li_to / li0;

  std::size_t i_tii = traj.size();
  for (std::size_t i = i_to + 1; i < traj.size(); ++i) {
    if (!rep.t_ii && traj.loss_ih2[i] <= thr.high * li_to) {
      rep.t_ii = traj.t[i];
      i_tii = i;
    }
    if (traj.loss_ih2[i] <= thr.low * li_to) {
      rep.t_iii = traj.t[i];
      break;
    }
  }

  const std::size_t fit_end = rep.t_ii ? i_tii : traj.size() - 1;
  std::vector<Real> xs, ys;
  for (std::size_t i = 0; i <= fit_end; ++i) {
    xs.push_back(traj.t[i]);
    ys.push_back(std::log(traj.states[i].w_kq));
  }
  if (xs.size() >= 2) rep.growth_rate = line_fit(xs, ys).slope;
  return rep;
}

Real lyapunov_g4(const GFState& s, const GFParams& prm) {
  const Real u = std::exp(-std::min(s.p, kPCap));
  const Real v = u * prm.g_star() + (prm.g_star() - s.w_v1);
  return 0.5 * (u * u + v * v);
}

Real lyapunov_ih(const GFState& s, const GFParams& prm) {
  const Real v = s.w_kq * s.w_kq;
  const Real vs = prm.w_star * prm.w_star;
  const Real dh = s.w_v2 - prm.h_star();
  return 0.5 * ((v - vs) * (v - vs) + dh * dh);
}

BalanceResult balance_run(Real wq0, Real wk0, Real h0, const GFParams& prm, Real dt, Real t_end) {
  if (dt <= 0.0) throw std::invalid_argument("balance_run: dt must be positive");
  Real wq = wq0, wk = wk0, h = h0;
  const Real init_gap = wq0 * wq0 - wk0 * wk0;
  BalanceResult res;
  const auto rhs = [&](Real q, Real kk, Real hh, Real* dq, Real* dk, Real* dhh) {
    const Real dLdP = ih2_dloss_dprod(q * kk, hh, prm.alpha_star, prm.w_star, prm.L);
    *dq = -dLdP * kk;
    *dk = -dLdP * q;
    const Real sum2 = q * kk + prm.w_star * prm.w_star;
    *dhh = std::pow(1.0 - sum2 * sum2, -0.5) / ((1.0 + prm.alpha_star) * (prm.L - 2)) -
           hh * std::pow(1.0 - 4.0 * q * kk * q * kk, -0.5) / (prm.L - 2);
  };
  const std::size_t n_steps = static_cast<std::size_t>(std::ceil(t_end / dt));
  for (std::size_t it = 0; it < n_steps; ++it) {
    Real k1q, k1k, k1h, k2q, k2k, k2h, k3q, k3k, k3h, k4q, k4k, k4h;
    rhs(wq, wk, h, &k1q, &k1k, &k1h);
    rhs(wq + dt / 2 * k1q, wk + dt / 2 * k1k, h + dt / 2 * k1h, &k2q, &k2k, &k2h);
    rhs(wq + dt / 2 * k2q, wk + dt / 2 * k2k, h + dt / 2 * k2h, &k3q, &k3k, &k3h);
    rhs(wq + dt * k3q, wk + dt * k3k, h + dt * k3h, &k4q, &k4k, &k4h);
    wq += dt / 6 * (k1q + 2 * k2q + 2 * k3q + k4q);
    wk += dt / 6 * (k1k + 2 * k2k + 2 * k3k + k4k);
    h += dt / 6 * (k1h + 2 * k2h + 2 * k3h + k4h);
    const Real gap = wq * wq - wk * wk;
    res.max_drift = std::max(res.max_drift, std::abs(gap - init_gap));
    res.max_imbalance = std::max(res.max_imbalance, std::abs(gap));
  }
  res.final_wq = wq;
  res.final_wk = wk;
  res.final_h = h;
  return res;
}

}  // namespace induct
