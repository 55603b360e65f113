#pragma once

#include <optional>
#include <vector>

#include "induct/linalg.hpp"

namespace induct {

// Problem constants for the reparameterized two-layer model trained on the
// mixed 4-gram + induction-head target.
struct GFParams {
  Real alpha_star = 1.0;
  Real w_star = 0.49;     // in (0, 1/sqrt(2))
  Real sigma_init = 0.01;
  int L = 40;             // >= 5

  Real g_star() const { return alpha_star / (1.0 + alpha_star); }
  Real h_star() const { return 1.0 / (1.0 + alpha_star); }
};

// Reparameterized state theta = (w_V1, w_V2, p, w_KQ).
struct GFState {
  Real w_v1 = 0.0;  // g
  Real w_v2 = 0.0;  // h
  Real p = 0.0;     // second-layer RPE slope
  Real w_kq = 0.0;  // w
};

// p beyond this is treated as +infinity (exp(-p) underflows anyway).
inline constexpr Real kPCap = 700.0;

// M(p) = sum_{k=0}^{L-3} e^{-pk} and m(p) = -M'(p), with analytic p -> 0 limits.
Real M_of(Real p, int L);
Real m_of(Real p, int L);

// Closed-form 4-gram partial loss and its gradient-flow right-hand side
// (descent direction, i.e. -dL/d(p, g)).
Real loss_g4(Real p, Real g, Real alpha_star, int L);
struct G4Grad {
  Real dp;
  Real dg;
};
G4Grad grad_g4(Real p, Real g, Real alpha_star, int L);

// Closed-form induction-head partial loss (exp-simplified softmax) and its
// descent direction. Domain: 2w^2 < 1 and w^2 + w_star^2 < 1.
bool ih2_domain_ok(Real w, Real w_star);
Real loss_ih2(Real w, Real h, Real alpha_star, Real w_star, int L);
struct IH2Grad {
  Real dw;
  Real dh;
};
IH2Grad grad_ih2(Real w, Real h, Real alpha_star, Real w_star, int L);
// dL/dP where the loss is read as a function of the product P = w_Q w_K.
Real ih2_dloss_dprod(Real prod, Real h, Real alpha_star, Real w_star, int L);

// --------------------------------------------------------------------------
// Stage I: dynamics of the first-layer slope with the second layer frozen.

struct Stage1Params {
  Real g0 = 0.01;        // frozen w_V1(0)
  Real alpha_star = 1.0;
  int L = 40;
  Real p0 = 0.01;        // frozen second-layer slope p(0)
};

// q(pt) = sum_tau (sum_s attention weight of key tau at query s)^2 and its
// analytic derivative.
Real stage1_q(Real pt, int L);
Real stage1_qprime(Real pt, int L);
// dpt/dt = -(g0^2/(L-2)^2) q'(pt) + (2 a g0 / ((1+a)(L-2))) m(p0)/M(p0)^2.
Real stage1_rhs(Real pt, const Stage1Params& params);

struct Stage1Point {
  Real t;
  Real ptilde;
};
std::vector<Stage1Point> run_stage1(Real ptilde0, Real dt, Real t_end, const Stage1Params& params,
                                    std::size_t stride = 1);

// --------------------------------------------------------------------------
// Full Stage-II gradient flow.

struct GFTrajectory {
  std::vector<Real> t;
  std::vector<GFState> states;
  std::vector<Real> loss_g4;
  std::vector<Real> loss_ih2;
  GFParams params;

  Real loss_total(std::size_t i) const { return loss_g4[i] + loss_ih2[i]; }
  std::size_t size() const { return t.size(); }
};

// 50x the predicted plateau-time scale.
Real default_t_end(const GFParams& params);

// Classical RK4 with fixed step; a step that would exit the loss domain is
// retried with halved dt (error after 20 halvings). Records every stride-th
// state.
GFTrajectory integrate_gf(const GFState& init, const GFParams& params, Real dt, Real t_end,
                          std::size_t stride = 1);
GFTrajectory integrate_gf_default(const GFParams& params, Real dt = 0.05, std::size_t stride = 20);

// --------------------------------------------------------------------------
// Phase detection.

struct PhaseThresholds {
  Real low = 0.01;   // "learned" factor
  Real high = 0.99;  // "barely moved" factor
  // T_o is the first time w_V2 reaches (1 - settle_tol) times its w->0
  // quasi-stationary value h_star (1 - w_star^4)^{-1/2}.
  Real settle_tol = 1e-3;
};

struct PhaseReport {
  std::optional<Real> t_i;    // L_G4 first <= low * L_G4(0)
  std::optional<Real> t_o;    // observation time (h settled)
  std::optional<Real> t_ii;   // L_IH2 first <= high * L_IH2(T_o), after T_o
  std::optional<Real> t_iii;  // L_IH2 first <= low * L_IH2(T_o), after T_o
  Real growth_rate = 0.0;     // least-squares slope of log w_KQ on [0, T_II]
  Real lih2_at_ti_over_init = 0.0;  // normalization against L_IH2(0)
  Real lih2_to_over_init = 0.0;     // L_IH2(T_o) / L_IH2(0)
  PhaseThresholds thresholds;
};

PhaseReport detect_phases(const GFTrajectory& traj, PhaseThresholds thresholds = {});

// --------------------------------------------------------------------------
// Lyapunov monitors.

// G(u, v) with u = e^-p, v = u g* + (g* - g).
Real lyapunov_g4(const GFState& state, const GFParams& params);
// G(v, h) with v = w^2.
Real lyapunov_ih(const GFState& state, const GFParams& params);

// --------------------------------------------------------------------------
// Parameter balance: (w_Q, w_K, h) flow with the loss depending on w_Q w_K.

struct BalanceResult {
  Real max_drift = 0.0;       // max_t |(w_Q^2 - w_K^2) - (w_Q(0)^2 - w_K(0)^2)|
  Real max_imbalance = 0.0;   // max_t |w_Q^2 - w_K^2|
  Real final_wq = 0.0;
  Real final_wk = 0.0;
  Real final_h = 0.0;
};
BalanceResult balance_run(Real wq0, Real wk0, Real h0, const GFParams& params, Real dt, Real t_end);

}  // namespace induct
