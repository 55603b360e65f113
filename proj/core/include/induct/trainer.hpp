#pragma once

#include <cstdint>
#include <vector>

#include "induct/dynamics.hpp"
#include "induct/linalg.hpp"
#include "induct/targets.hpp"
#include "induct/transformer.hpp"

namespace induct {

enum class Optimizer { sgd, adam };
enum class TrainStage { stage1, stage2, joint };

struct TrainConfig {
  Optimizer optimizer = Optimizer::sgd;
  Real lr = 0.1;               // Adam path defaults to 5e-4 when unset by caller
  int batch = 1000;
  int steps = 100000;
  TrainStage stage = TrainStage::stage2;
  Dist dist = Dist::gaussian;
  std::uint64_t seed = 42;
  int L = 40;
  Real alpha_star = 1.0;
  Real w_star = 0.49;
  Real sigma_init = 0.01;
  int record_every = 50;   // trajectory snapshot stride
  int eval_every = 50;     // exact partial-loss evaluation stride (0 = off)
  int eval_batch = 4096;
};

// Six scalar parameters of the reparameterized two-layer model. p_tilde is
// the first-layer slope; +infinity means the first layer copies x_{s-1}
// exactly (Stage II operating point).
struct ReparamModel {
  Real p_tilde = 0.0;
  Real w_v1 = 0.0;
  Real w_v2 = 0.0;
  Real p = 0.0;
  Real w_q = 0.0;
  Real w_k = 0.0;
};

struct ReparamGrad {
  Real p_tilde = 0.0, w_v1 = 0.0, w_v2 = 0.0, p = 0.0, w_q = 0.0, w_k = 0.0;
};

// Model output (2 coords) on a 1 x L sequence.
std::array<Real, 2> reparam_forward(const ReparamModel& m, const Matrix& seq);
// Mixed-target squared-error loss on one sequence; accumulates gradients of
// all six parameters by reverse-mode differentiation of the scalar graph.
Real reparam_loss_grad(const ReparamModel& m, const Matrix& seq, Real alpha_star, Real w_star,
                       ReparamGrad* grad, Real* loss_g4_part = nullptr, Real* loss_ih2_part = nullptr);

struct TrainRecord {
  int step;
  ReparamModel model;
  Real batch_loss_g4;
  Real batch_loss_ih2;
};

struct EvalRecord {
  int step;
  Real loss_g4;
  Real loss_ih2;
};

struct TrainResult {
  std::vector<TrainRecord> records;
  std::vector<EvalRecord> evals;
  ReparamModel final_model;
  bool diverged = false;
};

// Online SGD/Adam with fresh minibatches per step. Stage I updates only the
// first-layer slope; Stage II freezes it at +infinity and trains the five
// second-layer scalars. Aborts when the batch loss exceeds 1000x its initial
// value.
TrainResult sgd_train(const TrainConfig& cfg);

// Linear probe of the first-layer representation: least-squares P minimizing
// sum_s || X_{s-n+1:s} - hidden_s^T P || over all positions of all sequences,
// ridge-stabilized. Returns the Frobenius norm of the residual.
struct ProbeResult {
  Real loss = 0.0;
  Real ridge = 0.0;
};
ProbeResult probe_first_layer(const TransformerParams& params, int n, const std::vector<Matrix>& seqs,
                              Real ridge = 1e-10);

// First layer with the same shape as `like` but Gaussian-random head weights;
// baseline for the probing comparison.
TransformerParams random_first_layer_like(const TransformerParams& like, Rng& rng);

}  // namespace induct
