#pragma once

#include <optional>
#include <string>
#include <vector>

#include "induct/linalg.hpp"

namespace induct {

// One attention head. rpe_slope absent means dot-product logits only; the
// strict causal mask (query s attends keys tau < s) applies either way.
struct HeadParams {
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;
  std::optional<Real> rpe_slope;
};

// Token-wise two-layer ReLU block: x -> w_out * relu(w_in * x + b_in).
struct FFNParams {
  Matrix w_in;
  std::vector<Real> b_in;
  Matrix w_out;
  std::size_t width() const { return w_in.rows; }
};

struct LayerParams {
  std::vector<HeadParams> heads;
  Matrix w_o;
  bool use_residual = false;
  std::optional<FFNParams> ffn;
  // Smallest key position (1-based) this layer may attend to. Keys below it
  // are masked, matching constructions whose second-layer softmax starts at a
  // fixed offset. 1 means plain strict causality.
  std::size_t key_floor = 1;
};

struct TransformerParams {
  Matrix w_e;
  std::vector<Real> b_e;
  std::vector<LayerParams> layers;
  std::optional<Matrix> readout;

  std::size_t hidden_dim() const { return w_e.rows; }
  std::size_t token_dim() const { return w_e.cols; }
};

// RPE logit matrix, entry (key tau, query s) = -slope*(s - tau - 1) for
// s - tau >= 1 and masked otherwise (both 1-based; stored 0-based).
Matrix rpe_matrix(Real slope, std::size_t L);

// Token-wise FFN evaluation w_out * relu(w_in x + b_in).
std::vector<Real> ffn_forward(const FFNParams& ffn, std::span<const Real> x);

// Forward pass of one head over hidden sequence Z (D x L). Columns whose
// attention context is empty come out as zero vectors. `key_valid`, when
// given, marks hidden tokens usable as keys; `key_floor` masks keys below a
// position. `empty_context`, when given, reports flagged columns.
Matrix head_forward(const Matrix& z, const HeadParams& head,
                    const std::vector<char>* key_valid = nullptr, std::size_t key_floor = 1,
                    std::vector<char>* empty_context = nullptr);

// Full layer: sum heads, project by w_o, optional residual, optional FFN with
// its own residual. `valid` is updated: columns with empty context in this
// layer become invalid and are excluded as keys downstream.
Matrix layer_forward(const Matrix& z, const LayerParams& layer, std::vector<char>* valid = nullptr);

// Embeds, applies the first `n_layers` layers (no readout); used for probing.
Matrix forward_layers(const Matrix& seq, const TransformerParams& params, std::size_t n_layers,
                      std::vector<char>* valid = nullptr);

// Full forward; returns final hidden sequence (readout not applied).
Matrix forward(const Matrix& seq, const TransformerParams& params, std::vector<char>* valid = nullptr);

// Embeds, applies all layers and the readout, returns the last token.
std::vector<Real> forward_last(const Matrix& seq, const TransformerParams& params);

// JSON (de)serialization with explicit shape fields and row-major entries.
std::string transformer_to_json(const TransformerParams& params);
TransformerParams transformer_from_json(const std::string& text);

}  // namespace induct
