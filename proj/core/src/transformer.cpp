#include "induct/transformer.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace induct {

Matrix rpe_matrix(Real slope, std::size_t L) {
  if (L < 2) throw std::invalid_argument("rpe_matrix: L must be >= 2");
  Matrix r(L, L, kMasked);
  for (std::size_t tau = 1; tau <= L; ++tau)
    for (std::size_t s = tau + 1; s <= L; ++s)
      r(tau - 1, s - 1) = -slope * static_cast<Real>(s - tau - 1);
  return r;
}

Matrix head_forward(const Matrix& z, const HeadParams& head, const std::vector<char>* key_valid,
                    std::size_t key_floor, std::vector<char>* empty_context) {
  const std::size_t D = z.rows, L = z.cols;
  if (head.w_q.cols != D || head.w_k.cols != D || head.w_v.cols != D)
    throw std::invalid_argument("head_forward: dimension mismatch");
  const Matrix q = head.w_q * z;
  const Matrix k = head.w_k * z;
  const Matrix v = head.w_v * z;

  // logits(tau, s) = <q_s, k_tau> + R(tau, s); masked for tau >= s, tau < key_floor,
  // or invalid keys.
  Matrix logits(L, L, kMasked);
  const Real slope = head.rpe_slope.value_or(0.0);
  for (std::size_t s = 2; s <= L; ++s) {
    for (std::size_t tau = key_floor; tau < s; ++tau) {
      if (key_valid && !(*key_valid)[tau - 1]) continue;
      Real dot = 0.0;
      for (std::size_t i = 0; i < q.rows; ++i) dot += q(i, s - 1) * k(i, tau - 1);
      logits(tau - 1, s - 1) = dot - slope * static_cast<Real>(s - tau - 1);
    }
  }

  Matrix out(v.rows, L, 0.0);
  if (empty_context) empty_context->assign(L, 0);
  std::vector<Real> colbuf(L);
  for (std::size_t s = 0; s < L; ++s) {
    bool any = false;
    for (std::size_t tau = 0; tau < L; ++tau) {
      colbuf[tau] = logits(tau, s);
      any = any || !is_masked(colbuf[tau]);
    }
    if (!any) {
      if (empty_context) (*empty_context)[s] = 1;
      continue;  // zero column
    }
    const std::vector<Real> w = softmax_masked(colbuf);
    for (std::size_t tau = 0; tau < L; ++tau) {
      if (w[tau] == 0.0) continue;
      for (std::size_t i = 0; i < v.rows; ++i) out(i, s) += w[tau] * v(i, tau);
    }
  }
  return out;
}

std::vector<Real> ffn_forward(const FFNParams& ffn, std::span<const Real> x) {
  std::vector<Real> h = matvec(ffn.w_in, x);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::max(h[i] + ffn.b_in[i], 0.0);
  return matvec(ffn.w_out, h);
}

Matrix layer_forward(const Matrix& z, const LayerParams& layer, std::vector<char>* valid) {
  const std::size_t L = z.cols;
  std::vector<char> local_valid = valid ? *valid : std::vector<char>(L, 1);

  Matrix sum;
  std::vector<char> empty(L, 0);
  for (std::size_t h = 0; h < layer.heads.size(); ++h) {
    std::vector<char> e;
    Matrix o = head_forward(z, layer.heads[h], &local_valid, layer.key_floor, &e);
    if (h == 0) {
      sum = std::move(o);
      empty = e;
    } else {
      sum += o;
    }
  }
  if (layer.heads.empty()) {
    sum = Matrix(z.rows, L, 0.0);
    empty.assign(L, 0);
  }
  if (layer.w_o.cols != sum.rows) throw std::invalid_argument("layer_forward: w_o dimension mismatch");
  Matrix out = layer.w_o * sum;
  if (layer.use_residual) {
    if (out.rows != z.rows) throw std::invalid_argument("layer_forward: residual dimension mismatch");
    out += z;
  }
  if (layer.ffn) {
    for (std::size_t s = 0; s < L; ++s) {
      std::vector<Real> col = out.col(s);
      std::vector<Real> f = ffn_forward(*layer.ffn, col);
      if (f.size() != col.size()) throw std::invalid_argument("layer_forward: ffn dimension mismatch");
      for (std::size_t i = 0; i < col.size(); ++i) out(i, s) = col[i] + f[i];
    }
  }
  if (valid)
    for (std::size_t s = 0; s < L; ++s) (*valid)[s] = local_valid[s] && !empty[s];
  return out;
}

Matrix forward_layers(const Matrix& seq, const TransformerParams& params, std::size_t n_layers,
                      std::vector<char>* valid) {
  const std::size_t L = seq.cols;
  Matrix z = params.w_e * seq;
  for (std::size_t s = 0; s < L; ++s)
    for (std::size_t i = 0; i < z.rows; ++i) z(i, s) += params.b_e[i];
  std::vector<char> v(L, 1);
  for (std::size_t u = 0; u < n_layers; ++u) z = layer_forward(z, params.layers[u], &v);
  if (valid) *valid = v;
  return z;
}

Matrix forward(const Matrix& seq, const TransformerParams& params, std::vector<char>* valid) {
  return forward_layers(seq, params, params.layers.size(), valid);
}

std::vector<Real> forward_last(const Matrix& seq, const TransformerParams& params) {
  const Matrix z = forward(seq, params);
  std::vector<Real> last = z.col(z.cols - 1);
  if (params.readout) return matvec(*params.readout, last);
  return last;
}

// ---------------------------------------------------------------------------
// JSON serialization

using nlohmann::json;

static json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows}, {"cols", m.cols}, {"entries", m.data}};
}

static Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.data = j.at("entries").get<std::vector<Real>>();
  if (m.data.size() != m.rows * m.cols) throw std::invalid_argument("matrix json: entry count mismatch");
  return m;
}

std::string transformer_to_json(const TransformerParams& params) {
  json j;
  j["w_e"] = matrix_to_json(params.w_e);
  j["b_e"] = params.b_e;
  j["layers"] = json::array();
  for (const LayerParams& layer : params.layers) {
    json jl;
    jl["heads"] = json::array();
    for (const HeadParams& h : layer.heads) {
      json jh;
      jh["w_q"] = matrix_to_json(h.w_q);
      jh["w_k"] = matrix_to_json(h.w_k);
      jh["w_v"] = matrix_to_json(h.w_v);
      if (h.rpe_slope) jh["rpe_slope"] = *h.rpe_slope;
      jl["heads"].push_back(std::move(jh));
    }
    jl["w_o"] = matrix_to_json(layer.w_o);
    jl["use_residual"] = layer.use_residual;
    jl["key_floor"] = layer.key_floor;
    if (layer.ffn) {
      jl["ffn"] = json{{"w_in", matrix_to_json(layer.ffn->w_in)},
                       {"b_in", layer.ffn->b_in},
                       {"w_out", matrix_to_json(layer.ffn->w_out)}};
    }
    j["layers"].push_back(std::move(jl));
  }
  if (params.readout) j["readout"] = matrix_to_json(*params.readout);
  return j.dump(2);
}

TransformerParams transformer_from_json(const std::string& text) {
  const json j = json::parse(text);
  TransformerParams p;
  p.w_e = matrix_from_json(j.at("w_e"));
  p.b_e = j.at("b_e").get<std::vector<Real>>();
  for (const json& jl : j.at("layers")) {
    LayerParams layer;
    for (const json& jh : jl.at("heads")) {
      HeadParams h;
      h.w_q = matrix_from_json(jh.at("w_q"));
      h.w_k = matrix_from_json(jh.at("w_k"));
      h.w_v = matrix_from_json(jh.at("w_v"));
      if (jh.contains("rpe_slope")) h.rpe_slope = jh.at("rpe_slope").get<Real>();
      layer.heads.push_back(std::move(h));
    }
    layer.w_o = matrix_from_json(jl.at("w_o"));
    layer.use_residual = jl.at("use_residual").get<bool>();
    layer.key_floor = jl.value("key_floor", std::size_t{1});
    if (jl.contains("ffn")) {
      FFNParams f;
      f.w_in = matrix_from_json(jl.at("ffn").at("w_in"));
      f.b_in = jl.at("ffn").at("b_in").get<std::vector<Real>>();
      f.w_out = matrix_from_json(jl.at("ffn").at("w_out"));
      layer.ffn = std::move(f);
    }
    p.layers.push_back(std::move(layer));
  }
  if (j.contains("readout")) p.readout = matrix_from_json(j.at("readout"));
  return p;
}

}  // namespace induct
