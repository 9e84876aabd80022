#include "gazekit/temporal.hpp"

#include <cmath>

#include "gazekit/error.hpp"

namespace gazekit {

LstmParams LstmParams::init(std::size_t hidden, Rng& rng) {
  if (hidden == 0) throw DataError("lstm: hidden size must be positive");
  LstmParams p;
  const std::size_t in = hidden + kSeqInputDim;
  p.w_f = Tensor::xavier_uniform(in, hidden, rng);
  p.w_i = Tensor::xavier_uniform(in, hidden, rng);
  p.w_c = Tensor::xavier_uniform(in, hidden, rng);
  p.w_o = Tensor::xavier_uniform(in, hidden, rng);
  p.b_f = Tensor::full({hidden}, 1.0, true);
  p.b_i = Tensor::zeros({hidden}, true);
  p.b_c = Tensor::zeros({hidden}, true);
  p.b_o = Tensor::zeros({hidden}, true);
  p.w_a = Tensor::xavier_uniform(hidden, hidden, rng);
  return p;
}

void LstmParams::collect(const std::string& prefix,
                         std::vector<std::pair<std::string, Tensor>>& out) const {
  out.emplace_back(prefix + ".w_f", w_f);
  out.emplace_back(prefix + ".w_i", w_i);
  out.emplace_back(prefix + ".w_c", w_c);
  out.emplace_back(prefix + ".w_o", w_o);
  out.emplace_back(prefix + ".b_f", b_f);
  out.emplace_back(prefix + ".b_i", b_i);
  out.emplace_back(prefix + ".b_c", b_c);
  out.emplace_back(prefix + ".b_o", b_o);
  out.emplace_back(prefix + ".w_a", w_a);
}

Tensor prepare_sequence(const std::vector<GazePoint>& points, std::size_t len) {
  if (points.size() != len)
    throw DataError("sequence: got " + std::to_string(points.size()) +
                    " points, required window length is " + std::to_string(len));
  std::vector<double> rows;
  rows.reserve(len * kSeqInputDim);
  for (std::size_t i = 0; i < len; ++i) {
    const GazePoint& p = points[i];
    if (p.x < 0 || p.x > 1 || p.y < 0 || p.y > 1)
      throw DataError("sequence: point " + std::to_string(i) +
                      " coordinates outside [0,1]");
    if (p.confidence < 0 || p.confidence > 1)
      throw DataError("sequence: point " + std::to_string(i) +
                      " confidence outside [0,1]");
    if (i > 0 && points[i].t_ms <= points[i - 1].t_ms)
      throw DataError("sequence: timestamps not strictly increasing at point " +
                      std::to_string(i));
    const double dt = i == 0 ? 0.0 : p.t_ms - points[i - 1].t_ms;
    rows.push_back(p.x);
    rows.push_back(p.y);
    rows.push_back(p.confidence);
    rows.push_back(std::log1p(dt));
  }
  return Tensor::from_data({len, kSeqInputDim}, std::move(rows));
}

std::pair<Tensor, Tensor> lstm_step(Tape& tape, const Tensor& x_t,
                                    const Tensor& h_prev, const Tensor& c_prev,
                                    const LstmParams& params) {
  Tensor hx = tape.concat_cols(h_prev, x_t);
  Tensor f = tape.sigmoid(tape.add_row(tape.matmul(hx, params.w_f), params.b_f));
  Tensor i = tape.sigmoid(tape.add_row(tape.matmul(hx, params.w_i), params.b_i));
  Tensor c_cand = tape.tanh(tape.add_row(tape.matmul(hx, params.w_c), params.b_c));
  Tensor c = tape.add(tape.mul(f, c_prev), tape.mul(i, c_cand));
  Tensor o = tape.sigmoid(tape.add_row(tape.matmul(hx, params.w_o), params.b_o));
  Tensor h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

Tensor temporal_attention(Tape& tape, const Tensor& h_all, const LstmParams& params,
                          ForwardTrace* trace) {
  const std::size_t t_len = h_all.rows();
  Tensor h_final = tape.slice_cols(tape.transpose(h_all), t_len - 1, 1);  // [H x 1]
  // scores_t = h_t^T W_a h_final
  Tensor scores = tape.matmul(tape.matmul(h_all, params.w_a), h_final);  // [T x 1]
  Tensor alpha = tape.softmax(tape.transpose(scores));                   // [1 x T]
  if (trace) trace->temporal_attention = alpha;
  return tape.matmul(alpha, h_all);  // [1 x H]
}

Tensor encode_sequence(Tape& tape, const std::vector<GazePoint>& points,
                       const LstmParams& params, ForwardTrace* trace) {
  Tensor features = prepare_sequence(points);  // constant, no grad path
  const std::size_t hidden = params.hidden();
  Tensor h = Tensor::zeros({1, hidden});
  Tensor c = Tensor::zeros({1, hidden});
  Tensor h_all;
  for (std::size_t t = 0; t < kWindowLen; ++t) {
    const double* row = features.data().data() + t * kSeqInputDim;
    Tensor x_t = Tensor::from_data(
        {1, kSeqInputDim}, std::vector<double>(row, row + kSeqInputDim));
    std::tie(h, c) = lstm_step(tape, x_t, h, c, params);
    h_all = h_all.defined() ? tape.concat_rows(h_all, h) : h;
  }
  return temporal_attention(tape, h_all, params, trace);
}

}  // namespace gazekit
