#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gazekit/data.hpp"
#include "gazekit/rng.hpp"
#include "gazekit/tensor.hpp"
#include "gazekit/trace.hpp"

namespace gazekit {

// Input rows are [x, y, confidence, log(1 + dt_ms)].
inline constexpr std::size_t kSeqInputDim = 4;

struct LstmParams {
  Tensor w_f, w_i, w_c, w_o;  // each [(hidden+input) x hidden]
  Tensor b_f, b_i, b_c, b_o;  // each [hidden]
  Tensor w_a;                 // [hidden x hidden] temporal attention

  std::size_t hidden() const { return b_f.size(); }

  // Forget-gate bias starts at 1 so early training keeps its memory.
  static LstmParams init(std::size_t hidden, Rng& rng);
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor>>& out) const;
};

// Validates and featurizes a 10-point window; dt of the first row is 0.
Tensor prepare_sequence(const std::vector<GazePoint>& points,
                        std::size_t len = kWindowLen);

// One cell update; returns (h_t, c_t), both [1 x hidden].
std::pair<Tensor, Tensor> lstm_step(Tape& tape, const Tensor& x_t,
                                    const Tensor& h_prev, const Tensor& c_prev,
                                    const LstmParams& params);

// Softmax over h_t^T W_a h_final, then the weighted state sum. [1 x hidden].
Tensor temporal_attention(Tape& tape, const Tensor& h_all, const LstmParams& params,
                          ForwardTrace* trace = nullptr);

// prepare -> unroll from zero state -> temporal attention.
Tensor encode_sequence(Tape& tape, const std::vector<GazePoint>& points,
                       const LstmParams& params, ForwardTrace* trace = nullptr);

}  // namespace gazekit
