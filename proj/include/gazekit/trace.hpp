#pragma once

#include <vector>

#include "gazekit/tensor.hpp"

namespace gazekit {

// Optional hooks for inspecting normalized weights inside a forward pass.
// Forward functions append when given a non-null trace; the hot path passes
// nullptr and records nothing.
struct ForwardTrace {
  // one [n x n] probability matrix per (layer, head) in execution order
  std::vector<Tensor> attention;
  Tensor temporal_attention;  // [1 x T]
  Tensor fusion_w_s;          // scalar
  Tensor fusion_w_t;          // scalar
};

}  // namespace gazekit
