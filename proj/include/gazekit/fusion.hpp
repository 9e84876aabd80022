#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gazekit/rng.hpp"
#include "gazekit/tensor.hpp"
#include "gazekit/trace.hpp"

namespace gazekit {

struct LossConfig {
  double lambda_gaze = 1.0;
  double lambda_conf = 0.1;
  // threshold on (unsquared) Euclidean distance in normalized coordinates;
  // ~10px horizontally on a 256x512 frame
  double tau = 0.05;
};

// Two-layer MLP head: in -> hidden (ReLU) -> out (sigmoid applied by caller).
struct MlpHead {
  Tensor w1, b1, w2, b2;

  static MlpHead init(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor>>& out) const;
};

struct FusionParams {
  Tensor proj_combined_w, proj_combined_b;  // [(s+t) x fused], [fused]
  Tensor proj_spatial_w, proj_spatial_b;    // [s x fused], [fused]
  Tensor proj_temporal_w, proj_temporal_b;  // [t x fused], [fused]
  Tensor fuse_w, fuse_b;                    // [(s+t) x 1], [1]
  MlpHead gaze;                             // fused -> hidden -> 2
  MlpHead conf;                             // fused -> hidden -> 1

  static FusionParams init(std::size_t spatial_dim, std::size_t temporal_dim,
                           std::size_t fused_dim, std::size_t head_hidden, Rng& rng);
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor>>& out) const;
};

struct FusionOutput {
  Tensor fused;  // [1 x fused]
  Tensor w_s;    // [1 x 1]
  Tensor w_t;    // [1 x 1], exactly 1 - w_s
};

// Adaptive fusion: a scalar sigmoid gate from the concatenated features
// blends the per-modality projections; the projected concatenation is kept
// as an additive path.
FusionOutput fuse(Tape& tape, const Tensor& f_spatial, const Tensor& f_temporal,
                  const FusionParams& params, ForwardTrace* trace = nullptr);

// Both heads bound outputs with a final sigmoid.
Tensor predict_gaze(Tape& tape, const Tensor& fused, const FusionParams& params);
Tensor predict_confidence(Tape& tape, const Tensor& fused,
                          const FusionParams& params);

// Mean over the batch of squared Euclidean error, normalized coordinates.
Tensor gaze_loss(Tape& tape, const Tensor& pred, const Tensor& gt);

// Mean of (c_i - I[dist_i < tau])^2. The indicator is computed from values
// and enters the graph as a constant: no gradient reaches the gaze branch.
Tensor confidence_loss(Tape& tape, const Tensor& conf, const Tensor& pred,
                       const Tensor& gt, const LossConfig& cfg);

Tensor total_loss(Tape& tape, const Tensor& pred, const Tensor& gt,
                  const Tensor& conf, const LossConfig& cfg);

}  // namespace gazekit
