#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gazekit/data.hpp"
#include "gazekit/rng.hpp"
#include "gazekit/sphere.hpp"
#include "gazekit/tensor.hpp"
#include "gazekit/trace.hpp"

namespace gazekit {

// Scene encoder hyperparameters. The reference configuration is a 256x512
// frame with 16px patches, 384-dim embeddings, 6 layers of 8 heads, FFN 1536,
// dropout 0.1 and degree-4 harmonics.
struct VitConfig {
  std::size_t image_h = 256;
  std::size_t image_w = 512;
  std::size_t patch_px = 16;
  std::size_t embed_dim = 384;
  std::size_t layers = 6;
  std::size_t heads = 8;
  std::size_t ffn_dim = 1536;
  double dropout_p = 0.1;
  std::size_t sh_lmax = 4;

  void validate() const;
  std::size_t grid_rows() const { return image_h / patch_px; }
  std::size_t grid_cols() const { return image_w / patch_px; }
  std::size_t n_tokens() const { return grid_rows() * grid_cols(); }
  std::size_t patch_dim() const { return 3 * patch_px * patch_px; }
  std::size_t head_dim() const { return embed_dim / heads; }
  std::size_t sh_coeffs() const { return (sh_lmax + 1) * (sh_lmax + 1); }
  PatchGrid grid() const { return {grid_rows(), grid_cols(), patch_px}; }
};

struct VitLayerParams {
  Tensor w_q, w_k, w_v, w_o;  // each [d x d]
  Tensor ffn_w1;              // [d x ffn]
  Tensor ffn_w2;              // [ffn x d]
  Tensor ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;  // each [d]
};

struct VitParams {
  Tensor patch_proj;  // [3*p^2 x d]
  Tensor patch_bias;  // [d]
  Tensor pe_proj;     // [(lmax+1)^2 x d]
  Tensor pe_bias;     // [d]
  std::vector<VitLayerParams> layers;

  static VitParams init(const VitConfig& cfg, Rng& rng);
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor>>& out) const;
};

// Flattened RGB patches, one row per token, row-major over the patch grid.
Tensor extract_patches(const SceneImage& image, const VitConfig& cfg);

// Linear projection plus bias, each token scaled by its mean-1 area weight.
Tensor embed_patches(Tape& tape, const Tensor& patches, const VitParams& params,
                     const VitConfig& cfg);

// Spherical-harmonic positional encodings projected to the embedding width.
Tensor positional_encoding(Tape& tape, const VitParams& params,
                           const VitConfig& cfg);

// Pre-norm residual block: x + Drop(MHA(LN(x))), then x + Drop(FFN(LN(x))).
Tensor attention_layer(Tape& tape, const Tensor& x, const VitLayerParams& layer,
                       const VitConfig& cfg, bool train, Rng& rng,
                       ForwardTrace* trace = nullptr);

// Full scene encoding: patches -> embed + PE -> layers -> mean pool -> [1 x d].
Tensor encode_scene(Tape& tape, const SceneImage& image, const VitParams& params,
                    const VitConfig& cfg, bool train, Rng& rng,
                    ForwardTrace* trace = nullptr);

}  // namespace gazekit
