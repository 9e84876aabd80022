#include "gazekit/vit.hpp"

#include <cmath>

#include "gazekit/error.hpp"

namespace gazekit {

void VitConfig::validate() const {
  if (patch_px == 0 || image_h % patch_px != 0 || image_w % patch_px != 0)
    throw DataError("vit: image " + std::to_string(image_w) + "x" +
                    std::to_string(image_h) + " not divisible by patch size " +
                    std::to_string(patch_px));
  if (image_w != 2 * image_h)
    throw DataError("vit: equirectangular input needs width == 2*height");
  if (heads == 0 || embed_dim % heads != 0)
    throw DataError("vit: embed_dim " + std::to_string(embed_dim) +
                    " not divisible by heads " + std::to_string(heads));
  if (layers == 0 || ffn_dim == 0 || embed_dim == 0)
    throw DataError("vit: zero-sized dimension in config");
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    throw DataError("vit: dropout_p outside [0,1)");
}

VitParams VitParams::init(const VitConfig& cfg, Rng& rng) {
  cfg.validate();
  VitParams p;
  p.patch_proj = Tensor::xavier_uniform(cfg.patch_dim(), cfg.embed_dim, rng);
  p.patch_bias = Tensor::zeros({cfg.embed_dim}, true);
  p.pe_proj = Tensor::xavier_uniform(cfg.sh_coeffs(), cfg.embed_dim, rng);
  p.pe_bias = Tensor::zeros({cfg.embed_dim}, true);
  p.layers.resize(cfg.layers);
  for (auto& l : p.layers) {
    l.w_q = Tensor::xavier_uniform(cfg.embed_dim, cfg.embed_dim, rng);
    l.w_k = Tensor::xavier_uniform(cfg.embed_dim, cfg.embed_dim, rng);
    l.w_v = Tensor::xavier_uniform(cfg.embed_dim, cfg.embed_dim, rng);
    l.w_o = Tensor::xavier_uniform(cfg.embed_dim, cfg.embed_dim, rng);
    l.ffn_w1 = Tensor::xavier_uniform(cfg.embed_dim, cfg.ffn_dim, rng);
    l.ffn_w2 = Tensor::xavier_uniform(cfg.ffn_dim, cfg.embed_dim, rng);
    l.ln1_gamma = Tensor::full({cfg.embed_dim}, 1.0, true);
    l.ln1_beta = Tensor::zeros({cfg.embed_dim}, true);
    l.ln2_gamma = Tensor::full({cfg.embed_dim}, 1.0, true);
    l.ln2_beta = Tensor::zeros({cfg.embed_dim}, true);
  }
  return p;
}

void VitParams::collect(const std::string& prefix,
                        std::vector<std::pair<std::string, Tensor>>& out) const {
  out.emplace_back(prefix + ".patch_proj", patch_proj);
  out.emplace_back(prefix + ".patch_bias", patch_bias);
  out.emplace_back(prefix + ".pe_proj", pe_proj);
  out.emplace_back(prefix + ".pe_bias", pe_bias);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string lp = prefix + ".layer" + std::to_string(i);
    const VitLayerParams& l = layers[i];
    out.emplace_back(lp + ".w_q", l.w_q);
    out.emplace_back(lp + ".w_k", l.w_k);
    out.emplace_back(lp + ".w_v", l.w_v);
    out.emplace_back(lp + ".w_o", l.w_o);
    out.emplace_back(lp + ".ffn_w1", l.ffn_w1);
    out.emplace_back(lp + ".ffn_w2", l.ffn_w2);
    out.emplace_back(lp + ".ln1_gamma", l.ln1_gamma);
    out.emplace_back(lp + ".ln1_beta", l.ln1_beta);
    out.emplace_back(lp + ".ln2_gamma", l.ln2_gamma);
    out.emplace_back(lp + ".ln2_beta", l.ln2_beta);
  }
}

Tensor extract_patches(const SceneImage& image, const VitConfig& cfg) {
  cfg.validate();
  if (image.width != cfg.image_w || image.height != cfg.image_h)
    throw DataError("extract_patches: image " + std::to_string(image.width) + "x" +
                    std::to_string(image.height) + " does not match config " +
                    std::to_string(cfg.image_w) + "x" + std::to_string(cfg.image_h));
  const std::size_t p = cfg.patch_px;
  const std::size_t rows = cfg.grid_rows(), cols = cfg.grid_cols();
  Tensor out = Tensor::zeros({rows * cols, cfg.patch_dim()});
  double* dst = out.data().data();
  for (std::size_t gi = 0; gi < rows; ++gi)
    for (std::size_t gj = 0; gj < cols; ++gj) {
      double* row = dst + (gi * cols + gj) * cfg.patch_dim();
      std::size_t k = 0;
      for (std::size_t py = 0; py < p; ++py)
        for (std::size_t px = 0; px < p; ++px)
          for (std::size_t c = 0; c < 3; ++c)
            row[k++] = image.at(gi * p + py, gj * p + px, c);
    }
  return out;
}

Tensor embed_patches(Tape& tape, const Tensor& patches, const VitParams& params,
                     const VitConfig& cfg) {
  Tensor projected =
      tape.add_row(tape.matmul(patches, params.patch_proj), params.patch_bias);
  return tape.scale_rows(projected, grid_area_weights(cfg.grid()));
}

Tensor positional_encoding(Tape& tape, const VitParams& params,
                           const VitConfig& cfg) {
  const PatchGrid grid = cfg.grid();
  const std::size_t nb = cfg.sh_coeffs();
  Tensor basis = Tensor::zeros({cfg.n_tokens(), nb});
  double* dst = basis.data().data();
  for (std::size_t i = 0; i < grid.rows; ++i)
    for (std::size_t j = 0; j < grid.cols; ++j) {
      const std::vector<double> y =
          real_sh_basis(patch_center_to_sphere(i, j, grid), cfg.sh_lmax);
      std::copy(y.begin(), y.end(), dst + (i * grid.cols + j) * nb);
    }
  return tape.add_row(tape.matmul(basis, params.pe_proj), params.pe_bias);
}

Tensor attention_layer(Tape& tape, const Tensor& x, const VitLayerParams& layer,
                       const VitConfig& cfg, bool train, Rng& rng,
                       ForwardTrace* trace) {
  const std::size_t dk = cfg.head_dim();
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  Tensor normed = tape.layer_norm(x, layer.ln1_gamma, layer.ln1_beta);
  Tensor q = tape.matmul(normed, layer.w_q);
  Tensor k = tape.matmul(normed, layer.w_k);
  Tensor v = tape.matmul(normed, layer.w_v);

  Tensor merged;
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    Tensor qh = tape.slice_cols(q, h * dk, dk);
    Tensor kh = tape.slice_cols(k, h * dk, dk);
    Tensor vh = tape.slice_cols(v, h * dk, dk);
    Tensor scores = tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt_dk);
    Tensor alpha = tape.softmax(scores);
    if (trace) trace->attention.push_back(alpha);
    Tensor oh = tape.matmul(alpha, vh);
    merged = merged.defined() ? tape.concat_cols(merged, oh) : oh;
  }
  Tensor attended = tape.matmul(merged, layer.w_o);
  Tensor x1 = tape.add(x, tape.dropout(attended, cfg.dropout_p, rng, train));

  Tensor normed2 = tape.layer_norm(x1, layer.ln2_gamma, layer.ln2_beta);
  Tensor hidden = tape.gelu(tape.matmul(normed2, layer.ffn_w1));
  Tensor ffn_out = tape.matmul(hidden, layer.ffn_w2);
  return tape.add(x1, tape.dropout(ffn_out, cfg.dropout_p, rng, train));
}

Tensor encode_scene(Tape& tape, const SceneImage& image, const VitParams& params,
                    const VitConfig& cfg, bool train, Rng& rng,
                    ForwardTrace* trace) {
  Tensor patches = extract_patches(image, cfg);
  Tensor tokens = tape.add(embed_patches(tape, patches, params, cfg),
                           positional_encoding(tape, params, cfg));
  for (const VitLayerParams& layer : params.layers)
    tokens = attention_layer(tape, tokens, layer, cfg, train, rng, trace);
  return tape.mean_rows(tokens);
}

}  // namespace gazekit
