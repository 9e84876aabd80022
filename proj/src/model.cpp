#include "gazekit/model.hpp"

#include "gazekit/error.hpp"

namespace gazekit {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::full: return "full";
    case BaselineKind::temporal_only: return "temporal";
    case BaselineKind::spatial_only: return "spatial";
    case BaselineKind::center_fixed: return "center";
  }
  throw DataError("unknown model kind");
}

BaselineKind baseline_from_string(const std::string& name) {
  if (name == "full") return BaselineKind::full;
  if (name == "temporal" || name == "temporal_only") return BaselineKind::temporal_only;
  if (name == "spatial" || name == "spatial_only") return BaselineKind::spatial_only;
  if (name == "center" || name == "center_fixed") return BaselineKind::center_fixed;
  throw DataError("unknown model kind '" + name +
                  "' (expected full|temporal|spatial|center)");
}

void ModelConfig::validate() const {
  vit.validate();
  if (lstm_hidden == 0 || fused_dim == 0 || head_hidden == 0)
    throw DataError("model: zero-sized dimension in config");
}

ModelConfig ModelConfig::paper_config() {
  ModelConfig cfg;  // defaults carry the reference dimensions
  return cfg;
}

ModelConfig ModelConfig::desk_config() {
  ModelConfig cfg;
  cfg.vit.image_h = 64;
  cfg.vit.image_w = 128;
  cfg.vit.embed_dim = 32;
  cfg.vit.layers = 2;
  cfg.vit.heads = 4;
  cfg.vit.ffn_dim = 128;
  cfg.lstm_hidden = 16;
  cfg.fused_dim = 24;
  cfg.head_hidden = 12;
  return cfg;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  if (vit) vit->collect("vit", out);
  if (lstm) lstm->collect("lstm", out);
  if (fusion) fusion->collect("fusion", out);
  return out;
}

void ModelParams::zero_grads() const {
  for (auto& [name, t] : named()) t.zero_grad();
}

ModelParams ModelParams::clone() const {
  ModelParams copy;
  if (vit) {
    VitParams v;
    v.patch_proj = vit->patch_proj.clone();
    v.patch_bias = vit->patch_bias.clone();
    v.pe_proj = vit->pe_proj.clone();
    v.pe_bias = vit->pe_bias.clone();
    for (const auto& l : vit->layers) {
      VitLayerParams c;
      c.w_q = l.w_q.clone();
      c.w_k = l.w_k.clone();
      c.w_v = l.w_v.clone();
      c.w_o = l.w_o.clone();
      c.ffn_w1 = l.ffn_w1.clone();
      c.ffn_w2 = l.ffn_w2.clone();
      c.ln1_gamma = l.ln1_gamma.clone();
      c.ln1_beta = l.ln1_beta.clone();
      c.ln2_gamma = l.ln2_gamma.clone();
      c.ln2_beta = l.ln2_beta.clone();
      v.layers.push_back(std::move(c));
    }
    copy.vit = std::move(v);
  }
  if (lstm) {
    LstmParams l;
    l.w_f = lstm->w_f.clone();
    l.w_i = lstm->w_i.clone();
    l.w_c = lstm->w_c.clone();
    l.w_o = lstm->w_o.clone();
    l.b_f = lstm->b_f.clone();
    l.b_i = lstm->b_i.clone();
    l.b_c = lstm->b_c.clone();
    l.b_o = lstm->b_o.clone();
    l.w_a = lstm->w_a.clone();
    copy.lstm = std::move(l);
  }
  if (fusion) {
    FusionParams f;
    f.proj_combined_w = fusion->proj_combined_w.clone();
    f.proj_combined_b = fusion->proj_combined_b.clone();
    f.proj_spatial_w = fusion->proj_spatial_w.clone();
    f.proj_spatial_b = fusion->proj_spatial_b.clone();
    f.proj_temporal_w = fusion->proj_temporal_w.clone();
    f.proj_temporal_b = fusion->proj_temporal_b.clone();
    f.fuse_w = fusion->fuse_w.clone();
    f.fuse_b = fusion->fuse_b.clone();
    auto clone_head = [](const MlpHead& h) {
      MlpHead c;
      c.w1 = h.w1.clone();
      c.b1 = h.b1.clone();
      c.w2 = h.w2.clone();
      c.b2 = h.b2.clone();
      return c;
    };
    f.gaze = clone_head(fusion->gaze);
    f.conf = clone_head(fusion->conf);
    copy.fusion = std::move(f);
  }
  return copy;
}

ModelParams build_model(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ModelParams p;
  switch (cfg.kind) {
    case BaselineKind::full:
      p.vit = VitParams::init(cfg.vit, rng);
      p.lstm = LstmParams::init(cfg.lstm_hidden, rng);
      p.fusion = FusionParams::init(cfg.vit.embed_dim, cfg.lstm_hidden,
                                    cfg.fused_dim, cfg.head_hidden, rng);
      break;
    case BaselineKind::temporal_only: {
      p.lstm = LstmParams::init(cfg.lstm_hidden, rng);
      FusionParams f;
      f.proj_temporal_w = Tensor::xavier_uniform(cfg.lstm_hidden, cfg.fused_dim, rng);
      f.proj_temporal_b = Tensor::zeros({cfg.fused_dim}, true);
      f.gaze = MlpHead::init(cfg.fused_dim, cfg.head_hidden, 2, rng);
      f.conf = MlpHead::init(cfg.fused_dim, cfg.head_hidden, 1, rng);
      p.fusion = std::move(f);
      break;
    }
    case BaselineKind::spatial_only: {
      p.vit = VitParams::init(cfg.vit, rng);
      FusionParams f;
      f.proj_spatial_w = Tensor::xavier_uniform(cfg.vit.embed_dim, cfg.fused_dim, rng);
      f.proj_spatial_b = Tensor::zeros({cfg.fused_dim}, true);
      f.gaze = MlpHead::init(cfg.fused_dim, cfg.head_hidden, 2, rng);
      f.conf = MlpHead::init(cfg.fused_dim, cfg.head_hidden, 1, rng);
      p.fusion = std::move(f);
      break;
    }
    case BaselineKind::center_fixed:
      break;  // no learned parameters
  }
  return p;
}

Prediction model_forward(Tape& tape, const SceneImage& image,
                         const std::vector<GazePoint>& window,
                         const ModelParams& params, const ModelConfig& cfg,
                         bool train, Rng& rng, ForwardTrace* trace) {
  switch (cfg.kind) {
    case BaselineKind::full: {
      Tensor f_spatial =
          encode_scene(tape, image, *params.vit, cfg.vit, train, rng, trace);
      Tensor f_temporal = encode_sequence(tape, window, *params.lstm, trace);
      FusionOutput fused = fuse(tape, f_spatial, f_temporal, *params.fusion, trace);
      return {predict_gaze(tape, fused.fused, *params.fusion),
              predict_confidence(tape, fused.fused, *params.fusion)};
    }
    case BaselineKind::temporal_only: {
      Tensor f_temporal = encode_sequence(tape, window, *params.lstm, trace);
      Tensor projected =
          tape.add_row(tape.matmul(f_temporal, params.fusion->proj_temporal_w),
                       params.fusion->proj_temporal_b);
      return {predict_gaze(tape, projected, *params.fusion),
              predict_confidence(tape, projected, *params.fusion)};
    }
    case BaselineKind::spatial_only: {
      Tensor f_spatial =
          encode_scene(tape, image, *params.vit, cfg.vit, train, rng, trace);
      Tensor projected =
          tape.add_row(tape.matmul(f_spatial, params.fusion->proj_spatial_w),
                       params.fusion->proj_spatial_b);
      return {predict_gaze(tape, projected, *params.fusion),
              predict_confidence(tape, projected, *params.fusion)};
    }
    case BaselineKind::center_fixed:
      return {Tensor::from_data({1, 2}, {0.5, 0.5}), Tensor::full({1, 1}, 1.0)};
  }
  throw DataError("model_forward: unknown kind");
}

}  // namespace gazekit
