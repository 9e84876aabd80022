#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gazekit/data.hpp"
#include "gazekit/fusion.hpp"
#include "gazekit/temporal.hpp"
#include "gazekit/trace.hpp"
#include "gazekit/vit.hpp"

namespace gazekit {

enum class BaselineKind { full, temporal_only, spatial_only, center_fixed };

std::string to_string(BaselineKind kind);
BaselineKind baseline_from_string(const std::string& name);

// Complete model hyperparameters. paper_config() carries the reference
// dimensions; desk_config() is a proportionally scaled-down variant small
// enough for finite-difference verification and quick training runs.
struct ModelConfig {
  BaselineKind kind = BaselineKind::full;
  VitConfig vit;
  std::size_t lstm_hidden = 128;
  std::size_t fused_dim = 256;
  std::size_t head_hidden = 128;

  std::size_t combined_dim() const { return vit.embed_dim + lstm_hidden; }
  void validate() const;

  static ModelConfig paper_config();
  static ModelConfig desk_config();
};

// Parameter groups present depend on the model kind: baselines drop the
// unused encoder and keep only their modality projection plus the heads.
struct ModelParams {
  std::optional<VitParams> vit;
  std::optional<LstmParams> lstm;
  std::optional<FusionParams> fusion;

  // Stable name -> tensor handles in a fixed order (checkpoint layout order).
  std::vector<std::pair<std::string, Tensor>> named() const;
  void zero_grads() const;
  ModelParams clone() const;
};

ModelParams build_model(const ModelConfig& cfg, Rng& rng);

struct Prediction {
  Tensor gaze;  // [1 x 2]
  Tensor conf;  // [1 x 1]
};

// Runs the configured pipeline. center_fixed ignores both inputs and returns
// (0.5, 0.5) with confidence 1; temporal_only ignores the image; spatial_only
// ignores the window.
Prediction model_forward(Tape& tape, const SceneImage& image,
                         const std::vector<GazePoint>& window,
                         const ModelParams& params, const ModelConfig& cfg,
                         bool train, Rng& rng, ForwardTrace* trace = nullptr);

}  // namespace gazekit
