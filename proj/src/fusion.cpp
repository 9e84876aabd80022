#include "gazekit/fusion.hpp"

#include <cmath>

#include "gazekit/error.hpp"

namespace gazekit {

MlpHead MlpHead::init(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
  MlpHead h;
  h.w1 = Tensor::xavier_uniform(in, hidden, rng);
  h.b1 = Tensor::zeros({hidden}, true);
  h.w2 = Tensor::xavier_uniform(hidden, out, rng);
  h.b2 = Tensor::zeros({out}, true);
  return h;
}

void MlpHead::collect(const std::string& prefix,
                      std::vector<std::pair<std::string, Tensor>>& out) const {
  out.emplace_back(prefix + ".w1", w1);
  out.emplace_back(prefix + ".b1", b1);
  out.emplace_back(prefix + ".w2", w2);
  out.emplace_back(prefix + ".b2", b2);
}

FusionParams FusionParams::init(std::size_t spatial_dim, std::size_t temporal_dim,
                                std::size_t fused_dim, std::size_t head_hidden,
                                Rng& rng) {
  const std::size_t combined = spatial_dim + temporal_dim;
  FusionParams p;
  p.proj_combined_w = Tensor::xavier_uniform(combined, fused_dim, rng);
  p.proj_combined_b = Tensor::zeros({fused_dim}, true);
  p.proj_spatial_w = Tensor::xavier_uniform(spatial_dim, fused_dim, rng);
  p.proj_spatial_b = Tensor::zeros({fused_dim}, true);
  p.proj_temporal_w = Tensor::xavier_uniform(temporal_dim, fused_dim, rng);
  p.proj_temporal_b = Tensor::zeros({fused_dim}, true);
  p.fuse_w = Tensor::xavier_uniform(combined, 1, rng);
  p.fuse_b = Tensor::zeros({1}, true);
  p.gaze = MlpHead::init(fused_dim, head_hidden, 2, rng);
  p.conf = MlpHead::init(fused_dim, head_hidden, 1, rng);
  return p;
}

void FusionParams::collect(const std::string& prefix,
                           std::vector<std::pair<std::string, Tensor>>& out) const {
  out.emplace_back(prefix + ".proj_combined_w", proj_combined_w);
  out.emplace_back(prefix + ".proj_combined_b", proj_combined_b);
  out.emplace_back(prefix + ".proj_spatial_w", proj_spatial_w);
  out.emplace_back(prefix + ".proj_spatial_b", proj_spatial_b);
  out.emplace_back(prefix + ".proj_temporal_w", proj_temporal_w);
  out.emplace_back(prefix + ".proj_temporal_b", proj_temporal_b);
  out.emplace_back(prefix + ".fuse_w", fuse_w);
  out.emplace_back(prefix + ".fuse_b", fuse_b);
  gaze.collect(prefix + ".gaze", out);
  conf.collect(prefix + ".conf", out);
}

FusionOutput fuse(Tape& tape, const Tensor& f_spatial, const Tensor& f_temporal,
                  const FusionParams& params, ForwardTrace* trace) {
  Tensor combined = tape.concat_cols(f_spatial, f_temporal);
  Tensor gate_in = tape.add_row(tape.matmul(combined, params.fuse_w), params.fuse_b);
  Tensor w_s = tape.sigmoid(gate_in);                          // [1 x 1]
  Tensor w_t = tape.add_scalar(tape.scale(w_s, -1.0), 1.0);    // 1 - w_s

  Tensor ps = tape.add_row(tape.matmul(f_spatial, params.proj_spatial_w),
                           params.proj_spatial_b);
  Tensor pt = tape.add_row(tape.matmul(f_temporal, params.proj_temporal_w),
                           params.proj_temporal_b);
  Tensor pc = tape.add_row(tape.matmul(combined, params.proj_combined_w),
                           params.proj_combined_b);
  Tensor weighted = tape.add(tape.scale_by(ps, w_s), tape.scale_by(pt, w_t));
  FusionOutput out{tape.add(weighted, pc), w_s, w_t};
  if (trace) {
    trace->fusion_w_s = out.w_s;
    trace->fusion_w_t = out.w_t;
  }
  return out;
}

namespace {

Tensor head_forward(Tape& tape, const Tensor& x, const MlpHead& head) {
  Tensor hidden = tape.relu(tape.add_row(tape.matmul(x, head.w1), head.b1));
  return tape.sigmoid(tape.add_row(tape.matmul(hidden, head.w2), head.b2));
}

void require_batch(const Tensor& pred, const Tensor& gt, const char* op) {
  if (pred.rank() != 2 || pred.cols() != 2)
    throw DataError(std::string(op) + ": predictions must be [N x 2], got " +
                    shape_str(pred.shape()));
  if (gt.shape() != pred.shape())
    throw DataError(std::string(op) + ": prediction/target shapes differ: " +
                    shape_str(pred.shape()) + " vs " + shape_str(gt.shape()));
}

}  // namespace

Tensor predict_gaze(Tape& tape, const Tensor& fused, const FusionParams& params) {
  return head_forward(tape, fused, params.gaze);
}

Tensor predict_confidence(Tape& tape, const Tensor& fused,
                          const FusionParams& params) {
  return head_forward(tape, fused, params.conf);
}

Tensor gaze_loss(Tape& tape, const Tensor& pred, const Tensor& gt) {
  require_batch(pred, gt, "gaze_loss");
  Tensor diff = tape.sub(pred, gt);
  Tensor sq = tape.mul(diff, diff);
  return tape.scale(tape.sum(sq), 1.0 / static_cast<double>(pred.rows()));
}

Tensor confidence_loss(Tape& tape, const Tensor& conf, const Tensor& pred,
                       const Tensor& gt, const LossConfig& cfg) {
  require_batch(pred, gt, "confidence_loss");
  if (conf.rank() != 2 || conf.cols() != 1 || conf.rows() != pred.rows())
    throw DataError("confidence_loss: confidence must be [N x 1] matching "
                    "predictions, got " + shape_str(conf.shape()));
  const std::size_t n = pred.rows();
  std::vector<double> target(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = pred.at(i, 0) - gt.at(i, 0);
    const double dy = pred.at(i, 1) - gt.at(i, 1);
    target[i] = std::sqrt(dx * dx + dy * dy) < cfg.tau ? 1.0 : 0.0;
  }
  Tensor labels = Tensor::from_data({n, 1}, std::move(target));
  Tensor diff = tape.sub(conf, labels);
  return tape.scale(tape.sum(tape.mul(diff, diff)), 1.0 / static_cast<double>(n));
}

Tensor total_loss(Tape& tape, const Tensor& pred, const Tensor& gt,
                  const Tensor& conf, const LossConfig& cfg) {
  Tensor lg = tape.scale(gaze_loss(tape, pred, gt), cfg.lambda_gaze);
  Tensor lc = tape.scale(confidence_loss(tape, conf, pred, gt, cfg), cfg.lambda_conf);
  return tape.add(lg, lc);
}

}  // namespace gazekit
