#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dusev/cue.hpp"
#include "dusev/layers.hpp"
#include "dusev/matrix.hpp"

namespace dusev {

// Architecture of the fusion network: token embedding, CLS-token transformer
// encoder, and a regression head ending in a sigmoid scaled to [0, 10].
struct ModelConfig {
  int d_model = 64;
  int n_layers = 4;
  int n_heads = 8;
  int ffn_dim = 256;
  int head_dim1 = 128;
  int head_dim2 = 64;
  double score_scale = 10.0;
  std::uint64_t seed = 42;

  // Throws ConfigError when any constraint is violated.
  void validate() const;
};

// One encoder layer: self-attention projections, two layer norms, and the
// position-wise feed-forward block.
struct EncoderLayerParams {
  ParamTensor wq, bq, wk, bk, wv, bv, wo, bo;
  ParamTensor ln1_gamma, ln1_beta;
  ParamTensor ff1_w, ff1_b;
  ParamTensor ff2_w, ff2_b;
  ParamTensor ln2_gamma, ln2_beta;
};

// Every learnable tensor of the discriminator plus the batch-norm running
// statistics. A frozen instance is immutable and safe to share across
// readers; training requires exclusive write access.
struct ModelParams {
  ModelConfig config;

  ParamTensor embed_w;   // 2 x d: token (v, c) -> latent
  ParamTensor embed_b;   // 1 x d
  ParamTensor pos;       // 5 x d positional embeddings (cue rows only)
  ParamTensor cue_type;  // 5 x d cue-type embeddings
  ParamTensor cls;       // 1 x d learned classification token

  std::vector<EncoderLayerParams> layers;

  ParamTensor head1_w, head1_b;  // d x head_dim1
  ParamTensor bn1_gamma, bn1_beta;
  ParamTensor head2_w, head2_b;  // head_dim1 x head_dim2
  ParamTensor bn2_gamma, bn2_beta;
  ParamTensor out_w, out_b;  // head_dim2 x 1

  BatchNormState bn1{1};
  BatchNormState bn2{1};

  // Visits every learnable tensor in canonical order with a stable name.
  template <typename F>
  void for_each_param(F&& fn) {
    fn("embed.weight", embed_w);
    fn("embed.bias", embed_b);
    fn("pos_embed", pos);
    fn("cue_embed", cue_type);
    fn("cls_token", cls);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "enc" + std::to_string(l) + ".";
      auto& lp = layers[l];
      fn(p + "attn.wq", lp.wq);
      fn(p + "attn.bq", lp.bq);
      fn(p + "attn.wk", lp.wk);
      fn(p + "attn.bk", lp.bk);
      fn(p + "attn.wv", lp.wv);
      fn(p + "attn.bv", lp.bv);
      fn(p + "attn.wo", lp.wo);
      fn(p + "attn.bo", lp.bo);
      fn(p + "ln1.gamma", lp.ln1_gamma);
      fn(p + "ln1.beta", lp.ln1_beta);
      fn(p + "ffn.w1", lp.ff1_w);
      fn(p + "ffn.b1", lp.ff1_b);
      fn(p + "ffn.w2", lp.ff2_w);
      fn(p + "ffn.b2", lp.ff2_b);
      fn(p + "ln2.gamma", lp.ln2_gamma);
      fn(p + "ln2.beta", lp.ln2_beta);
    }
    fn("head.fc1.weight", head1_w);
    fn("head.fc1.bias", head1_b);
    fn("head.bn1.gamma", bn1_gamma);
    fn("head.bn1.beta", bn1_beta);
    fn("head.fc2.weight", head2_w);
    fn("head.fc2.bias", head2_b);
    fn("head.bn2.gamma", bn2_gamma);
    fn("head.bn2.beta", bn2_beta);
    fn("head.out.weight", out_w);
    fn("head.out.bias", out_b);
  }

  template <typename F>
  void for_each_param(F&& fn) const {
    const_cast<ModelParams*>(this)->for_each_param(
        [&fn](const std::string& name, ParamTensor& t) {
          fn(name, const_cast<const ParamTensor&>(t));
        });
  }

  void zero_grads();
};

// Per-layer, per-head 6x6 attention probability matrices.
using AttentionMaps = std::vector<std::vector<Matrix>>;

struct RiskPrediction {
  double normalized = 0.0;  // sigmoid output in (0, 1)
  double score = 0.0;       // score_scale * normalized
  RiskBand band = RiskBand::Low;
  std::optional<AttentionMaps> attention;
};

// Glorot-uniform weights, zero biases, zero positional/cue-type embeddings,
// unit batch/layer-norm gammas. Fully determined by config.seed.
ModelParams init_model(const ModelConfig& config);

// Token rows -> 6 x d input matrix (row 0 is the CLS token, which carries no
// positional or cue-type embedding).
Matrix embed_tokens(const CueTokenSet& tokens, const ModelParams& params);

// Runs the post-norm encoder stack over a 6 x d input. `attn_out`, when
// non-null, receives every attention probability matrix.
Matrix encode(const Matrix& x, const ModelParams& params, AttentionMaps* attn_out = nullptr);

// Eval-mode forward pass over many scenes at once. Returns sigmoid outputs in
// scene order. Batched and single-scene evaluation produce bit-identical
// values.
std::vector<double> predict_batch(const std::vector<CueTokenSet>& scenes,
                                  const ModelParams& params);

// Score one scene. Train mode is rejected (single-instance batch statistics
// are undefined); use loss_and_grads for training-mode passes.
RiskPrediction predict(const CueTokenSet& scene, const ModelParams& params,
                       Mode mode = Mode::Eval, bool capture_attention = false);

// Mean-squared-error loss over sigmoid outputs against normalized targets in
// [0, 1]. Accumulates gradients into every ParamTensor by reverse-mode
// differentiation. Train mode uses batch statistics in the head batch norms
// (and updates their running stats); eval mode treats running stats as
// constants, which is the mode gradient checks run in.
double loss_and_grads(const std::vector<CueTokenSet>& batch, const std::vector<double>& targets,
                      ModelParams& params, Mode mode = Mode::Train);

// Forward-only loss with no side effects; usable as the scalar function for
// finite-difference checks.
double batch_loss_eval(const std::vector<CueTokenSet>& batch, const std::vector<double>& targets,
                       const ModelParams& params);

}  // namespace dusev
