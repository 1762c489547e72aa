#include "dusev/model.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "dusev/error.hpp"
#include "dusev/rng.hpp"

namespace dusev {

namespace {

constexpr int kSeqLen = kNumCues + 1;  // CLS + five cue tokens

struct LayerCache {
  Matrix x_in;
  Matrix q, k, v;
  Matrix probs;        // (B * heads * 6) x 6 attention probabilities
  Matrix attn_concat;  // heads concatenated, before the output projection
  LayerNormCache ln1;
  Matrix a;  // LN1 output, input to the FFN
  Matrix ffn_pre;
  Matrix ffn_act;
  LayerNormCache ln2;
};

struct ForwardCache {
  Matrix x0;
  std::vector<LayerCache> layers;
  Matrix z;  // B x d CLS rows
  BatchNormCache bn1c, bn2c;
  Matrix r1, r2;
  Matrix p;  // B x 1 sigmoid outputs
};

void glorot_init(Matrix& m, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& x : m.data()) x = rng.uniform(-bound, bound);
}

// Scaled dot-product attention for one layer over B stacked 6-row blocks.
void attention_forward(const Matrix& q, const Matrix& k, const Matrix& v, int batch, int heads,
                       Matrix& probs, Matrix& concat) {
  const int d = q.cols();
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int b = 0; b < batch; ++b) {
    const int base = b * kSeqLen;
    for (int h = 0; h < heads; ++h) {
      const int c0 = h * dh;
      double scores[kSeqLen][kSeqLen];
      for (int i = 0; i < kSeqLen; ++i) {
        const double* qi = q.row_ptr(base + i) + c0;
        for (int j = 0; j < kSeqLen; ++j) {
          const double* kj = k.row_ptr(base + j) + c0;
          double acc = 0.0;
          for (int t = 0; t < dh; ++t) acc += qi[t] * kj[t];
          scores[i][j] = acc * scale;
        }
      }
      const int prow = (b * heads + h) * kSeqLen;
      for (int i = 0; i < kSeqLen; ++i) {
        double mx = scores[i][0];
        for (int j = 1; j < kSeqLen; ++j) mx = std::max(mx, scores[i][j]);
        double sum = 0.0;
        double* pr = probs.row_ptr(prow + i);
        for (int j = 0; j < kSeqLen; ++j) {
          pr[j] = std::exp(scores[i][j] - mx);
          sum += pr[j];
        }
        const double inv = 1.0 / sum;
        for (int j = 0; j < kSeqLen; ++j) pr[j] *= inv;
        double* out = concat.row_ptr(base + i) + c0;
        for (int j = 0; j < kSeqLen; ++j) {
          const double w = pr[j];
          const double* vj = v.row_ptr(base + j) + c0;
          for (int t = 0; t < dh; ++t) out[t] += w * vj[t];
        }
      }
    }
  }
}

void attention_backward(const Matrix& dconcat, const Matrix& probs, const Matrix& q,
                        const Matrix& k, const Matrix& v, int batch, int heads, Matrix& dq,
                        Matrix& dk, Matrix& dv) {
  const int d = q.cols();
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int b = 0; b < batch; ++b) {
    const int base = b * kSeqLen;
    for (int h = 0; h < heads; ++h) {
      const int c0 = h * dh;
      const int prow = (b * heads + h) * kSeqLen;
      double dprob[kSeqLen][kSeqLen];
      for (int i = 0; i < kSeqLen; ++i) {
        const double* doi = dconcat.row_ptr(base + i) + c0;
        for (int j = 0; j < kSeqLen; ++j) {
          const double* vj = v.row_ptr(base + j) + c0;
          double acc = 0.0;
          for (int t = 0; t < dh; ++t) acc += doi[t] * vj[t];
          dprob[i][j] = acc;
        }
      }
      // dV += P^T * dO
      for (int j = 0; j < kSeqLen; ++j) {
        double* dvj = dv.row_ptr(base + j) + c0;
        for (int i = 0; i < kSeqLen; ++i) {
          const double w = probs(prow + i, j);
          const double* doi = dconcat.row_ptr(base + i) + c0;
          for (int t = 0; t < dh; ++t) dvj[t] += w * doi[t];
        }
      }
      // through the softmax, then into Q and K
      for (int i = 0; i < kSeqLen; ++i) {
        const double* pr = probs.row_ptr(prow + i);
        double dot = 0.0;
        for (int j = 0; j < kSeqLen; ++j) dot += dprob[i][j] * pr[j];
        double dscore[kSeqLen];
        for (int j = 0; j < kSeqLen; ++j) dscore[j] = pr[j] * (dprob[i][j] - dot) * scale;
        double* dqi = dq.row_ptr(base + i) + c0;
        const double* qi = q.row_ptr(base + i) + c0;
        for (int j = 0; j < kSeqLen; ++j) {
          const double s = dscore[j];
          const double* kj = k.row_ptr(base + j) + c0;
          double* dkj = dk.row_ptr(base + j) + c0;
          for (int t = 0; t < dh; ++t) {
            dqi[t] += s * kj[t];
            dkj[t] += s * qi[t];
          }
        }
      }
    }
  }
}

Matrix linear_forward(const Matrix& x, const ParamTensor& w, const ParamTensor& b) {
  Matrix y = matmul(x, w.value);
  add_row_broadcast(y, b.value);
  return y;
}

// Shared forward pass. In eval mode `params` is never written; train mode
// updates the head batch-norm running statistics.
Matrix forward_impl(const std::vector<CueTokenSet>& scenes, ModelParams& params, Mode mode,
                    ForwardCache* cache, AttentionMaps* attn_out) {
  const ModelConfig& cfg = params.config;
  const int batch = static_cast<int>(scenes.size());
  if (batch == 0) throw ValidationError("forward: empty batch");
  const int d = cfg.d_model;
  const int n = batch * kSeqLen;

  Matrix x(n, d);
  for (int b = 0; b < batch; ++b) {
    const int base = b * kSeqLen;
    double* row0 = x.row_ptr(base);
    const double* cls = params.cls.value.row_ptr(0);
    for (int j = 0; j < d; ++j) row0[j] = cls[j];
    for (int i = 0; i < kNumCues; ++i) {
      const CueToken& tok = scenes[b].tokens[i];
      double* row = x.row_ptr(base + 1 + i);
      const double* we_v = params.embed_w.value.row_ptr(0);
      const double* we_c = params.embed_w.value.row_ptr(1);
      const double* be = params.embed_b.value.row_ptr(0);
      const double* pe = params.pos.value.row_ptr(i);
      const double* ce = params.cue_type.value.row_ptr(i);
      for (int j = 0; j < d; ++j) {
        row[j] = tok.v * we_v[j] + tok.c * we_c[j] + be[j] + pe[j] + ce[j];
      }
    }
  }
  if (cache) {
    cache->x0 = x;
    cache->layers.resize(cfg.n_layers);
  }
  if (attn_out) {
    attn_out->assign(cfg.n_layers, std::vector<Matrix>(cfg.n_heads, Matrix(kSeqLen, kSeqLen)));
  }

  for (int l = 0; l < cfg.n_layers; ++l) {
    const EncoderLayerParams& lp = params.layers[l];
    LayerCache* lc = cache ? &cache->layers[l] : nullptr;
    if (lc) lc->x_in = x;

    Matrix q = linear_forward(x, lp.wq, lp.bq);
    Matrix k = linear_forward(x, lp.wk, lp.bk);
    Matrix v = linear_forward(x, lp.wv, lp.bv);
    Matrix probs(batch * cfg.n_heads * kSeqLen, kSeqLen);
    Matrix concat(n, d);
    attention_forward(q, k, v, batch, cfg.n_heads, probs, concat);
    if (attn_out) {
      for (int h = 0; h < cfg.n_heads; ++h) {
        Matrix& m = (*attn_out)[l][h];
        for (int i = 0; i < kSeqLen; ++i) {
          for (int j = 0; j < kSeqLen; ++j) m(i, j) = probs(h * kSeqLen + i, j);
        }
      }
    }

    Matrix mhsa = linear_forward(concat, lp.wo, lp.bo);
    add_inplace(mhsa, x);  // residual: X + MHSA(X)
    LayerNormCache ln1_local;
    Matrix a = layer_norm_forward(mhsa, lp.ln1_gamma.value, lp.ln1_beta.value, kLayerNormEps,
                                  lc ? &lc->ln1 : &ln1_local);

    Matrix ffn_pre = linear_forward(a, lp.ff1_w, lp.ff1_b);
    Matrix ffn_act = gelu(ffn_pre);
    Matrix ffn_out = linear_forward(ffn_act, lp.ff2_w, lp.ff2_b);
    add_inplace(ffn_out, a);  // residual: A + FFN(A)
    LayerNormCache ln2_local;
    Matrix x_next = layer_norm_forward(ffn_out, lp.ln2_gamma.value, lp.ln2_beta.value,
                                       kLayerNormEps, lc ? &lc->ln2 : &ln2_local);

    if (lc) {
      lc->q = std::move(q);
      lc->k = std::move(k);
      lc->v = std::move(v);
      lc->probs = std::move(probs);
      lc->attn_concat = std::move(concat);
      lc->a = a;
      lc->ffn_pre = std::move(ffn_pre);
      lc->ffn_act = std::move(ffn_act);
    }
    x = std::move(x_next);
  }

  Matrix z(batch, d);
  for (int b = 0; b < batch; ++b) {
    const double* src = x.row_ptr(b * kSeqLen);
    double* dst = z.row_ptr(b);
    for (int j = 0; j < d; ++j) dst[j] = src[j];
  }

  BatchNormCache bn1_local, bn2_local;
  Matrix h1 = linear_forward(z, params.head1_w, params.head1_b);
  Matrix n1 = batch_norm_forward(h1, params.bn1_gamma.value, params.bn1_beta.value, params.bn1,
                                 mode, kBatchNormEps, kBatchNormMomentum,
                                 cache ? &cache->bn1c : &bn1_local);
  Matrix r1 = relu(n1);
  Matrix h2 = linear_forward(r1, params.head2_w, params.head2_b);
  Matrix n2 = batch_norm_forward(h2, params.bn2_gamma.value, params.bn2_beta.value, params.bn2,
                                 mode, kBatchNormEps, kBatchNormMomentum,
                                 cache ? &cache->bn2c : &bn2_local);
  Matrix r2 = relu(n2);
  Matrix out = linear_forward(r2, params.out_w, params.out_b);

  Matrix p(batch, 1);
  for (int b = 0; b < batch; ++b) p(b, 0) = sigmoid(out(b, 0));

  if (cache) {
    cache->z = std::move(z);
    cache->r1 = std::move(r1);
    cache->r2 = std::move(r2);
    cache->p = p;
  }
  return p;
}

void backward_impl(const Matrix& dp, const std::vector<CueTokenSet>& scenes, ModelParams& params,
                   ForwardCache& cache) {
  const ModelConfig& cfg = params.config;
  const int batch = static_cast<int>(scenes.size());
  const int d = cfg.d_model;
  const int n = batch * kSeqLen;

  // sigmoid
  Matrix dout(batch, 1);
  for (int b = 0; b < batch; ++b) {
    const double p = cache.p(b, 0);
    dout(b, 0) = dp(b, 0) * p * (1.0 - p);
  }

  // head
  add_inplace(params.out_w.grad, matmul_at(cache.r2, dout));
  add_inplace(params.out_b.grad, column_sums(dout));
  Matrix dr2 = matmul_bt(dout, params.out_w.value);
  Matrix dn2 = relu_backward(dr2, cache.r2);
  Matrix dh2 = batch_norm_backward(dn2, cache.bn2c, params.bn2_gamma.value, params.bn2_gamma.grad,
                                   params.bn2_beta.grad);
  add_inplace(params.head2_w.grad, matmul_at(cache.r1, dh2));
  add_inplace(params.head2_b.grad, column_sums(dh2));
  Matrix dr1 = matmul_bt(dh2, params.head2_w.value);
  Matrix dn1 = relu_backward(dr1, cache.r1);
  Matrix dh1 = batch_norm_backward(dn1, cache.bn1c, params.bn1_gamma.value, params.bn1_gamma.grad,
                                   params.bn1_beta.grad);
  add_inplace(params.head1_w.grad, matmul_at(cache.z, dh1));
  add_inplace(params.head1_b.grad, column_sums(dh1));
  Matrix dz = matmul_bt(dh1, params.head1_w.value);

  Matrix dx(n, d);
  for (int b = 0; b < batch; ++b) {
    const double* src = dz.row_ptr(b);
    double* dst = dx.row_ptr(b * kSeqLen);
    for (int j = 0; j < d; ++j) dst[j] = src[j];
  }

  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    EncoderLayerParams& lp = params.layers[l];
    LayerCache& lc = cache.layers[l];

    Matrix dr2res =
        layer_norm_backward(dx, lc.ln2, lp.ln2_gamma.value, lp.ln2_gamma.grad, lp.ln2_beta.grad);
    // residual split: R2 = A + FFN(A)
    Matrix da = dr2res;
    add_inplace(lp.ff2_w.grad, matmul_at(lc.ffn_act, dr2res));
    add_inplace(lp.ff2_b.grad, column_sums(dr2res));
    Matrix dact = matmul_bt(dr2res, lp.ff2_w.value);
    Matrix dpre = gelu_backward(dact, lc.ffn_pre);
    add_inplace(lp.ff1_w.grad, matmul_at(lc.a, dpre));
    add_inplace(lp.ff1_b.grad, column_sums(dpre));
    add_inplace(da, matmul_bt(dpre, lp.ff1_w.value));

    Matrix dr1res =
        layer_norm_backward(da, lc.ln1, lp.ln1_gamma.value, lp.ln1_gamma.grad, lp.ln1_beta.grad);
    // residual split: R1 = X + MHSA(X)
    Matrix dx_in = dr1res;
    add_inplace(lp.wo.grad, matmul_at(lc.attn_concat, dr1res));
    add_inplace(lp.bo.grad, column_sums(dr1res));
    Matrix dconcat = matmul_bt(dr1res, lp.wo.value);

    Matrix dq(n, d), dk(n, d), dv(n, d);
    attention_backward(dconcat, lc.probs, lc.q, lc.k, lc.v, batch, cfg.n_heads, dq, dk, dv);

    add_inplace(lp.wq.grad, matmul_at(lc.x_in, dq));
    add_inplace(lp.bq.grad, column_sums(dq));
    add_inplace(dx_in, matmul_bt(dq, lp.wq.value));
    add_inplace(lp.wk.grad, matmul_at(lc.x_in, dk));
    add_inplace(lp.bk.grad, column_sums(dk));
    add_inplace(dx_in, matmul_bt(dk, lp.wk.value));
    add_inplace(lp.wv.grad, matmul_at(lc.x_in, dv));
    add_inplace(lp.bv.grad, column_sums(dv));
    add_inplace(dx_in, matmul_bt(dv, lp.wv.value));

    dx = std::move(dx_in);
  }

  // embedding
  for (int b = 0; b < batch; ++b) {
    const int base = b * kSeqLen;
    {
      const double* drow = dx.row_ptr(base);
      double* dcls = params.cls.grad.row_ptr(0);
      for (int j = 0; j < d; ++j) dcls[j] += drow[j];
    }
    for (int i = 0; i < kNumCues; ++i) {
      const CueToken& tok = scenes[b].tokens[i];
      const double* drow = dx.row_ptr(base + 1 + i);
      double* dpos = params.pos.grad.row_ptr(i);
      double* dcue = params.cue_type.grad.row_ptr(i);
      double* dbe = params.embed_b.grad.row_ptr(0);
      double* dwv = params.embed_w.grad.row_ptr(0);
      double* dwc = params.embed_w.grad.row_ptr(1);
      for (int j = 0; j < d; ++j) {
        dpos[j] += drow[j];
        dcue[j] += drow[j];
        dbe[j] += drow[j];
        dwv[j] += tok.v * drow[j];
        dwc[j] += tok.c * drow[j];
      }
    }
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (d_model < 1) throw ConfigError("ModelConfig: d_model must be >= 1");
  if (n_layers < 1) throw ConfigError("ModelConfig: n_layers must be >= 1");
  if (n_heads < 1) throw ConfigError("ModelConfig: n_heads must be >= 1");
  if (d_model % n_heads != 0) {
    throw ConfigError("ModelConfig: d_model (" + std::to_string(d_model) +
                      ") must be divisible by n_heads (" + std::to_string(n_heads) + ")");
  }
  if (ffn_dim < 1) throw ConfigError("ModelConfig: ffn_dim must be >= 1");
  if (head_dim1 < 1 || head_dim2 < 1) throw ConfigError("ModelConfig: head widths must be >= 1");
  if (!(score_scale > 0.0)) throw ConfigError("ModelConfig: score_scale must be > 0");
}

void ModelParams::zero_grads() {
  for_each_param([](const std::string&, ParamTensor& t) { t.grad.zero(); });
}

ModelParams init_model(const ModelConfig& config) {
  config.validate();
  const int d = config.d_model;

  ModelParams params;
  params.config = config;
  params.embed_w = ParamTensor(2, d);
  params.embed_b = ParamTensor(1, d);
  params.pos = ParamTensor(kNumCues, d);
  params.cue_type = ParamTensor(kNumCues, d);
  params.cls = ParamTensor(1, d);
  params.layers.resize(config.n_layers);
  for (auto& lp : params.layers) {
    lp.wq = ParamTensor(d, d);
    lp.bq = ParamTensor(1, d);
    lp.wk = ParamTensor(d, d);
    lp.bk = ParamTensor(1, d);
    lp.wv = ParamTensor(d, d);
    lp.bv = ParamTensor(1, d);
    lp.wo = ParamTensor(d, d);
    lp.bo = ParamTensor(1, d);
    lp.ln1_gamma = ParamTensor(1, d);
    lp.ln1_gamma.value.fill(1.0);
    lp.ln1_beta = ParamTensor(1, d);
    lp.ff1_w = ParamTensor(d, config.ffn_dim);
    lp.ff1_b = ParamTensor(1, config.ffn_dim);
    lp.ff2_w = ParamTensor(config.ffn_dim, d);
    lp.ff2_b = ParamTensor(1, d);
    lp.ln2_gamma = ParamTensor(1, d);
    lp.ln2_gamma.value.fill(1.0);
    lp.ln2_beta = ParamTensor(1, d);
  }
  params.head1_w = ParamTensor(d, config.head_dim1);
  params.head1_b = ParamTensor(1, config.head_dim1);
  params.bn1_gamma = ParamTensor(1, config.head_dim1);
  params.bn1_gamma.value.fill(1.0);
  params.bn1_beta = ParamTensor(1, config.head_dim1);
  params.head2_w = ParamTensor(config.head_dim1, config.head_dim2);
  params.head2_b = ParamTensor(1, config.head_dim2);
  params.bn2_gamma = ParamTensor(1, config.head_dim2);
  params.bn2_gamma.value.fill(1.0);
  params.bn2_beta = ParamTensor(1, config.head_dim2);
  params.out_w = ParamTensor(config.head_dim2, 1);
  params.out_b = ParamTensor(1, 1);
  params.bn1 = BatchNormState(config.head_dim1);
  params.bn2 = BatchNormState(config.head_dim2);

  Rng rng(config.seed);
  glorot_init(params.embed_w.value, 2, d, rng);
  glorot_init(params.cls.value, 1, d, rng);
  for (auto& lp : params.layers) {
    glorot_init(lp.wq.value, d, d, rng);
    glorot_init(lp.wk.value, d, d, rng);
    glorot_init(lp.wv.value, d, d, rng);
    glorot_init(lp.wo.value, d, d, rng);
    glorot_init(lp.ff1_w.value, d, config.ffn_dim, rng);
    glorot_init(lp.ff2_w.value, config.ffn_dim, d, rng);
  }
  glorot_init(params.head1_w.value, d, config.head_dim1, rng);
  glorot_init(params.head2_w.value, config.head_dim1, config.head_dim2, rng);
  glorot_init(params.out_w.value, config.head_dim2, 1, rng);
  return params;
}

Matrix embed_tokens(const CueTokenSet& tokens, const ModelParams& params) {
  const int d = params.config.d_model;
  Matrix x(kSeqLen, d);
  const double* cls = params.cls.value.row_ptr(0);
  for (int j = 0; j < d; ++j) x(0, j) = cls[j];
  for (int i = 0; i < kNumCues; ++i) {
    const CueToken& tok = tokens.tokens[i];
    double* row = x.row_ptr(1 + i);
    const double* we_v = params.embed_w.value.row_ptr(0);
    const double* we_c = params.embed_w.value.row_ptr(1);
    const double* be = params.embed_b.value.row_ptr(0);
    const double* pe = params.pos.value.row_ptr(i);
    const double* ce = params.cue_type.value.row_ptr(i);
    for (int j = 0; j < d; ++j) {
      row[j] = tok.v * we_v[j] + tok.c * we_c[j] + be[j] + pe[j] + ce[j];
    }
  }
  return x;
}

Matrix encode(const Matrix& x, const ModelParams& params, AttentionMaps* attn_out) {
  if (x.rows() != kSeqLen || x.cols() != params.config.d_model) {
    throw ShapeError("encode: expected " + std::to_string(kSeqLen) + "x" +
                     std::to_string(params.config.d_model) + " input, got " + x.shape_str());
  }
  if (!x.all_finite()) throw ValidationError("encode: non-finite input");

  const ModelConfig& cfg = params.config;
  if (attn_out) {
    attn_out->assign(cfg.n_layers, std::vector<Matrix>(cfg.n_heads, Matrix(kSeqLen, kSeqLen)));
  }
  Matrix cur = x;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const EncoderLayerParams& lp = params.layers[l];
    Matrix q = linear_forward(cur, lp.wq, lp.bq);
    Matrix k = linear_forward(cur, lp.wk, lp.bk);
    Matrix v = linear_forward(cur, lp.wv, lp.bv);
    Matrix probs(cfg.n_heads * kSeqLen, kSeqLen);
    Matrix concat(kSeqLen, cfg.d_model);
    attention_forward(q, k, v, 1, cfg.n_heads, probs, concat);
    if (attn_out) {
      for (int h = 0; h < cfg.n_heads; ++h) {
        Matrix& m = (*attn_out)[l][h];
        for (int i = 0; i < kSeqLen; ++i) {
          for (int j = 0; j < kSeqLen; ++j) m(i, j) = probs(h * kSeqLen + i, j);
        }
      }
    }
    Matrix mhsa = linear_forward(concat, lp.wo, lp.bo);
    add_inplace(mhsa, cur);
    Matrix a =
        layer_norm_forward(mhsa, lp.ln1_gamma.value, lp.ln1_beta.value, kLayerNormEps, nullptr);
    Matrix ffn_out = linear_forward(gelu(linear_forward(a, lp.ff1_w, lp.ff1_b)), lp.ff2_w, lp.ff2_b);
    add_inplace(ffn_out, a);
    cur = layer_norm_forward(ffn_out, lp.ln2_gamma.value, lp.ln2_beta.value, kLayerNormEps, nullptr);
  }
  return cur;
}

std::vector<double> predict_batch(const std::vector<CueTokenSet>& scenes,
                                  const ModelParams& params) {
  // Eval mode performs no writes to params, so the cast is safe.
  auto& mutable_params = const_cast<ModelParams&>(params);
  Matrix p = forward_impl(scenes, mutable_params, Mode::Eval, nullptr, nullptr);
  std::vector<double> out(scenes.size());
  for (std::size_t b = 0; b < scenes.size(); ++b) out[b] = p(static_cast<int>(b), 0);
  return out;
}

RiskPrediction predict(const CueTokenSet& scene, const ModelParams& params, Mode mode,
                       bool capture_attention) {
  if (mode == Mode::Train) {
    throw ValidationError(
        "predict: train mode is undefined for a single instance (batch statistics); use eval "
        "mode");
  }
  auto& mutable_params = const_cast<ModelParams&>(params);
  AttentionMaps attn;
  const std::vector<CueTokenSet> batch{scene};
  Matrix p = forward_impl(batch, mutable_params, Mode::Eval, nullptr,
                          capture_attention ? &attn : nullptr);
  RiskPrediction pred;
  pred.normalized = p(0, 0);
  pred.score = params.config.score_scale * pred.normalized;
  pred.band = quantize(pred.score);
  if (capture_attention) pred.attention = std::move(attn);
  return pred;
}

double loss_and_grads(const std::vector<CueTokenSet>& batch, const std::vector<double>& targets,
                      ModelParams& params, Mode mode) {
  if (batch.empty()) throw ValidationError("loss_and_grads: empty batch");
  if (batch.size() != targets.size()) {
    throw ShapeError("loss_and_grads: batch size " + std::to_string(batch.size()) +
                     " does not match target count " + std::to_string(targets.size()));
  }
  for (double t : targets) {
    if (!std::isfinite(t) || t < 0.0 || t > 1.0) {
      throw ValidationError("loss_and_grads: targets must be normalized to [0,1]");
    }
  }

  ForwardCache cache;
  Matrix p = forward_impl(batch, params, mode, &cache, nullptr);

  const int n = static_cast<int>(batch.size());
  double loss = 0.0;
  Matrix dp(n, 1);
  for (int b = 0; b < n; ++b) {
    const double err = p(b, 0) - targets[b];
    loss += err * err;
    dp(b, 0) = 2.0 * err / n;
  }
  loss /= n;
  if (!std::isfinite(loss)) {
    throw NumericError("loss_and_grads: non-finite loss over batch of " + std::to_string(n) +
                       " scenes (first output " + std::to_string(p(0, 0)) + ")");
  }

  backward_impl(dp, batch, params, cache);
  return loss;
}

double batch_loss_eval(const std::vector<CueTokenSet>& batch, const std::vector<double>& targets,
                       const ModelParams& params) {
  auto& mutable_params = const_cast<ModelParams&>(params);
  Matrix p = forward_impl(batch, mutable_params, Mode::Eval, nullptr, nullptr);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double err = p(static_cast<int>(b), 0) - targets[b];
    loss += err * err;
  }
  return loss / static_cast<double>(batch.size());
}

}  // namespace dusev
