#include "dusev/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dusev/error.hpp"

namespace dusev {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void require_param_shape(const Matrix& p, int cols, const char* op, const char* which) {
  if (p.rows() != 1 || p.cols() != cols) {
    throw ShapeError(std::string(op) + ": " + which + " must be 1x" + std::to_string(cols) +
                     ", got " + p.shape_str());
  }
}

}  // namespace

Matrix softmax_rows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i) {
    const double* x = a.row_ptr(i);
    double* y = out.row_ptr(i);
    double mx = x[0];
    for (int j = 1; j < a.cols(); ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (int j = 0; j < a.cols(); ++j) {
      y[j] = std::exp(x[j] - mx);
      sum += y[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < a.cols(); ++j) y[j] *= inv;
  }
  return out;
}

Matrix softmax_rows_backward(const Matrix& dprobs, const Matrix& probs) {
  if (!dprobs.same_shape(probs)) {
    throw ShapeError("softmax_rows_backward: shape mismatch " + dprobs.shape_str() + " vs " +
                     probs.shape_str());
  }
  Matrix dx(probs.rows(), probs.cols());
  for (int i = 0; i < probs.rows(); ++i) {
    const double* dp = dprobs.row_ptr(i);
    const double* p = probs.row_ptr(i);
    double* out = dx.row_ptr(i);
    double dot = 0.0;
    for (int j = 0; j < probs.cols(); ++j) dot += dp[j] * p[j];
    for (int j = 0; j < probs.cols(); ++j) out[j] = p[j] * (dp[j] - dot);
  }
  return dx;
}

Matrix layer_norm_forward(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                          LayerNormCache* cache) {
  require_param_shape(gamma, x.cols(), "layer_norm", "gamma");
  require_param_shape(beta, x.cols(), "layer_norm", "beta");
  if (eps <= 0.0) throw DomainError("layer_norm: eps must be > 0");

  const int d = x.cols();
  Matrix out(x.rows(), d);
  if (cache) {
    cache->xhat = Matrix(x.rows(), d);
    cache->inv_std.assign(x.rows(), 0.0);
  }
  const double* g = gamma.row_ptr(0);
  const double* b = beta.row_ptr(0);
  for (int i = 0; i < x.rows(); ++i) {
    const double* xi = x.row_ptr(i);
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += xi[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double dv = xi[j] - mean;
      var += dv * dv;
    }
    var /= d;
    const double inv_std = 1.0 / std::sqrt(var + eps);
    double* yo = out.row_ptr(i);
    double* xh = cache ? cache->xhat.row_ptr(i) : nullptr;
    for (int j = 0; j < d; ++j) {
      const double xhat = (xi[j] - mean) * inv_std;
      if (xh) xh[j] = xhat;
      yo[j] = g[j] * xhat + b[j];
    }
    if (cache) cache->inv_std[i] = inv_std;
  }
  return out;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache, const Matrix& gamma,
                           Matrix& dgamma, Matrix& dbeta) {
  const int d = dy.cols();
  Matrix dx(dy.rows(), d);
  const double* g = gamma.row_ptr(0);
  double* dg = dgamma.row_ptr(0);
  double* db = dbeta.row_ptr(0);
  for (int i = 0; i < dy.rows(); ++i) {
    const double* dyi = dy.row_ptr(i);
    const double* xh = cache.xhat.row_ptr(i);
    double* dxi = dx.row_ptr(i);
    double m1 = 0.0;  // mean of dxhat
    double m2 = 0.0;  // mean of dxhat * xhat
    for (int j = 0; j < d; ++j) {
      const double dxhat = dyi[j] * g[j];
      m1 += dxhat;
      m2 += dxhat * xh[j];
    }
    m1 /= d;
    m2 /= d;
    const double inv_std = cache.inv_std[i];
    for (int j = 0; j < d; ++j) {
      const double dxhat = dyi[j] * g[j];
      dxi[j] = inv_std * (dxhat - m1 - xh[j] * m2);
      dg[j] += dyi[j] * xh[j];
      db[j] += dyi[j];
    }
  }
  return dx;
}

Matrix batch_norm_forward(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                          BatchNormState& stats, Mode mode, double eps, double momentum,
                          BatchNormCache* cache) {
  const int features = x.cols();
  require_param_shape(gamma, features, "batch_norm", "gamma");
  require_param_shape(beta, features, "batch_norm", "beta");
  require_param_shape(stats.running_mean, features, "batch_norm", "running_mean");
  require_param_shape(stats.running_var, features, "batch_norm", "running_var");

  const int batch = x.rows();
  if (mode == Mode::Train && batch < 2) {
    throw ValidationError("batch_norm: train mode requires batch size >= 2 (variance undefined)");
  }

  Matrix mean(1, features);
  Matrix var(1, features);
  if (mode == Mode::Train) {
    double* pm = mean.row_ptr(0);
    for (int i = 0; i < batch; ++i) {
      const double* xi = x.row_ptr(i);
      for (int j = 0; j < features; ++j) pm[j] += xi[j];
    }
    for (int j = 0; j < features; ++j) pm[j] /= batch;
    double* pv = var.row_ptr(0);
    for (int i = 0; i < batch; ++i) {
      const double* xi = x.row_ptr(i);
      for (int j = 0; j < features; ++j) {
        const double dv = xi[j] - pm[j];
        pv[j] += dv * dv;
      }
    }
    for (int j = 0; j < features; ++j) pv[j] /= batch;
    // update running stats with momentum
    double* rm = stats.running_mean.row_ptr(0);
    double* rv = stats.running_var.row_ptr(0);
    for (int j = 0; j < features; ++j) {
      rm[j] = momentum * rm[j] + (1.0 - momentum) * pm[j];
      rv[j] = momentum * rv[j] + (1.0 - momentum) * pv[j];
    }
  } else {
    mean = stats.running_mean;
    var = stats.running_var;
  }

  Matrix inv_std(1, features);
  for (int j = 0; j < features; ++j) inv_std(0, j) = 1.0 / std::sqrt(var(0, j) + eps);

  Matrix out(batch, features);
  if (cache) {
    cache->mode = mode;
    cache->xhat = Matrix(batch, features);
    cache->inv_std = inv_std;
  }
  const double* g = gamma.row_ptr(0);
  const double* b = beta.row_ptr(0);
  const double* pm = mean.row_ptr(0);
  const double* pis = inv_std.row_ptr(0);
  for (int i = 0; i < batch; ++i) {
    const double* xi = x.row_ptr(i);
    double* yo = out.row_ptr(i);
    double* xh = cache ? cache->xhat.row_ptr(i) : nullptr;
    for (int j = 0; j < features; ++j) {
      const double xhat = (xi[j] - pm[j]) * pis[j];
      if (xh) xh[j] = xhat;
      yo[j] = g[j] * xhat + b[j];
    }
  }
  return out;
}

Matrix batch_norm_backward(const Matrix& dy, const BatchNormCache& cache, const Matrix& gamma,
                           Matrix& dgamma, Matrix& dbeta) {
  const int batch = dy.rows();
  const int features = dy.cols();
  Matrix dx(batch, features);
  const double* g = gamma.row_ptr(0);
  const double* pis = cache.inv_std.row_ptr(0);
  double* dg = dgamma.row_ptr(0);
  double* db = dbeta.row_ptr(0);

  for (int i = 0; i < batch; ++i) {
    const double* dyi = dy.row_ptr(i);
    const double* xh = cache.xhat.row_ptr(i);
    for (int j = 0; j < features; ++j) {
      dg[j] += dyi[j] * xh[j];
      db[j] += dyi[j];
    }
  }

  if (cache.mode == Mode::Eval) {
    // running stats are constants, so the map is affine per feature
    for (int i = 0; i < batch; ++i) {
      const double* dyi = dy.row_ptr(i);
      double* dxi = dx.row_ptr(i);
      for (int j = 0; j < features; ++j) dxi[j] = dyi[j] * g[j] * pis[j];
    }
    return dx;
  }

  // train mode: gradient flows through the batch mean and variance
  std::vector<double> sum_dxhat(features, 0.0);
  std::vector<double> sum_dxhat_xhat(features, 0.0);
  for (int i = 0; i < batch; ++i) {
    const double* dyi = dy.row_ptr(i);
    const double* xh = cache.xhat.row_ptr(i);
    for (int j = 0; j < features; ++j) {
      const double dxhat = dyi[j] * g[j];
      sum_dxhat[j] += dxhat;
      sum_dxhat_xhat[j] += dxhat * xh[j];
    }
  }
  const double inv_b = 1.0 / batch;
  for (int i = 0; i < batch; ++i) {
    const double* dyi = dy.row_ptr(i);
    const double* xh = cache.xhat.row_ptr(i);
    double* dxi = dx.row_ptr(i);
    for (int j = 0; j < features; ++j) {
      const double dxhat = dyi[j] * g[j];
      dxi[j] = pis[j] * inv_b * (batch * dxhat - sum_dxhat[j] - xh[j] * sum_dxhat_xhat[j]);
    }
  }
  return dx;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix gelu(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  const double* px = x.data().data();
  double* po = out.data().data();
  const std::size_t n = x.data().size();
  for (std::size_t i = 0; i < n; ++i) {
    po[i] = 0.5 * px[i] * (1.0 + std::erf(px[i] * kInvSqrt2));
  }
  return out;
}

Matrix gelu_backward(const Matrix& dy, const Matrix& x_pre) {
  Matrix dx(dy.rows(), dy.cols());
  const double* pdy = dy.data().data();
  const double* px = x_pre.data().data();
  double* pdx = dx.data().data();
  const std::size_t n = dy.data().size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = px[i];
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    pdx[i] = pdy[i] * (cdf + x * pdf);
  }
  return dx;
}

Matrix relu(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  const double* px = x.data().data();
  double* po = out.data().data();
  const std::size_t n = x.data().size();
  for (std::size_t i = 0; i < n; ++i) po[i] = px[i] > 0.0 ? px[i] : 0.0;
  return out;
}

Matrix relu_backward(const Matrix& dy, const Matrix& act) {
  Matrix dx(dy.rows(), dy.cols());
  const double* pdy = dy.data().data();
  const double* pa = act.data().data();
  double* pdx = dx.data().data();
  const std::size_t n = dy.data().size();
  for (std::size_t i = 0; i < n; ++i) pdx[i] = pa[i] > 0.0 ? pdy[i] : 0.0;
  return dx;
}

void adam_step(ParamTensor& p, double lr, std::string_view name) {
  if (lr <= 0.0) throw DomainError("adam_step: learning rate must be > 0");
  if (!p.grad.all_finite()) {
    throw NumericError("adam_step: non-finite gradient in tensor '" + std::string(name) + "'");
  }
  p.step += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(p.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(p.step));
  double* v = p.value.data().data();
  double* g = p.grad.data().data();
  double* m = p.adam_m.data().data();
  double* s = p.adam_v.data().data();
  const std::size_t n = p.value.data().size();
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
    s[i] = kAdamBeta2 * s[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = s[i] / bc2;
    v[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
    g[i] = 0.0;
  }
}

}  // namespace dusev
