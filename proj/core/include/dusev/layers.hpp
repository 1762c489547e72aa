#pragma once

#include <string_view>
#include <vector>

#include "dusev/matrix.hpp"

namespace dusev {

enum class Mode { Train, Eval };

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

// ---------------------------------------------------------------------------
// softmax

// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& a);

// Given d(loss)/d(probs) and the forward probabilities, return d(loss)/d(logits).
Matrix softmax_rows_backward(const Matrix& dprobs, const Matrix& probs);

// ---------------------------------------------------------------------------
// layer norm (normalizes each row independently; population variance)

struct LayerNormCache {
  Matrix xhat;                   // normalized input, same shape as x
  std::vector<double> inv_std;   // one per row
};

Matrix layer_norm_forward(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                          LayerNormCache* cache);

// Returns dx; accumulates parameter gradients into dgamma/dbeta (1 x d each).
Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache, const Matrix& gamma,
                           Matrix& dgamma, Matrix& dbeta);

// ---------------------------------------------------------------------------
// batch norm (normalizes each column over the batch; population variance
// both for normalization and for the running statistics)

struct BatchNormState {
  Matrix running_mean;  // 1 x features
  Matrix running_var;   // 1 x features

  explicit BatchNormState(int features)
      : running_mean(1, features, 0.0), running_var(1, features, 1.0) {}
};

struct BatchNormCache {
  Mode mode = Mode::Eval;
  Matrix xhat;          // normalized input
  Matrix inv_std;       // 1 x features
};

// Train mode normalizes by batch statistics (batch size >= 2 required) and
// updates the running statistics in place; eval mode normalizes by the frozen
// running statistics and leaves them untouched.
Matrix batch_norm_forward(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                          BatchNormState& stats, Mode mode, double eps, double momentum,
                          BatchNormCache* cache);

Matrix batch_norm_backward(const Matrix& dy, const BatchNormCache& cache, const Matrix& gamma,
                           Matrix& dgamma, Matrix& dbeta);

// ---------------------------------------------------------------------------
// activations

double sigmoid(double x);
Matrix gelu(const Matrix& x);
Matrix gelu_backward(const Matrix& dy, const Matrix& x_pre);
Matrix relu(const Matrix& x);
// Masks dy by activation > 0; `act` is the forward ReLU output.
Matrix relu_backward(const Matrix& dy, const Matrix& act);

// ---------------------------------------------------------------------------
// parameters and optimizer

// One learnable tensor together with its gradient accumulator and Adam state.
// Gradients accumulate across backward passes until adam_step consumes and
// clears them.
struct ParamTensor {
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  long step = 0;

  ParamTensor() = default;
  ParamTensor(int rows, int cols)
      : value(rows, cols), grad(rows, cols), adam_m(rows, cols), adam_v(rows, cols) {}
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// Bias-corrected Adam update. Increments the step counter and clears the
// gradient. Throws NumericError (naming the tensor) on non-finite gradients.
void adam_step(ParamTensor& p, double lr, std::string_view name = {});

}  // namespace dusev
