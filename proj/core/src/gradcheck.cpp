#include "dusev/gradcheck.hpp"

#include <cmath>

#include "dusev/error.hpp"

namespace dusev {

GradCheckResult finite_diff_check(
    const std::function<double()>& f,
    const std::vector<std::pair<std::string, ParamTensor*>>& params,
    const std::vector<Matrix>& analytic) {
  if (params.size() != analytic.size()) {
    throw ShapeError("finite_diff_check: params/analytic size mismatch");
  }
  GradCheckResult result;
  result.per_tensor.reserve(params.size());
  for (std::size_t t = 0; t < params.size(); ++t) {
    ParamTensor& tensor = *params[t].second;
    const Matrix& ga = analytic[t];
    if (!tensor.value.same_shape(ga)) {
      throw ShapeError("finite_diff_check: analytic gradient shape mismatch for tensor '" +
                       params[t].first + "'");
    }
    GradCheckEntry entry{params[t].first, 0.0};
    std::vector<double>& values = tensor.value.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double theta = values[i];
      const double h = 1e-5 * (1.0 + std::abs(theta));
      values[i] = theta + h;
      const double fp = f();
      values[i] = theta - h;
      const double fm = f();
      values[i] = theta;
      const double gn = (fp - fm) / (2.0 * h);
      const double g = ga.data()[i];
      const double rel = std::abs(g - gn) / std::max(1e-8, std::abs(g) + std::abs(gn));
      entry.max_rel_error = std::max(entry.max_rel_error, rel);
    }
    result.max_rel_error = std::max(result.max_rel_error, entry.max_rel_error);
    result.per_tensor.push_back(std::move(entry));
  }
  return result;
}

}  // namespace dusev
