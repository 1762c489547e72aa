#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dusev/layers.hpp"

namespace dusev {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<GradCheckEntry> per_tensor;
};

// Central finite differences against analytic gradients. `f` must be a
// deterministic scalar function of the current parameter values; it is called
// with each entry perturbed by +/- h where h = 1e-5 * (1 + |theta|). The
// relative error per entry is |ga - gn| / max(1e-8, |ga| + |gn|); the result
// reports the max per tensor and globally. `analytic` must align with
// `params` (one gradient matrix per tensor, same shape as its value).
GradCheckResult finite_diff_check(
    const std::function<double()>& f,
    const std::vector<std::pair<std::string, ParamTensor*>>& params,
    const std::vector<Matrix>& analytic);

}  // namespace dusev
