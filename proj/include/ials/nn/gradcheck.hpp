#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "ials/nn/tensor.hpp"

namespace ials::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  long checked = 0;
};

/// Compares analytic gradients against central differences.
///
/// `loss` must be a pure function of the parameter values. `analytic` must
/// zero and then fill every parameter's grad for the current values.
inline GradCheckResult gradient_check(const ParameterList& params, const std::function<double()>& loss,
                                      const std::function<void()>& analytic, double h = 1e-5) {
  analytic();
  GradCheckResult res;
  for (auto* p : params) {
    const Matrix g = p->grad;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + h;
      const double lp = loss();
      w = saved - h;
      const double lm = loss();
      w = saved;
      const double num = (lp - lm) / (2.0 * h);
      const double ana = g.data()[i];
      const double denom = std::max({std::abs(ana), std::abs(num), 1e-6});
      const double rel = std::abs(ana - num) / denom;
      ++res.checked;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_param = p->name;
        res.worst_index = i;
      }
    }
  }
  return res;
}

}  // namespace ials::nn
