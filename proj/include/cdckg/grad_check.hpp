#pragma once

#include "cdckg/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cdckg {

template <typename T>
struct ParamSlot {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  double analytic = 0.0, numeric = 0.0;
};

// Compares the gradients produced by loss_fn (which must recompute the loss
// AND repopulate every grad tensor on each call, as the loss_batch functions
// do) against central finite differences (f(x+eps)-f(x-eps))/(2*eps).
// Relative error per entry: |a-n| / max(|a|,|n|,1e-8).
template <typename T>
GradCheckReport grad_check(const std::function<T()>& loss_fn, const std::vector<ParamSlot<T>>& params,
                           T eps = T(1e-5)) {
  loss_fn();
  std::vector<Tensor<T>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(*p.grad);

  GradCheckReport report;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<T>& theta = *params[pi].value;
    for (int64_t i = 0; i < theta.numel(); ++i) {
      const T keep = theta[i];
      theta[i] = keep + eps;
      const T f_plus = loss_fn();
      theta[i] = keep - eps;
      const T f_minus = loss_fn();
      theta[i] = keep;
      const double numeric = static_cast<double>(f_plus - f_minus) / (2.0 * static_cast<double>(eps));
      const double a = static_cast<double>(analytic[pi][i]);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params[pi].name;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  // restore the gradients of the unperturbed point
  loss_fn();
  return report;
}

}  // namespace cdckg
