#pragma once

#include "cdckg/grad_check.hpp"
#include "cdckg/tensor.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace cdckg {

inline double lr_schedule(int64_t epoch, double lr0, double decay) {
  return lr0 * std::pow(decay, static_cast<double>(epoch));
}

template <typename T>
void sgd_step(const std::vector<ParamSlot<T>>& slots, double lr) {
  for (const auto& s : slots)
    for (int64_t i = 0; i < s.value->numel(); ++i)
      (*s.value)[i] -= static_cast<T>(lr) * (*s.grad)[i];
}

template <typename T>
struct AdamState {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int64_t step = 0;
  std::map<std::string, Tensor<T>> m, v;

  void ensure(const std::vector<ParamSlot<T>>& slots) {
    for (const auto& s : slots) {
      if (!m.count(s.name)) m.emplace(s.name, Tensor<T>(s.value->shape));
      if (!v.count(s.name)) v.emplace(s.name, Tensor<T>(s.value->shape));
    }
  }
};

template <typename T>
void adam_step(const std::vector<ParamSlot<T>>& slots, AdamState<T>& state, double lr) {
  state.ensure(slots);
  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (const auto& s : slots) {
    Tensor<T>& m = state.m.at(s.name);
    Tensor<T>& v = state.v.at(s.name);
    for (int64_t i = 0; i < s.value->numel(); ++i) {
      const double g = static_cast<double>((*s.grad)[i]);
      const double mi = b1 * static_cast<double>(m[i]) + (1.0 - b1) * g;
      const double vi = b2 * static_cast<double>(v[i]) + (1.0 - b2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      (*s.value)[i] -= static_cast<T>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + state.eps));
    }
  }
}

// Projects each row of a table onto the unit l2 ball: rows with norm > 1 are
// rescaled to norm exactly 1, shorter rows are untouched.
template <typename T>
void project_rows_to_unit_ball(Tensor<T>& table) {
  const int64_t rows = table.dim(0), cols = table.dim(1);
  for (int64_t i = 0; i < rows; ++i) {
    T* row = table.data.data() + i * cols;
    double sq = 0;
    for (int64_t j = 0; j < cols; ++j) sq += static_cast<double>(row[j]) * static_cast<double>(row[j]);
    if (sq <= 1.0) continue;
    const T inv = static_cast<T>(1.0 / std::sqrt(sq));
    for (int64_t j = 0; j < cols; ++j) row[j] *= inv;
  }
}

}  // namespace cdckg
