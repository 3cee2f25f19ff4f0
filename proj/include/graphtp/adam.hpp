#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "graphtp/error.hpp"
#include "graphtp/matrix.hpp"

namespace graphtp {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments for a fixed list of parameter groups. One step counter is shared
/// by all groups.
struct AdamState {
  AdamHyper hyper;
  std::vector<DenseMatrix> m;
  std::vector<DenseMatrix> v;
  std::uint64_t t = 0;

  AdamState() = default;
  AdamState(AdamHyper h, std::span<const DenseMatrix> params) : hyper(h) {
    for (const auto& p : params) {
      m.emplace_back(p.rows(), p.cols());
      v.emplace_back(p.rows(), p.cols());
    }
  }
};

/// One bias-corrected Adam update. Returns the largest absolute change
/// applied to any parameter.
inline double adam_step(std::span<DenseMatrix> params, std::span<const DenseMatrix> grads,
                        AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw InvalidParameter("adam_step: parameter group count mismatch");
  for (std::size_t g = 0; g < params.size(); ++g) {
    if (!params[g].same_shape(grads[g]) || !params[g].same_shape(state.m[g]) ||
        !params[g].same_shape(state.v[g]))
      throw InvalidParameter("adam_step: shape mismatch in parameter group");
    if (!grads[g].all_finite()) throw NumericalFailure("adam_step: non-finite gradient");
  }

  const auto& h = state.hyper;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);

  double max_delta = 0.0;
  for (std::size_t g = 0; g < params.size(); ++g) {
    auto& p = params[g].data();
    const auto& gr = grads[g].data();
    auto& m = state.m[g].data();
    auto& v = state.v[g].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * gr[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * gr[k] * gr[k];
      const double delta = h.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + h.eps);
      p[k] -= delta;
      max_delta = std::max(max_delta, std::abs(delta));
    }
  }
  return max_delta;
}

}  // namespace graphtp
