#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "graphtp/error.hpp"
#include "graphtp/matrix.hpp"
#include "graphtp/rng.hpp"

namespace graphtp {

using ScalarFunction = std::function<double(const std::vector<DenseMatrix>&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  // Location of the worst probe.
  std::size_t group = 0;
  std::size_t index = 0;
  double numeric = 0.0;
  double analytic = 0.0;
};

/// Central-difference check of `analytic` against f on `probe_count` random
/// coordinates. Relative error is |fd - an| / max(|fd|, |an|, 1e-8).
inline GradCheckResult finite_diff_check(const ScalarFunction& f, std::vector<DenseMatrix> params,
                                         const std::vector<DenseMatrix>& analytic,
                                         std::size_t probe_count, double h, Rng& rng) {
  if (params.size() != analytic.size())
    throw InvalidParameter("finite_diff_check: group count mismatch");
  std::size_t total = 0;
  for (std::size_t g = 0; g < params.size(); ++g) {
    if (!params[g].same_shape(analytic[g]))
      throw InvalidParameter("finite_diff_check: gradient shape mismatch");
    total += params[g].size();
  }
  GradCheckResult res;
  if (total == 0) return res;

  for (std::size_t probe = 0; probe < probe_count; ++probe) {
    auto flat = static_cast<std::size_t>(rng.below(total));
    std::size_t g = 0;
    while (flat >= params[g].size()) flat -= params[g++].size();

    double& x = params[g].data()[flat];
    const double saved = x;
    x = saved + h;
    const double fp = f(params);
    x = saved - h;
    const double fm = f(params);
    x = saved;

    const double fd = (fp - fm) / (2.0 * h);
    const double an = analytic[g].data()[flat];
    const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
    if (err > res.max_rel_error || probe == 0) {
      res = {err, g, flat, fd, an};
    }
  }
  return res;
}

}  // namespace graphtp
