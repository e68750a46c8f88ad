#pragma once

#include <functional>
#include <string>
#include <vector>

#include "equal/tensor.hpp"

namespace equal {

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-4;

struct GradCheckReport {
  std::string name;
  double max_rel_err = 0.0;
  bool pass() const { return max_rel_err < kGradCheckTolerance; }
};

// Central-difference check of `analytic` against the scalar `loss`, which
// must re-read the current contents of `params` on every call. Perturbs each
// parameter element in place and restores it. Returns the maximum relative
// error (|a - n|) / max(1, |a|, |n|) over all elements.
double gradcheck_max_rel_err(const std::function<double()>& loss,
                             const std::vector<Tensor*>& params,
                             const std::vector<Tensor>& analytic,
                             double step = kGradCheckStep);

// The full oracle suite: every differentiable op plus the composed
// segmentation model under the supervised and self-consistency losses,
// repeated over `seeds` seeded instances. Used by tests and the CLI.
std::vector<GradCheckReport> gradcheck_suite(std::size_t seeds);

}  // namespace equal
