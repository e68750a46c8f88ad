#include "equal/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace equal {

double gradcheck_max_rel_err(const std::function<double()>& loss,
                             const std::vector<Tensor*>& params,
                             const std::vector<Tensor>& analytic,
                             double step) {
  if (params.size() != analytic.size()) {
    throw std::invalid_argument("gradcheck: params/analytic size mismatch");
  }
  double max_rel = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p];
    if (!t.same_shape(analytic[p])) {
      throw std::invalid_argument("gradcheck: analytic gradient shape mismatch");
    }
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double saved = t[i];
      t[i] = saved + step;
      const double up = loss();
      t[i] = saved - step;
      const double down = loss();
      t[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p][i];
      const double rel =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace equal
