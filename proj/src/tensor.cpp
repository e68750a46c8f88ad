#include "equal/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace equal {

Tensor::Tensor(std::vector<std::size_t> ext, double fill) : extents(std::move(ext)) {
  std::size_t n = 1;
  for (std::size_t e : extents) {
    if (e == 0) throw std::invalid_argument("tensor extent must be positive");
    n *= e;
  }
  data.assign(n, fill);
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor zeros_like(const Tensor& t) { return Tensor(t.extents); }

std::string shape_string(const std::vector<std::size_t>& extents) {
  std::string s = "[";
  for (std::size_t i = 0; i < extents.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(extents[i]);
  }
  return s + "]";
}

}  // namespace equal
