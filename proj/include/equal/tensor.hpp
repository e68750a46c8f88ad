#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace equal {

// Dense row-major tensor of 64-bit reals. Extents are outermost-first: a
// [C,H,W] tensor stores element (c,y,x) at data[(c*H + y)*W + x].
struct Tensor {
  std::vector<std::size_t> extents;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> ext, double fill = 0.0);

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return extents.size(); }
  std::size_t extent(std::size_t i) const { return extents[i]; }
  bool same_shape(const Tensor& other) const { return extents == other.extents; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  bool all_finite() const;

  bool operator==(const Tensor& other) const = default;
};

Tensor zeros_like(const Tensor& t);

// "[2x3x3]" etc., for error messages.
std::string shape_string(const std::vector<std::size_t>& extents);

}  // namespace equal
