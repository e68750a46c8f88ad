#pragma once

#include <cstdint>
#include <vector>

namespace equal {

// Sentinel class value for pixels excluded from supervised losses.
// Valid class ids live in {0 .. kIgnoreLabel-1}.
inline constexpr std::int32_t kIgnoreLabel = 255;

// Dense H x W map of integer class ids (row-major).
struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::int32_t> values;

  LabelMap() = default;
  LabelMap(std::size_t h, std::size_t w, std::int32_t fill = 0)
      : height(h), width(w), values(h * w, fill) {}

  std::int32_t& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  std::int32_t at(std::size_t y, std::size_t x) const { return values[y * width + x]; }

  bool operator==(const LabelMap& other) const = default;
};

}  // namespace equal
