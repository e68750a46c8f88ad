#include "equal/transforms.hpp"

#include <cstdlib>
#include <stdexcept>

namespace equal {

namespace {

std::size_t wrap(long v, std::size_t n) {
  long m = v % static_cast<long>(n);
  if (m < 0) m += static_cast<long>(n);
  return static_cast<std::size_t>(m);
}

// Source coordinates for destination pixel (y, x). `inverse` swaps the
// direction of rot90 and translation; flips and rot180 are involutions.
inline void source_coords(const TransformKind& kind, bool inverse, std::size_t h,
                          std::size_t w, std::size_t y, std::size_t x,
                          std::size_t& sy, std::size_t& sx) {
  switch (kind.op) {
    case TransformOp::kHFlip:
      sy = y;
      sx = w - 1 - x;
      break;
    case TransformOp::kVFlip:
      sy = h - 1 - y;
      sx = x;
      break;
    case TransformOp::kRot180:
      sy = h - 1 - y;
      sx = w - 1 - x;
      break;
    case TransformOp::kRot90:
      // forward: quarter turn counter-clockwise (out[y][x] = in[x][n-1-y])
      if (!inverse) {
        sy = x;
        sx = w - 1 - y;
      } else {
        sy = h - 1 - x;
        sx = y;
      }
      break;
    case TransformOp::kTranslate: {
      const int dx = inverse ? -kind.dx : kind.dx;
      const int dy = inverse ? -kind.dy : kind.dy;
      sy = wrap(static_cast<long>(y) - dy, h);
      sx = wrap(static_cast<long>(x) - dx, w);
      break;
    }
  }
}

template <typename T>
void permute(const TransformKind& kind, bool inverse, std::size_t channels,
             std::size_t h, std::size_t w, const T* src, T* dst) {
  if (kind.op == TransformOp::kRot90 && h != w) {
    throw std::invalid_argument("rot90 requires square spatial extents, got " +
                                std::to_string(h) + "x" + std::to_string(w));
  }
  for (std::size_t c = 0; c < channels; ++c) {
    const T* in_plane = src + c * h * w;
    T* out_plane = dst + c * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        std::size_t sy = 0, sx = 0;
        source_coords(kind, inverse, h, w, y, x, sy, sx);
        out_plane[y * w + x] = in_plane[sy * w + sx];
      }
    }
  }
}

Tensor transform_tensor(const TransformKind& kind, const Tensor& t, bool inverse) {
  if (t.rank() < 2) {
    throw std::invalid_argument("transform needs at least 2 spatial extents, got " +
                                shape_string(t.extents));
  }
  const std::size_t h = t.extent(t.rank() - 2);
  const std::size_t w = t.extent(t.rank() - 1);
  std::size_t channels = 1;
  for (std::size_t i = 0; i + 2 < t.rank(); ++i) channels *= t.extent(i);

  Tensor out = zeros_like(t);
  permute(kind, inverse, channels, h, w, t.data.data(), out.data.data());
  return out;
}

LabelMap transform_labels(const TransformKind& kind, const LabelMap& m, bool inverse) {
  LabelMap out(m.height, m.width);
  permute(kind, inverse, 1, m.height, m.width, m.values.data(), out.values.data());
  return out;
}

}  // namespace

TransformKind TransformKind::parse(const std::string& text) {
  if (text == "hflip") return hflip();
  if (text == "vflip") return vflip();
  if (text == "rot90") return rot90();
  if (text == "rot180") return rot180();
  if (text.rfind("translate:", 0) == 0) {
    const std::string rest = text.substr(10);
    const std::size_t comma = rest.find(',');
    if (comma != std::string::npos) {
      try {
        const int dx = std::stoi(rest.substr(0, comma));
        const int dy = std::stoi(rest.substr(comma + 1));
        return translate(dx, dy);
      } catch (const std::exception&) {
        // falls through to the error below
      }
    }
  }
  throw std::invalid_argument(
      "unknown transform '" + text +
      "' (expected hflip|vflip|rot90|rot180|translate:dx,dy)");
}

std::string TransformKind::name() const {
  switch (op) {
    case TransformOp::kHFlip: return "hflip";
    case TransformOp::kVFlip: return "vflip";
    case TransformOp::kRot90: return "rot90";
    case TransformOp::kRot180: return "rot180";
    case TransformOp::kTranslate:
      return "translate:" + std::to_string(dx) + "," + std::to_string(dy);
  }
  return "?";
}

Tensor apply_transform(const TransformKind& kind, const Tensor& t) {
  return transform_tensor(kind, t, false);
}

Tensor invert_transform(const TransformKind& kind, const Tensor& t) {
  return transform_tensor(kind, t, true);
}

LabelMap apply_transform(const TransformKind& kind, const LabelMap& labels) {
  return transform_labels(kind, labels, false);
}

LabelMap invert_transform(const TransformKind& kind, const LabelMap& labels) {
  return transform_labels(kind, labels, true);
}

}  // namespace equal
