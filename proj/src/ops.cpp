#include "equal/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace equal {

namespace {

void require_chw(const Tensor& t, const char* what) {
  if (t.rank() != 3) {
    throw std::invalid_argument(std::string(what) + " must be rank 3, got " +
                                shape_string(t.extents));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": extent mismatch " +
                                shape_string(a.extents) + " vs " +
                                shape_string(b.extents));
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  require_chw(input, "conv2d input");
  if (kernels.rank() != 4 || kernels.extent(2) != 3 || kernels.extent(3) != 3) {
    throw std::invalid_argument("conv2d kernels must be [Cout,Cin,3,3], got " +
                                shape_string(kernels.extents));
  }
  const std::size_t cin = input.extent(0);
  const std::size_t h = input.extent(1);
  const std::size_t w = input.extent(2);
  const std::size_t cout = kernels.extent(0);
  if (kernels.extent(1) != cin) {
    throw std::invalid_argument("conv2d: input channels " + std::to_string(cin) +
                                " do not match kernel Cin " +
                                std::to_string(kernels.extent(1)));
  }
  if (bias.rank() != 1 || bias.extent(0) != cout) {
    throw std::invalid_argument("conv2d bias must be [Cout], got " +
                                shape_string(bias.extents));
  }

  Tensor out({cout, h, w});
  for (std::size_t o = 0; o < cout; ++o) {
    double* out_plane = out.data.data() + o * h * w;
    std::fill(out_plane, out_plane + h * w, bias[o]);
    for (std::size_t c = 0; c < cin; ++c) {
      const double* in_plane = input.data.data() + c * h * w;
      const double* kern = kernels.data.data() + (o * cin + c) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        // y + ky - 1 must stay in [0, h)
        const std::size_t y_lo = ky == 0 ? 1 : 0;
        const std::size_t y_hi = ky == 2 ? h - 1 : h;
        for (int kx = 0; kx < 3; ++kx) {
          const double wgt = kern[ky * 3 + kx];
          const std::size_t x_lo = kx == 0 ? 1 : 0;
          const std::size_t x_hi = kx == 2 ? w - 1 : w;
          for (std::size_t y = y_lo; y < y_hi; ++y) {
            double* orow = out_plane + y * w + x_lo;
            const double* irow = in_plane + (y + ky - 1) * w + (x_lo + kx - 1);
            const std::size_t n = x_hi - x_lo;
            for (std::size_t i = 0; i < n; ++i) orow[i] += wgt * irow[i];
          }
        }
      }
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& grad_output) {
  const std::size_t cin = input.extent(0);
  const std::size_t h = input.extent(1);
  const std::size_t w = input.extent(2);
  const std::size_t cout = kernels.extent(0);
  if (grad_output.rank() != 3 || grad_output.extent(0) != cout ||
      grad_output.extent(1) != h || grad_output.extent(2) != w) {
    throw std::invalid_argument("conv2d backward: grad_output shape " +
                                shape_string(grad_output.extents) +
                                " does not match output");
  }

  Conv2dGrads g{zeros_like(input), zeros_like(kernels), Tensor({cout})};

  for (std::size_t o = 0; o < cout; ++o) {
    const double* go_plane = grad_output.data.data() + o * h * w;
    double acc = 0.0;
    for (std::size_t i = 0; i < h * w; ++i) acc += go_plane[i];
    g.bias[o] = acc;

    for (std::size_t c = 0; c < cin; ++c) {
      const double* in_plane = input.data.data() + c * h * w;
      double* gin_plane = g.input.data.data() + c * h * w;
      const double* kern = kernels.data.data() + (o * cin + c) * 9;
      double* gkern = g.kernels.data.data() + (o * cin + c) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const std::size_t y_lo = ky == 0 ? 1 : 0;
        const std::size_t y_hi = ky == 2 ? h - 1 : h;
        for (int kx = 0; kx < 3; ++kx) {
          const double wgt = kern[ky * 3 + kx];
          const std::size_t x_lo = kx == 0 ? 1 : 0;
          const std::size_t x_hi = kx == 2 ? w - 1 : w;
          double ksum = 0.0;
          for (std::size_t y = y_lo; y < y_hi; ++y) {
            const double* grow = go_plane + y * w + x_lo;
            const double* irow = in_plane + (y + ky - 1) * w + (x_lo + kx - 1);
            double* girow = gin_plane + (y + ky - 1) * w + (x_lo + kx - 1);
            const std::size_t n = x_hi - x_lo;
            for (std::size_t i = 0; i < n; ++i) {
              ksum += grow[i] * irow[i];
              girow[i] += wgt * grow[i];
            }
          }
          gkern[ky * 3 + kx] += ksum;
        }
      }
    }
  }
  return g;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_output) {
  require_same_shape(input, grad_output, "relu backward");
  Tensor g = zeros_like(input);
  for (std::size_t i = 0; i < input.numel(); ++i) {
    g[i] = input[i] > 0.0 ? grad_output[i] : 0.0;
  }
  return g;
}

Tensor softmax_channel(const Tensor& logits) {
  require_chw(logits, "softmax_channel logits");
  const std::size_t c = logits.extent(0);
  const std::size_t hw = logits.extent(1) * logits.extent(2);
  if (c < 2) throw std::invalid_argument("softmax_channel needs >= 2 channels");

  Tensor out = zeros_like(logits);
  for (std::size_t p = 0; p < hw; ++p) {
    double mx = logits[p];
    for (std::size_t k = 1; k < c; ++k) mx = std::max(mx, logits[k * hw + p]);
    double sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double e = std::exp(logits[k * hw + p] - mx);
      out[k * hw + p] = e;
      sum += e;
    }
    for (std::size_t k = 0; k < c; ++k) out[k * hw + p] /= sum;
  }
  return out;
}

Tensor entropy_map(const Tensor& logits) {
  require_chw(logits, "entropy_map logits");
  const std::size_t c = logits.extent(0);
  const std::size_t h = logits.extent(1);
  const std::size_t w = logits.extent(2);
  const std::size_t hw = h * w;

  Tensor out({h, w});
  for (std::size_t p = 0; p < hw; ++p) {
    double mx = logits[p];
    for (std::size_t k = 1; k < c; ++k) mx = std::max(mx, logits[k * hw + p]);
    double sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) sum += std::exp(logits[k * hw + p] - mx);
    const double log_sum = std::log(sum);
    double ent = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      // log p stays finite here, so p -> 0 gives p*log p -> -0 with no NaN.
      const double log_p = logits[k * hw + p] - mx - log_sum;
      ent -= std::exp(log_p) * log_p;
    }
    out[p] = ent;
  }
  return out;
}

namespace {

std::size_t count_labeled(const Tensor& probs, const LabelMap& target) {
  const std::size_t c = probs.extent(0);
  if (target.height != probs.extent(1) || target.width != probs.extent(2)) {
    throw std::invalid_argument("cross entropy: target map does not match probs");
  }
  std::size_t n = 0;
  for (std::int32_t t : target.values) {
    if (t == kIgnoreLabel) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= c) {
      throw std::invalid_argument("cross entropy: target class " + std::to_string(t) +
                                  " out of range for " + std::to_string(c) + " classes");
    }
    ++n;
  }
  return n;
}

}  // namespace

double masked_cross_entropy(const Tensor& probs, const LabelMap& target,
                            bool normalize_by_count) {
  require_chw(probs, "cross entropy probs");
  const std::size_t n_labeled = count_labeled(probs, target);
  if (n_labeled == 0) return 0.0;

  const std::size_t hw = target.height * target.width;
  double sum = 0.0;
  for (std::size_t p = 0; p < hw; ++p) {
    const std::int32_t t = target.values[p];
    if (t == kIgnoreLabel) continue;
    sum -= std::log(probs[static_cast<std::size_t>(t) * hw + p]);
  }
  return normalize_by_count ? sum / static_cast<double>(n_labeled) : sum;
}

Tensor masked_cross_entropy_backward(const Tensor& probs, const LabelMap& target,
                                     bool normalize_by_count) {
  require_chw(probs, "cross entropy probs");
  const std::size_t n_labeled = count_labeled(probs, target);
  Tensor grad = zeros_like(probs);
  if (n_labeled == 0) return grad;

  const std::size_t c = probs.extent(0);
  const std::size_t hw = target.height * target.width;
  const double scale = normalize_by_count ? 1.0 / static_cast<double>(n_labeled) : 1.0;
  for (std::size_t p = 0; p < hw; ++p) {
    const std::int32_t t = target.values[p];
    if (t == kIgnoreLabel) continue;
    for (std::size_t k = 0; k < c; ++k) {
      const double onehot = k == static_cast<std::size_t>(t) ? 1.0 : 0.0;
      grad[k * hw + p] = (probs[k * hw + p] - onehot) * scale;
    }
  }
  return grad;
}

ConsistencyNorm parse_consistency_norm(const std::string& text) {
  if (text == "l2" || text == "mse") return ConsistencyNorm::kL2;
  if (text == "l1") return ConsistencyNorm::kL1;
  throw std::invalid_argument("unknown consistency norm: " + text);
}

std::string consistency_norm_name(ConsistencyNorm norm) {
  return norm == ConsistencyNorm::kL2 ? "l2" : "l1";
}

double consistency_loss(const Tensor& a, const Tensor& b, ConsistencyNorm norm) {
  require_same_shape(a, b, "consistency loss");
  const double scale = 2.0 / static_cast<double>(a.numel());
  double sum = 0.0;
  if (norm == ConsistencyNorm::kL2) {
    for (std::size_t i = 0; i < a.numel(); ++i) {
      const double d = a[i] - b[i];
      sum += d * d;
    }
  } else {
    for (std::size_t i = 0; i < a.numel(); ++i) sum += std::abs(a[i] - b[i]);
  }
  return scale * sum;
}

std::pair<Tensor, Tensor> consistency_loss_backward(const Tensor& a, const Tensor& b,
                                                    ConsistencyNorm norm) {
  require_same_shape(a, b, "consistency loss");
  const double scale = 2.0 / static_cast<double>(a.numel());
  Tensor ga = zeros_like(a);
  Tensor gb = zeros_like(b);
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = a[i] - b[i];
    double g;
    if (norm == ConsistencyNorm::kL2) {
      g = scale * 2.0 * d;
    } else {
      g = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
    }
    ga[i] = g;
    gb[i] = -g;
  }
  return {std::move(ga), std::move(gb)};
}

}  // namespace equal
