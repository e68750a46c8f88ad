#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "equal/adam.hpp"
#include "equal/gradcheck.hpp"
#include "equal/ops.hpp"
#include "equal/rng.hpp"

using namespace equal;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> extents, double stddev = 1.0) {
  Tensor t(std::move(extents));
  for (double& v : t.data) v = rng.normal(0.0, stddev);
  return t;
}

// Direct 6-nested-loop convolution, independent of the production kernel.
Tensor conv2d_reference(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  const std::size_t cin = input.extent(0), h = input.extent(1), w = input.extent(2);
  const std::size_t cout = kernels.extent(0);
  Tensor out({cout, h, w});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = bias[o];
        for (std::size_t c = 0; c < cin; ++c) {
          for (int dy = 0; dy < 3; ++dy) {
            for (int dx = 0; dx < 3; ++dx) {
              const long yy = static_cast<long>(y) + dy - 1;
              const long xx = static_cast<long>(x) + dx - 1;
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) ||
                  xx >= static_cast<long>(w)) {
                continue;
              }
              acc += input[(c * h + static_cast<std::size_t>(yy)) * w +
                           static_cast<std::size_t>(xx)] *
                     kernels[((o * cin + c) * 3 + static_cast<std::size_t>(dy)) * 3 +
                             static_cast<std::size_t>(dx)];
            }
          }
        }
        out[(o * h + y) * w + x] = acc;
      }
    }
  }
  return out;
}

// Per-pixel scalar cross-entropy reference.
double cross_entropy_reference(const Tensor& probs, const LabelMap& target) {
  const std::size_t hw = target.height * target.width;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < hw; ++p) {
    const std::int32_t t = target.values[p];
    if (t == kIgnoreLabel) continue;
    sum -= std::log(probs[static_cast<std::size_t>(t) * hw + p]);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("conv2d identity kernel reproduces the input") {
  Tensor input({1, 3, 3}, 1.0);
  Tensor kernels({1, 1, 3, 3});
  kernels[4] = 1.0;  // center tap
  Tensor bias({1});
  const Tensor out = conv2d_forward(input, kernels, bias);
  for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out[i] == input[i]);
}

TEST_CASE("conv2d zero padding leaves only the center tap on a 1x1 image") {
  Tensor input({1, 1, 1});
  input[0] = 5.0;
  Tensor kernels({1, 1, 3, 3}, 1.0);
  Tensor bias({1});
  const Tensor out = conv2d_forward(input, kernels, bias);
  CHECK(out.numel() == 1);
  CHECK(out[0] == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("conv2d matches the 6-loop reference on random instances") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const Tensor input = random_tensor(rng, {2, 4, 4});
    const Tensor kernels = random_tensor(rng, {3, 2, 3, 3});
    const Tensor bias = random_tensor(rng, {3});
    const Tensor got = conv2d_forward(input, kernels, bias);
    const Tensor want = conv2d_reference(input, kernels, bias);
    REQUIRE(got.same_shape(want));
    for (std::size_t i = 0; i < got.numel(); ++i) {
      CHECK(std::abs(got[i] - want[i]) < 1e-12);
    }
  }
}

TEST_CASE("conv2d rejects channel mismatches") {
  Tensor input({2, 4, 4});
  Tensor kernels({3, 5, 3, 3});
  Tensor bias({3});
  CHECK_THROWS_AS(conv2d_forward(input, kernels, bias), std::invalid_argument);
}

TEST_CASE("relu forward and the all-negative edge case") {
  Tensor t({3});
  t.data = {-1.0, 0.0, 2.0};
  const Tensor out = relu_forward(t);
  CHECK(out.data == std::vector<double>{0.0, 0.0, 2.0});

  Tensor neg({4}, -3.0);
  const Tensor zero = relu_forward(neg);
  Tensor upstream({4}, 1.0);
  const Tensor grad = relu_backward(neg, upstream);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(zero[i] == 0.0);
    CHECK(grad[i] == 0.0);
  }
}

TEST_CASE("relu backward matches central differences away from zero") {
  Rng rng(7);
  Tensor input({2, 3, 3});
  for (double& v : input.data) {
    const double mag = 0.2 + std::abs(rng.normal());
    v = rng.bernoulli(0.5) ? mag : -mag;
  }
  Tensor weights = random_tensor(rng, {2, 3, 3});
  auto loss = [&]() {
    const Tensor out = relu_forward(input);
    double s = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) s += weights[i] * out[i];
    return s;
  };
  const Tensor analytic = relu_backward(input, weights);
  CHECK(gradcheck_max_rel_err(loss, {&input}, {analytic}) < 1e-4);
}

TEST_CASE("softmax_channel analytic values") {
  Tensor logits({2, 1, 1});
  logits.data = {1.0, 1.0};
  Tensor p = softmax_channel(logits);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-14));

  logits.data = {0.0, std::log(3.0)};
  p = softmax_channel(logits);
  CHECK(std::abs(p[0] - 0.25) < 1e-12);
  CHECK(std::abs(p[1] - 0.75) < 1e-12);
}

TEST_CASE("softmax_channel is invariant to per-pixel shifts") {
  Rng rng(11);
  const Tensor logits = random_tensor(rng, {4, 3, 5}, 3.0);
  Tensor shifted = logits;
  const std::size_t hw = 15;
  for (std::size_t p = 0; p < hw; ++p) {
    const double c = rng.uniform(-50.0, 50.0);
    for (std::size_t k = 0; k < 4; ++k) shifted[k * hw + p] += c;
  }
  const Tensor a = softmax_channel(logits);
  const Tensor b = softmax_channel(shifted);
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
}

TEST_CASE("softmax_channel rows sum to one and stay strictly positive") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const Tensor logits = random_tensor(rng, {5, 4, 4}, 10.0);
    const Tensor p = softmax_channel(logits);
    const std::size_t hw = 16;
    for (std::size_t px = 0; px < hw; ++px) {
      double sum = 0.0;
      for (std::size_t k = 0; k < 5; ++k) {
        CHECK(p[k * hw + px] > 0.0);
        CHECK(p[k * hw + px] < 1.0);
        sum += p[k * hw + px];
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("masked cross entropy analytic single-pixel case") {
  Tensor probs({4, 2, 2}, 0.25);
  LabelMap target(2, 2, kIgnoreLabel);
  target.at(0, 1) = 2;
  CHECK(std::abs(masked_cross_entropy(probs, target) - std::log(4.0)) < 1e-12);
}

TEST_CASE("masked cross entropy with every pixel ignored is exactly zero") {
  Tensor probs({3, 2, 2}, 1.0 / 3.0);
  LabelMap target(2, 2, kIgnoreLabel);
  CHECK(masked_cross_entropy(probs, target) == 0.0);
  const Tensor grad = masked_cross_entropy_backward(probs, target);
  for (double v : grad.data) CHECK(v == 0.0);
}

TEST_CASE("masked cross entropy rejects out-of-range classes") {
  Tensor probs({3, 2, 2}, 1.0 / 3.0);
  LabelMap target(2, 2, 0);
  target.at(1, 1) = 3;
  CHECK_THROWS_AS(masked_cross_entropy(probs, target), std::invalid_argument);
}

TEST_CASE("masked cross entropy matches the scalar reference and finite differences") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    Tensor logits = random_tensor(rng, {3, 4, 4});
    LabelMap target(4, 4);
    for (auto& v : target.values) {
      v = rng.bernoulli(0.3) ? kIgnoreLabel
                             : static_cast<std::int32_t>(rng.uniform_index(3));
    }
    const Tensor probs = softmax_channel(logits);
    CHECK(std::abs(masked_cross_entropy(probs, target) -
                   cross_entropy_reference(probs, target)) < 1e-12);

    auto loss = [&]() { return masked_cross_entropy(softmax_channel(logits), target); };
    const Tensor analytic = masked_cross_entropy_backward(probs, target);
    CHECK(gradcheck_max_rel_err(loss, {&logits}, {analytic}) < 1e-4);
  }
}

TEST_CASE("masked cross entropy ignores the content of ignored pixels bit-exactly") {
  Rng rng(3);
  Tensor logits = random_tensor(rng, {3, 4, 4});
  LabelMap target(4, 4);
  for (auto& v : target.values) {
    v = rng.bernoulli(0.5) ? kIgnoreLabel
                           : static_cast<std::int32_t>(rng.uniform_index(3));
  }
  const Tensor probs = softmax_channel(logits);
  const double loss = masked_cross_entropy(probs, target);
  const Tensor grad = masked_cross_entropy_backward(probs, target);

  // perturb probabilities at ignored positions only
  Tensor tampered = probs;
  const std::size_t hw = 16;
  for (std::size_t p = 0; p < hw; ++p) {
    if (target.values[p] != kIgnoreLabel) continue;
    for (std::size_t k = 0; k < 3; ++k) tampered[k * hw + p] = rng.uniform();
  }
  CHECK(masked_cross_entropy(tampered, target) == loss);
  const Tensor grad2 = masked_cross_entropy_backward(tampered, target);
  for (std::size_t p = 0; p < hw; ++p) {
    if (target.values[p] == kIgnoreLabel) continue;
    for (std::size_t k = 0; k < 3; ++k) CHECK(grad2[k * hw + p] == grad[k * hw + p]);
  }
}

TEST_CASE("consistency loss identities") {
  Rng rng(5);
  const Tensor a = random_tensor(rng, {3, 4, 4});
  CHECK(consistency_loss(a, a) == 0.0);
  auto [ga, gb] = consistency_loss_backward(a, a);
  for (double v : ga.data) CHECK(v == 0.0);
  for (double v : gb.data) CHECK(v == 0.0);

  Tensor x({1, 1, 1}), y({1, 1, 1});
  x[0] = 1.0;
  y[0] = 3.0;
  CHECK(consistency_loss(x, y) == 8.0);
  CHECK(consistency_loss(x, y, ConsistencyNorm::kL1) == 4.0);

  const Tensor b = random_tensor(rng, {3, 4, 4});
  CHECK(consistency_loss(a, b) == consistency_loss(b, a));
  CHECK(consistency_loss(a, b, ConsistencyNorm::kL1) ==
        consistency_loss(b, a, ConsistencyNorm::kL1));
}

TEST_CASE("consistency loss rejects extent mismatches") {
  Tensor a({2, 3, 3});
  Tensor b({2, 3, 4});
  CHECK_THROWS_AS(consistency_loss(a, b), std::invalid_argument);
}

TEST_CASE("consistency loss gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    Tensor a = random_tensor(rng, {2, 3, 3});
    Tensor b = random_tensor(rng, {2, 3, 3});
    auto loss = [&]() { return consistency_loss(a, b); };
    auto [ga, gb] = consistency_loss_backward(a, b);
    CHECK(gradcheck_max_rel_err(loss, {&a, &b}, {ga, gb}) < 1e-4);
  }
}

TEST_CASE("adam zero gradient leaves the parameter untouched") {
  Tensor param({3}, 2.0);
  Tensor grad({3});
  AdamState state = AdamState::for_param(param);
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  adam_step(param, grad, state, cfg);
  CHECK(state.step == 1);
  for (double v : param.data) CHECK(v == 2.0);
}

TEST_CASE("adam first step follows the bias-corrected closed form") {
  Tensor param({1});
  Tensor grad({1});
  grad[0] = 2.0;
  AdamState state = AdamState::for_param(param);
  AdamConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.weight_decay = 0.0;
  adam_step(param, grad, state, cfg);
  // m_hat = g, v_hat = g^2, so the update is -lr * g / (|g| + eps)
  const double expected = -1e-3 * 2.0 / (2.0 + 1e-8);
  CHECK(std::abs(param[0] - expected) < 1e-15);
}

TEST_CASE("adam descends x^2 monotonically") {
  Tensor x({1});
  x[0] = 1.0;
  AdamState state = AdamState::for_param(x);
  AdamConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.weight_decay = 0.0;
  double prev = std::abs(x[0]);
  for (int i = 0; i < 10; ++i) {
    Tensor grad({1});
    grad[0] = 2.0 * x[0];
    adam_step(x, grad, state, cfg);
    CHECK(std::abs(x[0]) < prev);
    prev = std::abs(x[0]);
  }
}

TEST_CASE("adam is deterministic and rejects non-finite gradients") {
  Rng rng(9);
  Tensor param = random_tensor(rng, {8});
  Tensor grad = random_tensor(rng, {8});
  Tensor p1 = param, p2 = param;
  AdamState s1 = AdamState::for_param(param);
  AdamState s2 = AdamState::for_param(param);
  AdamConfig cfg;
  adam_step(p1, grad, s1, cfg);
  adam_step(p2, grad, s2, cfg);
  CHECK(p1.data == p2.data);
  CHECK(s1.m.data == s2.m.data);

  grad[3] = std::nan("");
  CHECK_THROWS_AS(adam_step(p1, grad, s1, cfg), std::runtime_error);
}

TEST_CASE("gradcheck on a linear loss is exact to machine precision") {
  Rng rng(13);
  Tensor x = random_tensor(rng, {6});
  const Tensor w = random_tensor(rng, {6});
  auto loss = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) s += w[i] * x[i];
    return s;
  };
  CHECK(gradcheck_max_rel_err(loss, {&x}, {w}) < 1e-10);
}

TEST_CASE("gradcheck suite passes every op and the composed model") {
  for (const GradCheckReport& r : gradcheck_suite(3)) {
    INFO(r.name, " max rel err ", r.max_rel_err);
    CHECK(r.pass());
  }
}
