#include <algorithm>
#include <cmath>

#include "equal/gradcheck.hpp"
#include "equal/model.hpp"
#include "equal/ops.hpp"
#include "equal/rng.hpp"

namespace equal {

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> extents, double stddev = 1.0) {
  Tensor t(std::move(extents));
  for (double& v : t.data) v = rng.normal(0.0, stddev);
  return t;
}

LabelMap random_target(Rng& rng, std::size_t h, std::size_t w, std::size_t classes,
                       double ignore_fraction) {
  LabelMap m(h, w);
  for (auto& v : m.values) {
    v = rng.bernoulli(ignore_fraction)
            ? kIgnoreLabel
            : static_cast<std::int32_t>(rng.uniform_index(classes));
  }
  return m;
}

// Central differences are only meaningful away from ReLU kinks, so instances
// whose pre-activations sit within `margin` of zero are rejected and redrawn.
double min_relu_margin(const ForwardCache& cache) {
  double m = 1e300;
  for (const Tensor& t : cache.relu_inputs) {
    for (double v : t.data) m = std::min(m, std::abs(v));
  }
  return m;
}

struct ModelInstance {
  SegModel model;
  Tensor input;
  LabelMap target;
};

ModelInstance make_smooth_instance(std::uint64_t seed, const TransformKind& kind) {
  const std::size_t h = 6, w = 6, cin = 3, classes = 3;
  for (std::uint64_t attempt = 0;; ++attempt) {
    ModelConfig cfg;
    cfg.in_channels = cin;
    cfg.hidden = {6};
    cfg.num_classes = classes;
    cfg.seed = mix_seed(seed, 0xA11, attempt);
    SegModel model = init_model(cfg);

    Rng rng(mix_seed(seed, 0xB22, attempt));
    Tensor input = random_tensor(rng, {cin, h, w});
    LabelMap target = random_target(rng, h, w, classes, 0.4);

    PairForward pair = model_forward_pair(model, input, kind);
    const double margin =
        std::min(min_relu_margin(pair.cache_direct), min_relu_margin(pair.cache_transformed));
    if (margin > 1e-3) return {std::move(model), std::move(input), std::move(target)};
  }
}

std::vector<Tensor*> model_param_ptrs(SegModel& model) {
  std::vector<Tensor*> ptrs;
  for (auto& p : model.params) ptrs.push_back(&p.value);
  return ptrs;
}

double check_conv2d(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xC01));
  Tensor input = random_tensor(rng, {2, 4, 4});
  Tensor kernels = random_tensor(rng, {3, 2, 3, 3});
  Tensor bias = random_tensor(rng, {3});
  Tensor weights = random_tensor(rng, {3, 4, 4});

  auto loss = [&]() {
    Tensor out = conv2d_forward(input, kernels, bias);
    double s = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) s += weights[i] * out[i];
    return s;
  };
  Conv2dGrads g = conv2d_backward(input, kernels, weights);
  return gradcheck_max_rel_err(loss, {&input, &kernels, &bias},
                               {g.input, g.kernels, g.bias});
}

double check_relu(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xC02));
  Tensor input({4, 5, 5});
  for (double& v : input.data) {
    // keep |x| >= 0.1 so h=1e-5 never straddles the kink
    const double mag = 0.1 + std::abs(rng.normal(0.0, 1.0));
    v = rng.bernoulli(0.5) ? mag : -mag;
  }
  Tensor weights = random_tensor(rng, {4, 5, 5});
  auto loss = [&]() {
    Tensor out = relu_forward(input);
    double s = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) s += weights[i] * out[i];
    return s;
  };
  Tensor analytic = relu_backward(input, weights);
  return gradcheck_max_rel_err(loss, {&input}, {analytic});
}

double check_cross_entropy(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xC03));
  Tensor logits = random_tensor(rng, {3, 4, 4});
  LabelMap target = random_target(rng, 4, 4, 3, 0.3);
  auto loss = [&]() { return masked_cross_entropy(softmax_channel(logits), target); };
  Tensor analytic = masked_cross_entropy_backward(softmax_channel(logits), target);
  return gradcheck_max_rel_err(loss, {&logits}, {analytic});
}

double check_consistency(std::uint64_t seed, ConsistencyNorm norm) {
  Rng rng(mix_seed(seed, norm == ConsistencyNorm::kL2 ? 0xC04 : 0xC05));
  Tensor a = random_tensor(rng, {3, 4, 4});
  Tensor b = random_tensor(rng, {3, 4, 4});
  if (norm == ConsistencyNorm::kL1) {
    // keep |a-b| away from the L1 kink
    for (std::size_t i = 0; i < a.numel(); ++i) {
      if (std::abs(a[i] - b[i]) < 1e-2) a[i] += a[i] >= b[i] ? 2e-2 : -2e-2;
    }
  }
  auto loss = [&]() { return consistency_loss(a, b, norm); };
  auto [ga, gb] = consistency_loss_backward(a, b, norm);
  return gradcheck_max_rel_err(loss, {&a, &b}, {ga, gb});
}

double check_model_cross_entropy(std::uint64_t seed) {
  ModelInstance inst = make_smooth_instance(seed, TransformKind::hflip());
  auto loss = [&]() {
    Tensor logits = model_forward(inst.model, inst.input);
    return masked_cross_entropy(softmax_channel(logits), inst.target);
  };
  ForwardCache cache;
  Tensor logits = model_forward(inst.model, inst.input, &cache);
  Tensor g = masked_cross_entropy_backward(softmax_channel(logits), inst.target);
  std::vector<Tensor> grads = zero_param_grads(inst.model);
  model_backward(inst.model, cache, g, grads);
  return gradcheck_max_rel_err(loss, model_param_ptrs(inst.model), grads);
}

double check_model_consistency(std::uint64_t seed, const TransformKind& kind) {
  ModelInstance inst = make_smooth_instance(seed, kind);
  auto loss = [&]() {
    PairForward pair = model_forward_pair(inst.model, inst.input, kind);
    return consistency_loss(pair.logits_direct, pair.logits_roundtrip);
  };
  PairForward pair = model_forward_pair(inst.model, inst.input, kind);
  auto [g0, g1] = consistency_loss_backward(pair.logits_direct, pair.logits_roundtrip);
  std::vector<Tensor> grads = zero_param_grads(inst.model);
  model_backward_pair(inst.model, pair, kind, g0, g1, grads);
  return gradcheck_max_rel_err(loss, model_param_ptrs(inst.model), grads);
}

double check_model_total(std::uint64_t seed, const TransformKind& kind) {
  ModelInstance inst = make_smooth_instance(seed, kind);
  auto loss = [&]() {
    PairForward pair = model_forward_pair(inst.model, inst.input, kind);
    return masked_cross_entropy(softmax_channel(pair.logits_direct), inst.target) +
           consistency_loss(pair.logits_direct, pair.logits_roundtrip);
  };
  PairForward pair = model_forward_pair(inst.model, inst.input, kind);
  auto [g0, g1] = consistency_loss_backward(pair.logits_direct, pair.logits_roundtrip);
  Tensor gce =
      masked_cross_entropy_backward(softmax_channel(pair.logits_direct), inst.target);
  for (std::size_t i = 0; i < g0.numel(); ++i) g0[i] += gce[i];
  std::vector<Tensor> grads = zero_param_grads(inst.model);
  model_backward_pair(inst.model, pair, kind, g0, g1, grads);
  return gradcheck_max_rel_err(loss, model_param_ptrs(inst.model), grads);
}

}  // namespace

std::vector<GradCheckReport> gradcheck_suite(std::size_t seeds) {
  struct Check {
    const char* name;
    double (*fn)(std::uint64_t);
  };
  const Check checks[] = {
      {"conv2d", check_conv2d},
      {"relu", check_relu},
      {"softmax_cross_entropy", check_cross_entropy},
      {"consistency_l2",
       [](std::uint64_t s) { return check_consistency(s, ConsistencyNorm::kL2); }},
      {"consistency_l1",
       [](std::uint64_t s) { return check_consistency(s, ConsistencyNorm::kL1); }},
      {"model_cross_entropy", check_model_cross_entropy},
      {"model_pair_consistency",
       [](std::uint64_t s) { return check_model_consistency(s, TransformKind::hflip()); }},
      {"model_pair_consistency_rot90",
       [](std::uint64_t s) { return check_model_consistency(s, TransformKind::rot90()); }},
      {"model_total_loss",
       [](std::uint64_t s) { return check_model_total(s, TransformKind::hflip()); }},
  };

  std::vector<GradCheckReport> reports;
  for (const Check& c : checks) {
    GradCheckReport r;
    r.name = c.name;
    for (std::uint64_t s = 1; s <= seeds; ++s) {
      r.max_rel_err = std::max(r.max_rel_err, c.fn(s));
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace equal
