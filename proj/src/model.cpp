#include "equal/model.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "equal/ops.hpp"
#include "equal/rng.hpp"

namespace equal {

namespace {

std::vector<std::size_t> channel_plan(const ModelConfig& cfg) {
  std::vector<std::size_t> plan;
  plan.push_back(cfg.in_channels);
  for (std::size_t hdim : cfg.hidden) plan.push_back(hdim);
  plan.push_back(cfg.num_classes);
  return plan;
}

}  // namespace

SegModel init_model(const ModelConfig& cfg) {
  if (cfg.num_classes < 2) throw std::invalid_argument("model needs >= 2 classes");
  if (cfg.hidden.empty()) throw std::invalid_argument("model needs >= 1 hidden layer");
  if (cfg.in_channels == 0) throw std::invalid_argument("model needs >= 1 input channel");

  SegModel model;
  model.config = cfg;
  Rng rng(mix_seed(cfg.seed, 0x10de1));

  const std::vector<std::size_t> plan = channel_plan(cfg);
  for (std::size_t i = 0; i + 1 < plan.size(); ++i) {
    const std::size_t cin = plan[i];
    const std::size_t cout = plan[i + 1];
    Tensor weight({cout, cin, 3, 3});
    const double stddev = std::sqrt(2.0 / (static_cast<double>(cin) * 9.0));
    for (double& v : weight.data) v = rng.normal(0.0, stddev);
    Tensor bias({cout});

    const std::string base = "conv" + std::to_string(i);
    model.params.push_back({base + ".weight", weight, AdamState::for_param(weight)});
    model.params.push_back({base + ".bias", bias, AdamState::for_param(bias)});
  }
  return model;
}

Tensor model_forward(const SegModel& model, const Tensor& x, ForwardCache* cache) {
  if (x.rank() != 3 || x.extent(0) != model.config.in_channels) {
    throw std::invalid_argument("model_forward: input " + shape_string(x.extents) +
                                " does not match " +
                                std::to_string(model.config.in_channels) +
                                " input channels");
  }
  const std::size_t convs = model.conv_count();
  Tensor cur = x;
  for (std::size_t i = 0; i < convs; ++i) {
    if (cache) cache->conv_inputs.push_back(cur);
    cur = conv2d_forward(cur, model.params[2 * i].value, model.params[2 * i + 1].value);
    if (i + 1 < convs) {
      if (cache) cache->relu_inputs.push_back(cur);
      cur = relu_forward(cur);
    }
  }
  return cur;
}

std::vector<Tensor> zero_param_grads(const SegModel& model) {
  std::vector<Tensor> grads;
  grads.reserve(model.params.size());
  for (const auto& p : model.params) grads.push_back(zeros_like(p.value));
  return grads;
}

void model_backward(const SegModel& model, const ForwardCache& cache,
                    const Tensor& grad_logits, std::vector<Tensor>& grads) {
  const std::size_t convs = model.conv_count();
  if (cache.conv_inputs.size() != convs || grads.size() != model.params.size()) {
    throw std::invalid_argument("model_backward: cache/grads do not match model");
  }
  Tensor g = grad_logits;
  for (std::size_t i = convs; i-- > 0;) {
    Conv2dGrads cg = conv2d_backward(cache.conv_inputs[i], model.params[2 * i].value, g);
    Tensor& gw = grads[2 * i];
    Tensor& gb = grads[2 * i + 1];
    for (std::size_t k = 0; k < gw.numel(); ++k) gw[k] += cg.kernels[k];
    for (std::size_t k = 0; k < gb.numel(); ++k) gb[k] += cg.bias[k];
    if (i > 0) {
      g = relu_backward(cache.relu_inputs[i - 1], cg.input);
    }
  }
}

PairForward model_forward_pair(const SegModel& model, const Tensor& x,
                               const TransformKind& kind) {
  PairForward pair;
  pair.logits_direct = model_forward(model, x, &pair.cache_direct);
  const Tensor tx = apply_transform(kind, x);
  const Tensor raw = model_forward(model, tx, &pair.cache_transformed);
  pair.logits_roundtrip = invert_transform(kind, raw);
  return pair;
}

void model_backward_pair(const SegModel& model, const PairForward& pair,
                         const TransformKind& kind, const Tensor& g_direct,
                         const Tensor& g_roundtrip, std::vector<Tensor>& grads) {
  model_backward(model, pair.cache_direct, g_direct, grads);
  // The inverse permutation's adjoint is the forward permutation.
  const Tensor g_raw = apply_transform(kind, g_roundtrip);
  model_backward(model, pair.cache_transformed, g_raw, grads);
}

namespace {

constexpr char kCheckpointMagic[8] = {'E', 'Q', 'A', 'L', 'C', 'K', 'P', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const SegModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_u64(os, model.config.in_channels);
  write_u64(os, model.config.num_classes);
  write_u64(os, model.config.seed);
  write_u64(os, model.config.hidden.size());
  for (std::size_t hdim : model.config.hidden) write_u64(os, hdim);
  write_u64(os, model.params.size());
  for (const auto& p : model.params) {
    write_u64(os, p.name.size());
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_u64(os, p.value.rank());
    for (std::size_t e : p.value.extents) write_u64(os, e);
    os.write(reinterpret_cast<const char*>(p.value.data.data()),
             static_cast<std::streamsize>(p.value.numel() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

SegModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::string(magic, 8) != std::string(kCheckpointMagic, 8)) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  ModelConfig cfg;
  cfg.in_channels = read_u64(is);
  cfg.num_classes = read_u64(is);
  cfg.seed = read_u64(is);
  cfg.hidden.resize(read_u64(is));
  for (std::size_t& hdim : cfg.hidden) hdim = read_u64(is);

  SegModel model;
  model.config = cfg;
  const std::uint64_t count = read_u64(is);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name(read_u64(is), '\0');
    is.read(name.data(), static_cast<std::streamsize>(name.size()));
    std::vector<std::size_t> extents(read_u64(is));
    for (std::size_t& e : extents) e = read_u64(is);
    Tensor value(extents);
    is.read(reinterpret_cast<char*>(value.data.data()),
            static_cast<std::streamsize>(value.numel() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
    model.params.push_back({name, value, AdamState::for_param(value)});
  }
  return model;
}

}  // namespace equal
