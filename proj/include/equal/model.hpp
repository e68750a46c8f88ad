#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "equal/adam.hpp"
#include "equal/tensor.hpp"
#include "equal/transforms.hpp"

namespace equal {

struct ModelConfig {
  std::size_t in_channels = 5;
  std::vector<std::size_t> hidden = {16, 16};
  std::size_t num_classes = 4;
  std::uint64_t seed = 0;

  bool operator==(const ModelConfig& other) const = default;
};

// Small fully-convolutional segmentation net: conv3x3+ReLU per hidden width,
// then a final conv3x3 down to num_classes. All convs are "same"-padded so
// spatial extents are preserved end to end.
struct SegModel {
  ModelConfig config;

  struct Param {
    std::string name;
    Tensor value;
    AdamState opt;
  };
  std::vector<Param> params;  // conv<i>.weight, conv<i>.bias, ...

  std::size_t conv_count() const { return config.hidden.size() + 1; }
};

// He-style init: kernel weights ~ N(0, 2/fan_in), biases 0. Deterministic
// given config.seed.
SegModel init_model(const ModelConfig& cfg);

struct ForwardCache {
  std::vector<Tensor> conv_inputs;  // input seen by conv i
  std::vector<Tensor> relu_inputs;  // pre-activation feeding relu i
};

Tensor model_forward(const SegModel& model, const Tensor& x,
                     ForwardCache* cache = nullptr);

std::vector<Tensor> zero_param_grads(const SegModel& model);

// Accumulates dLoss/dParam into `grads` (aligned with model.params) given
// dLoss/dLogits.
void model_backward(const SegModel& model, const ForwardCache& cache,
                    const Tensor& grad_logits, std::vector<Tensor>& grads);

// The paired forward pass: logits for the input itself, and the
// inverse-transformed logits of the transformed input, both aligned to the
// input's pixel frame.
struct PairForward {
  Tensor logits_direct;     // f(x)
  Tensor logits_roundtrip;  // tau^-1(f(tau(x)))
  ForwardCache cache_direct;
  ForwardCache cache_transformed;
};

PairForward model_forward_pair(const SegModel& model, const Tensor& x,
                               const TransformKind& kind);

// Backward through both branches of the pair; g_roundtrip is the gradient
// w.r.t. logits_roundtrip (in the input frame) and is routed back through the
// inverse permutation.
void model_backward_pair(const SegModel& model, const PairForward& pair,
                         const TransformKind& kind, const Tensor& g_direct,
                         const Tensor& g_roundtrip, std::vector<Tensor>& grads);

// Checkpoints: flat list of named parameter tensors with shape headers,
// little-endian binary; round-trips bit-exactly.
void save_checkpoint(const SegModel& model, const std::string& path);
SegModel load_checkpoint(const std::string& path);

}  // namespace equal
