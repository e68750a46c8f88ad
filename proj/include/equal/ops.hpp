#pragma once

#include <string>
#include <utility>

#include "equal/labels.hpp"
#include "equal/tensor.hpp"

namespace equal {

// 3x3 convolution, stride 1, zero padding 1 ("same" spatial extents).
// input [Cin,H,W], kernels [Cout,Cin,3,3], bias [Cout] -> [Cout,H,W].
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias);

struct Conv2dGrads {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};

// Exact gradients of any scalar loss w.r.t. all three conv arguments, given
// the gradient w.r.t. the output.
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& grad_output);

Tensor relu_forward(const Tensor& input);
// Passes gradient where input > 0; the subgradient at exactly 0 is 0.
Tensor relu_backward(const Tensor& input, const Tensor& grad_output);

// Per-pixel softmax over the channel extent of a [C,H,W] tensor. Max-shifted,
// so it is overflow-safe for any finite logits.
Tensor softmax_channel(const Tensor& logits);

// Per-pixel entropy -sum_c p ln p of the channel softmax; [C,H,W] -> [H,W].
Tensor entropy_map(const Tensor& logits);

// Mean negative log-likelihood over labeled pixels. Pixels whose target is
// kIgnoreLabel contribute nothing; if no pixel is labeled the loss is 0.
// With normalize_by_count=false the sum is returned unnormalized.
double masked_cross_entropy(const Tensor& probs, const LabelMap& target,
                            bool normalize_by_count = true);

// Gradient w.r.t. the logits that produced `probs` (fused softmax + CE):
// (P - onehot)/N at labeled pixels, 0 at ignored ones.
Tensor masked_cross_entropy_backward(const Tensor& probs, const LabelMap& target,
                                     bool normalize_by_count = true);

enum class ConsistencyNorm { kL2, kL1 };

ConsistencyNorm parse_consistency_norm(const std::string& text);
std::string consistency_norm_name(ConsistencyNorm norm);

// Self-consistency penalty between two aligned logits tensors:
//   kL2: (2 / numel) * sum (a-b)^2
//   kL1: (2 / numel) * sum |a-b|
double consistency_loss(const Tensor& a, const Tensor& b,
                        ConsistencyNorm norm = ConsistencyNorm::kL2);

// Gradients w.r.t. both arguments.
std::pair<Tensor, Tensor> consistency_loss_backward(
    const Tensor& a, const Tensor& b, ConsistencyNorm norm = ConsistencyNorm::kL2);

}  // namespace equal
