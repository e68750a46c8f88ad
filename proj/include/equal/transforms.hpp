#pragma once

#include <string>

#include "equal/labels.hpp"
#include "equal/tensor.hpp"

namespace equal {

enum class TransformOp { kHFlip, kVFlip, kRot90, kRot180, kTranslate };

// A spatial permutation with an exact inverse. Translation is circular so
// that invert(apply(t)) is the identity bit-for-bit; rot90 needs square
// spatial extents.
struct TransformKind {
  TransformOp op = TransformOp::kHFlip;
  int dx = 0;  // translation, positive = right
  int dy = 0;  // translation, positive = down

  static TransformKind hflip() { return {TransformOp::kHFlip, 0, 0}; }
  static TransformKind vflip() { return {TransformOp::kVFlip, 0, 0}; }
  static TransformKind rot90() { return {TransformOp::kRot90, 0, 0}; }
  static TransformKind rot180() { return {TransformOp::kRot180, 0, 0}; }
  static TransformKind translate(int dx, int dy) {
    return {TransformOp::kTranslate, dx, dy};
  }

  // Canonical config names: "hflip", "vflip", "rot90", "rot180",
  // "translate:dx,dy".
  static TransformKind parse(const std::string& text);
  std::string name() const;

  bool operator==(const TransformKind& other) const = default;
};

// Applies the permutation to the last two (spatial) extents; leading extents
// are treated as channels.
Tensor apply_transform(const TransformKind& kind, const Tensor& t);
Tensor invert_transform(const TransformKind& kind, const Tensor& t);

LabelMap apply_transform(const TransformKind& kind, const LabelMap& labels);
LabelMap invert_transform(const TransformKind& kind, const LabelMap& labels);

}  // namespace equal
