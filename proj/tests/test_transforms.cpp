#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "equal/rng.hpp"
#include "equal/transforms.hpp"

using namespace equal;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> extents) {
  Tensor t(std::move(extents));
  for (double& v : t.data) v = rng.normal();
  return t;
}

}  // namespace

TEST_CASE("hflip mirrors columns") {
  Tensor t({2, 2});
  t.data = {1, 2, 3, 4};
  const Tensor out = apply_transform(TransformKind::hflip(), t);
  CHECK(out.data == std::vector<double>{2, 1, 4, 3});
}

TEST_CASE("translation is circular") {
  Tensor t({2, 2});
  t.data = {1, 2, 3, 4};
  const Tensor out = apply_transform(TransformKind::translate(1, 0), t);
  CHECK(out.data == std::vector<double>{2, 1, 4, 3});
}

TEST_CASE("rot180 equals hflip composed with vflip") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Rng rng(seed);
    const Tensor t = random_tensor(rng, {2, 3, 5});
    const Tensor direct = apply_transform(TransformKind::rot180(), t);
    const Tensor composed =
        apply_transform(TransformKind::hflip(), apply_transform(TransformKind::vflip(), t));
    CHECK(direct.data == composed.data);
  }
}

TEST_CASE("flips and rot180 are involutions") {
  Rng rng(3);
  const Tensor t = random_tensor(rng, {3, 4, 6});
  for (const TransformKind k :
       {TransformKind::hflip(), TransformKind::vflip(), TransformKind::rot180()}) {
    const Tensor twice = apply_transform(k, apply_transform(k, t));
    CHECK(twice.data == t.data);
  }
}

TEST_CASE("invert composed with apply is the identity for every kind") {
  Rng rng(17);
  const Tensor rect = random_tensor(rng, {2, 4, 6});
  const Tensor square = random_tensor(rng, {2, 5, 5});
  const std::vector<TransformKind> kinds = {
      TransformKind::hflip(), TransformKind::vflip(), TransformKind::rot180(),
      TransformKind::translate(3, -2), TransformKind::translate(-7, 11)};
  for (const TransformKind& k : kinds) {
    const Tensor roundtrip = invert_transform(k, apply_transform(k, rect));
    CHECK(roundtrip.data == rect.data);
  }
  const Tensor rot = invert_transform(TransformKind::rot90(),
                                      apply_transform(TransformKind::rot90(), square));
  CHECK(rot.data == square.data);
}

TEST_CASE("rot90 round-trips exhaustively on small square grids") {
  for (std::size_t n = 1; n <= 5; ++n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<double>(i);
    const Tensor once = apply_transform(TransformKind::rot90(), t);
    CHECK(invert_transform(TransformKind::rot90(), once).data == t.data);
    // four quarter turns are the identity
    Tensor four = t;
    for (int i = 0; i < 4; ++i) four = apply_transform(TransformKind::rot90(), four);
    CHECK(four.data == t.data);
  }
}

TEST_CASE("rot90 rejects non-square spatial extents") {
  Tensor t({2, 3, 4});
  CHECK_THROWS_AS(apply_transform(TransformKind::rot90(), t), std::invalid_argument);
}

TEST_CASE("label maps permute like tensors, including the ignore value") {
  LabelMap m(3, 4, 0);
  m.at(1, 0) = 7;
  const LabelMap flipped = apply_transform(TransformKind::hflip(), m);
  CHECK(flipped.at(1, 3) == 7);
  CHECK(flipped.at(1, 0) == 0);

  LabelMap with_ignore(2, 2, kIgnoreLabel);
  with_ignore.at(0, 0) = 1;
  const LabelMap moved = apply_transform(TransformKind::vflip(), with_ignore);
  CHECK(moved.at(1, 0) == 1);
  CHECK(moved.at(0, 0) == kIgnoreLabel);
}

TEST_CASE("transforms preserve the multiset of values") {
  Rng rng(23);
  for (const TransformKind& k :
       {TransformKind::hflip(), TransformKind::rot180(), TransformKind::translate(2, 5)}) {
    LabelMap m(4, 6);
    for (auto& v : m.values) v = static_cast<std::int32_t>(rng.uniform_index(5));
    LabelMap moved = apply_transform(k, m);
    std::vector<std::int32_t> a = m.values, b = moved.values;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}

TEST_CASE("transform names round-trip through parse") {
  const std::vector<std::string> names = {"hflip", "vflip", "rot90", "rot180",
                                          "translate:3,-2"};
  for (const std::string& n : names) {
    CHECK(TransformKind::parse(n).name() == n);
  }
  CHECK_THROWS_AS(TransformKind::parse("swirl"), std::invalid_argument);
  CHECK_THROWS_AS(TransformKind::parse("translate:abc"), std::invalid_argument);
}
