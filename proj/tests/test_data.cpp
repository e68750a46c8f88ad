#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <vector>

#include "equal/data.hpp"
#include "equal/rng.hpp"

using namespace equal;

TEST_CASE("dataset generation is deterministic in the seed") {
  const auto a = generate_dataset(5, 4, 16, 16, 3, 4);
  const auto b = generate_dataset(5, 4, 16, 16, 3, 4);
  const auto c = generate_dataset(6, 4, 16, 16, 3, 4);
  REQUIRE(a.size() == 4);
  bool all_equal = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].input.data == b[i].input.data);
    CHECK(a[i].truth == b[i].truth);
    if (a[i].truth != c[i].truth) all_equal = false;
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("every scene keeps background pixels and stays in class range") {
  const auto samples = generate_dataset(11, 20, 24, 24, 2, 5);
  for (const Sample& s : samples) {
    bool has_background = false;
    for (std::int32_t v : s.truth.values) {
      CHECK(v >= 0);
      CHECK(v < 5);
      if (v == 0) has_background = true;
    }
    CHECK(has_background);
  }
}

TEST_CASE("class histogram over 200 scenes is background-dominated") {
  const auto samples = generate_dataset(3, 200, 32, 32, 5, 4);
  std::vector<std::size_t> counts(4, 0);
  std::size_t total = 0;
  for (const Sample& s : samples) {
    for (std::int32_t v : s.truth.values) {
      ++counts[static_cast<std::size_t>(v)];
      ++total;
    }
  }
  CHECK(counts[0] > total / 3);
  for (std::size_t c = 1; c < 4; ++c) CHECK(counts[0] > counts[c]);
}

TEST_CASE("dataset generation rejects invalid parameters") {
  CHECK_THROWS_AS(generate_dataset(1, 2, 8, 32, 3, 4), std::invalid_argument);
  CHECK_THROWS_AS(generate_dataset(1, 2, 32, 32, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_dataset(1, 2, 32, 32, 3, 300), std::invalid_argument);
}

TEST_CASE("region grids tile the image exactly") {
  const RegionGrid g = make_region_grid(32, 32, 8, 8);
  CHECK(g.count() == 16);

  const RegionGrid paper_like = make_region_grid(360, 480, 72, 96);
  CHECK(paper_like.count() == 25);

  // coverage counting: every pixel hit exactly once
  std::vector<int> hits(32 * 32, 0);
  for (std::size_t m = 0; m < g.count(); ++m) {
    const RegionGrid::Rect r = g.rect(m);
    for (std::size_t y = r.y0; y < r.y0 + r.height; ++y) {
      for (std::size_t x = r.x0; x < r.x0 + r.width; ++x) ++hits[y * 32 + x];
    }
  }
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("non-dividing region sizes are rejected with the valid sizes named") {
  try {
    make_region_grid(32, 32, 7, 8);
    FAIL("expected a shape error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("does not tile") != std::string::npos);
    CHECK(msg.find("16") != std::string::npos);
  }
}

TEST_CASE("pool labeling, double-label rejection and fractions") {
  const RegionGrid g = make_region_grid(32, 32, 8, 8);
  PoolState pool = build_pool(4, g);
  CHECK(pool.total_regions() == 64);
  CHECK(pool.labeled_fraction() == 0.0);

  pool.mark_labeled({0, 3});
  CHECK(pool.labeled_count() == 1);
  CHECK(pool.labeled_fraction() == 1.0 / 64.0);
  CHECK_THROWS_AS(pool.mark_labeled({0, 3}), std::invalid_argument);

  pool.mark_labeled({2, 0});
  pool.mark_labeled({2, 1});
  CHECK(pool.image_labeled_fraction(2) == 2.0 / 16.0);

  // 3 of 16 regions of one image
  PoolState single = build_pool(1, g);
  single.mark_labeled({0, 0});
  single.mark_labeled({0, 5});
  single.mark_labeled({0, 9});
  CHECK(single.image_labeled_fraction(0) == 0.1875);
}

TEST_CASE("pool conservation and monotonicity over random label sequences") {
  const RegionGrid g = make_region_grid(16, 16, 4, 4);
  PoolState pool = build_pool(3, g);
  Rng rng(77);
  double prev_fraction = 0.0;
  std::vector<RegionRef> order;
  for (std::int64_t i = 0; i < 3; ++i) {
    for (std::size_t m = 0; m < g.count(); ++m) order.push_back({i, m});
  }
  rng.shuffle(order);
  for (const RegionRef& r : order) {
    pool.mark_labeled(r);
    CHECK(pool.labeled_count() + pool.unlabeled_count() == pool.total_regions());
    CHECK(pool.labeled_fraction() >= prev_fraction);
    prev_fraction = pool.labeled_fraction();
  }
  CHECK(pool.labeled_fraction() == 1.0);
}

TEST_CASE("visible_target masks unlabeled regions and matches ground truth elsewhere") {
  const auto samples = generate_dataset(9, 1, 16, 16, 2, 3);
  const RegionGrid g = make_region_grid(16, 16, 4, 4);
  PoolState pool = build_pool(1, g);

  const LabelMap hidden = visible_target(samples[0], pool, g);
  for (std::int32_t v : hidden.values) CHECK(v == kIgnoreLabel);

  pool.mark_labeled({0, 0});
  pool.mark_labeled({0, 7});
  const LabelMap partial = visible_target(samples[0], pool, g);
  std::size_t visible = 0;
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      if (partial.at(y, x) == kIgnoreLabel) continue;
      ++visible;
      CHECK(partial.at(y, x) == samples[0].truth.at(y, x));
    }
  }
  CHECK(visible == 2 * 16);

  for (std::size_t m = 0; m < g.count(); ++m) {
    if (!pool.labeled({0, m})) pool.mark_labeled({0, m});
  }
  CHECK(visible_target(samples[0], pool, g) == samples[0].truth);
}

TEST_CASE("dataset files round-trip bit-exactly") {
  const auto samples = generate_dataset(21, 3, 16, 16, 2, 3);
  const DatasetHeader header{3, 16, 16, 2, 3, 21};
  const std::string path = "dataset_roundtrip.bin";
  save_dataset(samples, header, path);
  DatasetHeader loaded_header;
  const auto loaded = load_dataset(path, &loaded_header);
  CHECK(loaded_header.seed == 21);
  REQUIRE(loaded.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(loaded[i].id == samples[i].id);
    CHECK(loaded[i].input.data == samples[i].input.data);
    CHECK(loaded[i].truth == samples[i].truth);
  }
  std::remove(path.c_str());
}

TEST_CASE("pool snapshots round-trip") {
  const RegionGrid g = make_region_grid(16, 16, 8, 8);
  PoolState pool = build_pool(3, g);
  pool.mark_labeled({0, 1});
  pool.mark_labeled({2, 3});
  const std::string path = "pool_roundtrip.txt";
  save_pool(pool, path);
  const PoolState loaded = load_pool(path);
  CHECK(loaded == pool);
  std::remove(path.c_str());
}
