#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "equal/labels.hpp"
#include "equal/tensor.hpp"

namespace equal {

// One synthetic scene: input channels plus a fully labeled ground-truth map.
struct Sample {
  Tensor input;   // [Cin,H,W]
  LabelMap truth; // values in {0 .. C-1}, never kIgnoreLabel
  std::int64_t id = 0;
};

// Procedural scenes: background class 0 with 2..6 occluding rectangles and
// discs of classes 1..C-1. Inputs are the one-hot class planes blurred by a
// 3x3 box filter plus N(0, 0.3) noise; channels beyond C carry noise only.
std::vector<Sample> generate_dataset(std::uint64_t seed, std::size_t count,
                                     std::size_t height, std::size_t width,
                                     std::size_t in_channels, std::size_t num_classes);

// Fixed-size rectangular tiling of an image. Regions are indexed row-major.
struct RegionGrid {
  std::size_t image_height = 0;
  std::size_t image_width = 0;
  std::size_t region_height = 0;
  std::size_t region_width = 0;

  std::size_t rows() const { return image_height / region_height; }
  std::size_t cols() const { return image_width / region_width; }
  std::size_t count() const { return rows() * cols(); }  // M

  struct Rect {
    std::size_t y0, x0, height, width;
  };
  Rect rect(std::size_t region) const;
};

// Throws when the region extents do not tile the image, naming valid sizes.
RegionGrid make_region_grid(std::size_t image_height, std::size_t image_width,
                            std::size_t region_height, std::size_t region_width);

struct RegionRef {
  std::int64_t image = 0;
  std::size_t region = 0;
  auto operator<=>(const RegionRef&) const = default;
};

// Label status of every region of every image. A labeled region never
// reverts; counts are revalidated after each mutation.
class PoolState {
 public:
  PoolState() = default;
  PoolState(std::size_t image_count, std::size_t regions_per_image);

  std::size_t image_count() const { return images_; }
  std::size_t regions_per_image() const { return regions_per_image_; }
  std::size_t total_regions() const { return images_ * regions_per_image_; }
  std::size_t labeled_count() const { return labeled_count_; }
  std::size_t unlabeled_count() const { return total_regions() - labeled_count_; }

  bool labeled(RegionRef r) const { return statuses_[index(r)] != 0; }

  // The oracle reveal: marks the region labeled; rejects double labeling.
  void mark_labeled(RegionRef r);

  double labeled_fraction() const;
  double image_labeled_fraction(std::int64_t image) const;
  std::size_t image_labeled_count(std::int64_t image) const;

  bool operator==(const PoolState& other) const = default;

 private:
  std::size_t index(RegionRef r) const;
  void verify_counts() const;

  std::size_t images_ = 0;
  std::size_t regions_per_image_ = 0;
  std::vector<std::uint8_t> statuses_;
  std::size_t labeled_count_ = 0;
};

PoolState build_pool(std::size_t image_count, const RegionGrid& grid);

// Ground truth where the pool says labeled, kIgnoreLabel everywhere else.
LabelMap visible_target(const Sample& sample, const PoolState& pool,
                        const RegionGrid& grid);

struct DatasetHeader {
  std::uint64_t count = 0;
  std::uint64_t height = 0;
  std::uint64_t width = 0;
  std::uint64_t in_channels = 0;
  std::uint64_t num_classes = 0;
  std::uint64_t seed = 0;
};

void save_dataset(const std::vector<Sample>& samples, const DatasetHeader& header,
                  const std::string& path);
std::vector<Sample> load_dataset(const std::string& path,
                                 DatasetHeader* header = nullptr);

void save_pool(const PoolState& pool, const std::string& path);
PoolState load_pool(const std::string& path);

}  // namespace equal
