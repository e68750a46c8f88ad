#include "equal/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "equal/rng.hpp"

namespace equal {

namespace {

void paint_rect(LabelMap& map, long cy, long cx, long half_h, long half_w,
                std::int32_t cls) {
  const long h = static_cast<long>(map.height);
  const long w = static_cast<long>(map.width);
  const long y0 = std::max(0L, cy - half_h);
  const long y1 = std::min(h - 1, cy + half_h);
  const long x0 = std::max(0L, cx - half_w);
  const long x1 = std::min(w - 1, cx + half_w);
  for (long y = y0; y <= y1; ++y) {
    for (long x = x0; x <= x1; ++x) {
      map.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = cls;
    }
  }
}

void paint_disc(LabelMap& map, long cy, long cx, long radius, std::int32_t cls) {
  const long h = static_cast<long>(map.height);
  const long w = static_cast<long>(map.width);
  const long r2 = radius * radius;
  for (long y = std::max(0L, cy - radius); y <= std::min(h - 1, cy + radius); ++y) {
    for (long x = std::max(0L, cx - radius); x <= std::min(w - 1, cx + radius); ++x) {
      const long dy = y - cy;
      const long dx = x - cx;
      if (dy * dy + dx * dx <= r2) {
        map.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = cls;
      }
    }
  }
}

// 3x3 box blur with zero padding, normalized by 9.
std::vector<double> box_blur(const std::vector<double>& plane, std::size_t h,
                             std::size_t w) {
  std::vector<double> out(h * w, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double sum = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const long yy = static_cast<long>(y) + dy;
          const long xx = static_cast<long>(x) + dx;
          if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) ||
              xx >= static_cast<long>(w)) {
            continue;
          }
          sum += plane[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)];
        }
      }
      out[y * w + x] = sum / 9.0;
    }
  }
  return out;
}

}  // namespace

std::vector<Sample> generate_dataset(std::uint64_t seed, std::size_t count,
                                     std::size_t height, std::size_t width,
                                     std::size_t in_channels, std::size_t num_classes) {
  if (height < 16 || width < 16) {
    throw std::invalid_argument("generate_dataset: dimensions must be >= 16");
  }
  if (num_classes < 2 || num_classes > static_cast<std::size_t>(kIgnoreLabel)) {
    throw std::invalid_argument("generate_dataset: num_classes must be in [2, " +
                                std::to_string(kIgnoreLabel) + "]");
  }
  if (in_channels == 0) {
    throw std::invalid_argument("generate_dataset: need >= 1 input channel");
  }

  const double noise_sigma = 0.3;
  std::vector<Sample> samples;
  samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, 0xDA7A, i));

    LabelMap truth(height, width, 0);
    const std::size_t shapes = 2 + rng.uniform_index(5);  // 2..6
    const long max_half = std::max(2L, static_cast<long>(std::min(height, width) / 4));
    for (std::size_t s = 0; s < shapes; ++s) {
      const auto cls = static_cast<std::int32_t>(1 + rng.uniform_index(num_classes - 1));
      const long cy = static_cast<long>(rng.uniform_index(height));
      const long cx = static_cast<long>(rng.uniform_index(width));
      if (rng.bernoulli(0.5)) {
        const long radius = 2 + static_cast<long>(rng.uniform_index(
                                    static_cast<std::size_t>(max_half - 1)));
        paint_disc(truth, cy, cx, radius, cls);
      } else {
        const long half_h = 2 + static_cast<long>(rng.uniform_index(
                                    static_cast<std::size_t>(max_half - 1)));
        const long half_w = 2 + static_cast<long>(rng.uniform_index(
                                    static_cast<std::size_t>(max_half - 1)));
        paint_rect(truth, cy, cx, half_h, half_w, cls);
      }
    }

    Tensor input({in_channels, height, width});
    const std::size_t hw = height * width;
    for (std::size_t c = 0; c < in_channels; ++c) {
      double* plane = input.data.data() + c * hw;
      if (c < num_classes) {
        std::vector<double> onehot(hw, 0.0);
        for (std::size_t p = 0; p < hw; ++p) {
          if (truth.values[p] == static_cast<std::int32_t>(c)) onehot[p] = 1.0;
        }
        const std::vector<double> blurred = box_blur(onehot, height, width);
        std::copy(blurred.begin(), blurred.end(), plane);
      }
      for (std::size_t p = 0; p < hw; ++p) plane[p] += rng.normal(0.0, noise_sigma);
    }

    samples.push_back({std::move(input), std::move(truth), static_cast<std::int64_t>(i)});
  }
  return samples;
}

RegionGrid::Rect RegionGrid::rect(std::size_t region) const {
  const std::size_t row = region / cols();
  const std::size_t col = region % cols();
  return Rect{row * region_height, col * region_width, region_height, region_width};
}

RegionGrid make_region_grid(std::size_t image_height, std::size_t image_width,
                            std::size_t region_height, std::size_t region_width) {
  if (region_height == 0 || region_width == 0 || image_height % region_height != 0 ||
      image_width % region_width != 0) {
    std::string valid_h, valid_w;
    for (std::size_t d = 1; d <= image_height; ++d) {
      if (image_height % d == 0) valid_h += (valid_h.empty() ? "" : ",") + std::to_string(d);
    }
    for (std::size_t d = 1; d <= image_width; ++d) {
      if (image_width % d == 0) valid_w += (valid_w.empty() ? "" : ",") + std::to_string(d);
    }
    throw std::invalid_argument(
        "region size " + std::to_string(region_height) + "x" + std::to_string(region_width) +
        " does not tile a " + std::to_string(image_height) + "x" +
        std::to_string(image_width) + " image; valid heights: {" + valid_h +
        "}, valid widths: {" + valid_w + "}");
  }
  return RegionGrid{image_height, image_width, region_height, region_width};
}

PoolState::PoolState(std::size_t image_count, std::size_t regions_per_image)
    : images_(image_count),
      regions_per_image_(regions_per_image),
      statuses_(image_count * regions_per_image, 0) {}

std::size_t PoolState::index(RegionRef r) const {
  if (r.image < 0 || static_cast<std::size_t>(r.image) >= images_ ||
      r.region >= regions_per_image_) {
    throw std::out_of_range("pool: region (" + std::to_string(r.image) + ", " +
                            std::to_string(r.region) + ") out of range");
  }
  return static_cast<std::size_t>(r.image) * regions_per_image_ + r.region;
}

void PoolState::mark_labeled(RegionRef r) {
  const std::size_t i = index(r);
  if (statuses_[i]) {
    throw std::invalid_argument("pool: region (" + std::to_string(r.image) + ", " +
                                std::to_string(r.region) + ") is already labeled");
  }
  statuses_[i] = 1;
  ++labeled_count_;
  verify_counts();
}

void PoolState::verify_counts() const {
  std::size_t n = 0;
  for (std::uint8_t s : statuses_) n += s;
  if (n != labeled_count_) {
    throw std::logic_error("pool: labeled count out of sync");
  }
}

double PoolState::labeled_fraction() const {
  if (total_regions() == 0) return 0.0;
  return static_cast<double>(labeled_count_) / static_cast<double>(total_regions());
}

std::size_t PoolState::image_labeled_count(std::int64_t image) const {
  std::size_t n = 0;
  for (std::size_t m = 0; m < regions_per_image_; ++m) {
    n += statuses_[index({image, m})];
  }
  return n;
}

double PoolState::image_labeled_fraction(std::int64_t image) const {
  if (regions_per_image_ == 0) return 0.0;
  return static_cast<double>(image_labeled_count(image)) /
         static_cast<double>(regions_per_image_);
}

PoolState build_pool(std::size_t image_count, const RegionGrid& grid) {
  return PoolState(image_count, grid.count());
}

LabelMap visible_target(const Sample& sample, const PoolState& pool,
                        const RegionGrid& grid) {
  LabelMap out(sample.truth.height, sample.truth.width, kIgnoreLabel);
  for (std::size_t m = 0; m < grid.count(); ++m) {
    if (!pool.labeled({sample.id, m})) continue;
    const RegionGrid::Rect r = grid.rect(m);
    for (std::size_t y = r.y0; y < r.y0 + r.height; ++y) {
      for (std::size_t x = r.x0; x < r.x0 + r.width; ++x) {
        out.at(y, x) = sample.truth.at(y, x);
      }
    }
  }
  return out;
}

namespace {
constexpr char kDatasetMagic[8] = {'E', 'Q', 'A', 'L', 'D', 'A', 'T', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw std::runtime_error("dataset: truncated file");
  return v;
}
}  // namespace

void save_dataset(const std::vector<Sample>& samples, const DatasetHeader& header,
                  const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open dataset for writing: " + path);
  os.write(kDatasetMagic, sizeof(kDatasetMagic));
  write_u64(os, header.count);
  write_u64(os, header.height);
  write_u64(os, header.width);
  write_u64(os, header.in_channels);
  write_u64(os, header.num_classes);
  write_u64(os, header.seed);
  for (const Sample& s : samples) {
    write_u64(os, static_cast<std::uint64_t>(s.id));
    os.write(reinterpret_cast<const char*>(s.input.data.data()),
             static_cast<std::streamsize>(s.input.numel() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(s.truth.values.data()),
             static_cast<std::streamsize>(s.truth.values.size() * sizeof(std::int32_t)));
  }
  if (!os) throw std::runtime_error("dataset write failed: " + path);
}

std::vector<Sample> load_dataset(const std::string& path, DatasetHeader* header) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open dataset: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::string(magic, 8) != std::string(kDatasetMagic, 8)) {
    throw std::runtime_error("not a dataset file: " + path);
  }
  DatasetHeader h;
  h.count = read_u64(is);
  h.height = read_u64(is);
  h.width = read_u64(is);
  h.in_channels = read_u64(is);
  h.num_classes = read_u64(is);
  h.seed = read_u64(is);
  if (header) *header = h;

  std::vector<Sample> samples;
  samples.reserve(h.count);
  for (std::uint64_t i = 0; i < h.count; ++i) {
    Sample s;
    s.id = static_cast<std::int64_t>(read_u64(is));
    s.input = Tensor({h.in_channels, h.height, h.width});
    is.read(reinterpret_cast<char*>(s.input.data.data()),
            static_cast<std::streamsize>(s.input.numel() * sizeof(double)));
    s.truth = LabelMap(h.height, h.width);
    is.read(reinterpret_cast<char*>(s.truth.values.data()),
            static_cast<std::streamsize>(s.truth.values.size() * sizeof(std::int32_t)));
    if (!is) throw std::runtime_error("dataset: truncated sample data");
    samples.push_back(std::move(s));
  }
  return samples;
}

void save_pool(const PoolState& pool, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open pool file for writing: " + path);
  os << "images=" << pool.image_count() << " regions=" << pool.regions_per_image()
     << "\n";
  for (std::size_t i = 0; i < pool.image_count(); ++i) {
    for (std::size_t m = 0; m < pool.regions_per_image(); ++m) {
      const RegionRef r{static_cast<std::int64_t>(i), m};
      os << i << "," << m << "," << (pool.labeled(r) ? 1 : 0) << "\n";
    }
  }
  if (!os) throw std::runtime_error("pool write failed: " + path);
}

PoolState load_pool(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open pool file: " + path);
  std::string head;
  std::getline(is, head);
  std::size_t images = 0, regions = 0;
  if (std::sscanf(head.c_str(), "images=%zu regions=%zu", &images, &regions) != 2) {
    throw std::runtime_error("pool file: bad header '" + head + "'");
  }
  PoolState pool(images, regions);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    long long image = 0;
    std::size_t region = 0;
    int status = 0;
    if (std::sscanf(line.c_str(), "%lld,%zu,%d", &image, &region, &status) != 3 ||
        (status != 0 && status != 1)) {
      throw std::runtime_error("pool file line " + std::to_string(line_no) +
                               ": bad record '" + line + "'");
    }
    if (status == 1) pool.mark_labeled({image, region});
  }
  return pool;
}

}  // namespace equal
