#include "vaelab/datasets.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

namespace vaelab {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_file_maybe_gz(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes;
  std::uint8_t buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) {
    bytes.insert(bytes.end(), buf, buf + n);
  }
  const bool read_error = n < 0;
  gzclose(f);
  if (read_error) throw FormatError("gzip read error in " + path.string());
  return bytes;
}

std::uint32_t read_u32_be(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                          const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(path.string() + ": truncated at offset " +
                      std::to_string(bytes.size()) + ", need 4 bytes at " +
                      std::to_string(offset));
  }
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const auto bytes = read_file_maybe_gz(path);
  const std::uint32_t magic = read_u32_be(bytes, 0, path);
  if (magic != kLabelsMagic) {
    throw FormatError(path.string() + ": bad label magic at offset 0, got 0x" +
                      [&] {
                        char buf[16];
                        std::snprintf(buf, sizeof(buf), "%08x", magic);
                        return std::string(buf);
                      }());
  }
  const std::uint32_t count = read_u32_be(bytes, 4, path);
  if (bytes.size() < 8 + count) {
    throw FormatError(path.string() + ": truncated label payload at offset " +
                      std::to_string(bytes.size()) + ", expected " +
                      std::to_string(8 + count) + " bytes");
  }
  std::vector<int> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) labels[i] = bytes[8 + i];
  return labels;
}

void write_u32_be(std::ofstream& out, std::uint32_t v) {
  const std::uint8_t buf[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16),
                               std::uint8_t(v >> 8), std::uint8_t(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::optional<std::filesystem::path>& labels_path) {
  const auto bytes = read_file_maybe_gz(images_path);
  const std::uint32_t magic = read_u32_be(bytes, 0, images_path);
  if (magic != kImagesMagic) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x", magic);
    throw FormatError(images_path.string() + ": bad image magic at offset 0, got 0x" +
                      std::string(buf));
  }
  const std::uint32_t count = read_u32_be(bytes, 4, images_path);
  const std::uint32_t rows = read_u32_be(bytes, 8, images_path);
  const std::uint32_t cols = read_u32_be(bytes, 12, images_path);
  if (count == 0 || rows == 0 || cols == 0) {
    throw FormatError(images_path.string() + ": empty dimension in header");
  }
  const std::size_t pixels = std::size_t(rows) * cols;
  const std::size_t expected = 16 + std::size_t(count) * pixels;
  if (bytes.size() < expected) {
    throw FormatError(images_path.string() + ": truncated image payload at offset " +
                      std::to_string(bytes.size()) + ", expected " +
                      std::to_string(expected) + " bytes");
  }

  Dataset ds;
  ds.name = images_path.filename().string();
  ds.images.resize(count, static_cast<Index>(pixels));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t* px = bytes.data() + 16 + std::size_t(i) * pixels;
    for (std::size_t p = 0; p < pixels; ++p) {
      ds.images(i, static_cast<Index>(p)) = px[p] / 255.0;
    }
  }

  if (labels_path) {
    ds.labels = load_idx_labels(*labels_path);
    if (ds.labels.size() != count) {
      throw FormatError("image/label count mismatch: " + std::to_string(count) +
                        " images vs " + std::to_string(ds.labels.size()) + " labels");
    }
  }
  return ds;
}

Dataset gen_tiles(Index n, const TileSpec& spec, Rng& rng) {
  if (spec.tile_side > spec.image_side || spec.min_tiles < 1 ||
      spec.min_tiles > spec.max_tiles) {
    throw ConfigError("gen_tiles: invalid TileSpec");
  }
  const Index side = spec.image_side;
  const Index positions = side - spec.tile_side + 1;

  Dataset ds;
  ds.name = "tiles";
  ds.images = Matrix::Zero(n, side * side);
  ds.labels.resize(n);

  std::vector<std::pair<Index, Index>> placed;
  for (Index i = 0; i < n; ++i) {
    const int k = spec.min_tiles +
                  static_cast<int>(rng.next_below(
                      static_cast<std::uint64_t>(spec.max_tiles - spec.min_tiles + 1)));
    placed.clear();
    for (int t = 0; t < k; ++t) {
      bool ok = false;
      for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
        const Index r0 = static_cast<Index>(rng.next_below(positions));
        const Index c0 = static_cast<Index>(rng.next_below(positions));
        ok = true;
        if (!spec.allow_overlap) {
          for (const auto& [pr, pc] : placed) {
            if (std::abs(pr - r0) < spec.tile_side && std::abs(pc - c0) < spec.tile_side) {
              ok = false;
              break;
            }
          }
        }
        if (ok) placed.emplace_back(r0, c0);
      }
      if (!ok) {
        throw GenerationError("gen_tiles: could not place tile " + std::to_string(t + 1) +
                              " of " + std::to_string(k) + " after 1000 attempts");
      }
    }
    for (const auto& [r0, c0] : placed) {
      for (Index dr = 0; dr < spec.tile_side; ++dr)
        for (Index dc = 0; dc < spec.tile_side; ++dc)
          ds.images(i, (r0 + dr) * side + (c0 + dc)) = 1.0;
    }
    ds.labels[i] = k;
  }
  return ds;
}

std::vector<std::vector<Index>> minibatches(Index n, Index batch_size, Rng& rng) {
  if (batch_size < 1) throw ConfigError("minibatches: batch_size must be >= 1");
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order);

  std::vector<std::vector<Index>> batches;
  batches.reserve(static_cast<std::size_t>((n + batch_size - 1) / batch_size));
  for (Index start = 0; start < n; start += batch_size) {
    const Index end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

std::vector<std::vector<Index>> minibatches(const Dataset& dataset, Index batch_size,
                                            Rng& rng) {
  return minibatches(dataset.size(), batch_size, rng);
}

void save_idx(const Dataset& dataset, const std::filesystem::path& images_path,
              const std::optional<std::filesystem::path>& labels_path) {
  const Index side = static_cast<Index>(std::lround(std::sqrt(double(dataset.pixel_count()))));
  if (side * side != dataset.pixel_count()) {
    throw DimensionError("save_idx: pixel count is not a square");
  }
  std::ofstream out(images_path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + images_path.string());
  write_u32_be(out, kImagesMagic);
  write_u32_be(out, static_cast<std::uint32_t>(dataset.size()));
  write_u32_be(out, static_cast<std::uint32_t>(side));
  write_u32_be(out, static_cast<std::uint32_t>(side));
  for (Index i = 0; i < dataset.size(); ++i) {
    for (Index p = 0; p < dataset.pixel_count(); ++p) {
      const double v = std::clamp(dataset.images(i, p), 0.0, 1.0);
      const std::uint8_t byte = static_cast<std::uint8_t>(std::lround(v * 255.0));
      out.write(reinterpret_cast<const char*>(&byte), 1);
    }
  }
  if (labels_path) {
    if (dataset.labels.size() != static_cast<std::size_t>(dataset.size())) {
      throw DimensionError("save_idx: dataset has no aligned labels");
    }
    std::ofstream lout(*labels_path, std::ios::binary);
    if (!lout) throw FormatError("cannot write " + labels_path->string());
    write_u32_be(lout, kLabelsMagic);
    write_u32_be(lout, static_cast<std::uint32_t>(dataset.size()));
    for (int label : dataset.labels) {
      const std::uint8_t byte = static_cast<std::uint8_t>(label);
      lout.write(reinterpret_cast<const char*>(&byte), 1);
    }
  }
}

}  // namespace vaelab
