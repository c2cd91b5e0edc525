#pragma once

#include "vaelab/rng.hpp"
#include "vaelab/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vaelab {

struct Dataset {
  Matrix images;            // n x pixels, values in [0, 1], pixels row-major
  std::vector<int> labels;  // empty when unlabeled, else one per image
  std::string name;

  Index size() const { return images.rows(); }
  Index pixel_count() const { return images.cols(); }
};

struct TileSpec {
  Index image_side = 28;
  Index tile_side = 4;
  int min_tiles = 1;
  int max_tiles = 3;
  bool allow_overlap = false;
};

// MNIST IDX reader. Accepts plain files and gzip-compressed ones (any
// path readable by zlib's gzopen, .gz or not). Pixels are scaled to
// [0, 1] by /255. With a labels path the label count must match the
// image count.
Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::optional<std::filesystem::path>& labels_path = {});

// Synthetic counting problem: k ~ Uniform{min_tiles..max_tiles} solid
// white tile_side x tile_side squares on black, pairwise disjoint
// (unless allow_overlap), top-left corners uniform over the valid range.
// label = k. Deterministic per rng state.
Dataset gen_tiles(Index n, const TileSpec& spec, Rng& rng);

// One epoch worth of minibatch index slices: a fresh uniform shuffle,
// cut into batch_size pieces, final short batch kept.
std::vector<std::vector<Index>> minibatches(Index n, Index batch_size, Rng& rng);
std::vector<std::vector<Index>> minibatches(const Dataset& dataset, Index batch_size,
                                            Rng& rng);

// Writes the dataset back out in IDX layout (pixel = round(value*255));
// used to build fixtures.
void save_idx(const Dataset& dataset, const std::filesystem::path& images_path,
              const std::optional<std::filesystem::path>& labels_path = {});

}  // namespace vaelab
