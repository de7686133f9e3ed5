#include "qregion/grid.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace qregion {

FeatureMatrix::FeatureMatrix(int rows, int cols, int channels)
    : FeatureMatrix(rows, cols, channels,
                    Storage::Zero(static_cast<Eigen::Index>(rows) * cols, channels)) {}

FeatureMatrix::FeatureMatrix(int rows, int cols, int channels, Storage values)
    : rows(rows), cols(cols), channels(channels), data(std::move(values)) {
  validate();
}

void FeatureMatrix::validate() const {
  if (rows <= 0 || cols <= 0 || channels <= 0)
    throw DimensionError("feature matrix dimensions must be positive");
  if (data.rows() != static_cast<Eigen::Index>(rows) * cols || data.cols() != channels)
    throw DimensionError("feature matrix data length does not match rows x cols x channels");
  if (!data.allFinite()) throw std::domain_error("feature matrix contains non-finite values");
}

// BlockSet

BlockSet::BlockSet(int block_count, std::uint64_t bits) : block_count_(block_count), bits_(bits) {
  if (block_count < 0 || block_count > kMaxBlocks)
    throw std::out_of_range("block count must be in [0, 64]");
  if ((bits & ~all_ones()) != 0) throw std::out_of_range("bit pattern exceeds block count");
}

BlockSet BlockSet::full(int block_count) {
  BlockSet s(block_count);
  s.bits_ = s.all_ones();
  return s;
}

BlockSet BlockSet::of(int block_count, std::initializer_list<int> blocks) {
  BlockSet s(block_count);
  for (int b : blocks) s.insert(b);
  return s;
}

std::uint64_t BlockSet::all_ones() const {
  return block_count_ == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << block_count_) - 1);
}

void BlockSet::check_index(int block) const {
  if (block < 0 || block >= block_count_)
    throw std::out_of_range("block index " + std::to_string(block) + " outside [0, " +
                            std::to_string(block_count_) + ")");
}

int BlockSet::size() const { return std::popcount(bits_); }

BlockSet& BlockSet::insert(int block) {
  check_index(block);
  bits_ |= std::uint64_t{1} << block;
  return *this;
}

BlockSet& BlockSet::erase(int block) {
  check_index(block);
  bits_ &= ~(std::uint64_t{1} << block);
  return *this;
}

BlockSet BlockSet::complement() const { return BlockSet(block_count_, ~bits_ & all_ones()); }

std::vector<int> BlockSet::indices() const {
  std::vector<int> out;
  for (std::uint64_t b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b));
  return out;
}

BlockSet BlockSet::operator|(const BlockSet& other) const {
  if (other.block_count_ != block_count_) throw std::invalid_argument("block count mismatch");
  return BlockSet(block_count_, bits_ | other.bits_);
}

BlockSet BlockSet::operator&(const BlockSet& other) const {
  if (other.block_count_ != block_count_) throw std::invalid_argument("block count mismatch");
  return BlockSet(block_count_, bits_ & other.bits_);
}

// BlockGrid

namespace {

// Band boundaries for splitting `size` into `parts` with ceil-division.
std::vector<int> band_edges(int size, int parts) {
  const int step = (size + parts - 1) / parts;
  std::vector<int> edges(parts + 1);
  for (int i = 0; i <= parts; ++i) edges[i] = std::min(i * step, size);
  return edges;
}

}  // namespace

BlockGrid partition_grid(int rows, int cols, int grid_rows, int grid_cols) {
  if (rows <= 0 || cols <= 0 || grid_rows <= 0 || grid_cols <= 0)
    throw DimensionError("grid and matrix dimensions must be positive");
  if (grid_rows > rows || grid_cols > cols)
    throw DimensionError("grid " + std::to_string(grid_rows) + "x" + std::to_string(grid_cols) +
                         " exceeds matrix " + std::to_string(rows) + "x" + std::to_string(cols));
  if (grid_rows * grid_cols > BlockSet::kMaxBlocks)
    throw DimensionError("grid has more than 64 blocks");

  const auto re = band_edges(rows, grid_rows);
  const auto ce = band_edges(cols, grid_cols);
  // e.g. 9 rows over 4 bands gives 3,3,3,0
  if (re[grid_rows - 1] >= rows || ce[grid_cols - 1] >= cols)
    throw DimensionError("ceil-division tiling of " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " leaves an empty block");

  BlockGrid g;
  g.rows_ = rows;
  g.cols_ = cols;
  g.grid_rows_ = grid_rows;
  g.grid_cols_ = grid_cols;
  for (int i = 0; i < grid_rows; ++i)
    for (int j = 0; j < grid_cols; ++j) g.blocks_.push_back({re[i], re[i + 1], ce[j], ce[j + 1]});
  g.row_band_.resize(rows);
  g.col_band_.resize(cols);
  for (int i = 0; i < grid_rows; ++i)
    for (int r = re[i]; r < re[i + 1]; ++r) g.row_band_[r] = i;
  for (int j = 0; j < grid_cols; ++j)
    for (int c = ce[j]; c < ce[j + 1]; ++c) g.col_band_[c] = j;
  return g;
}

int BlockGrid::block_of(int r, int c) const {
  return row_band_.at(r) * grid_cols_ + col_band_.at(c);
}

std::uint64_t binomial(int b, int n) {
  if (n < 0 || n > b) return 0;
  n = std::min(n, b - n);
  unsigned __int128 acc = 1;
  for (int i = 1; i <= n; ++i) {
    acc = acc * static_cast<unsigned>(b - n + i) / static_cast<unsigned>(i);
    if (acc > std::numeric_limits<std::uint64_t>::max())
      return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(acc);
}

std::vector<BlockSet> enumerate_block_subsets(int block_count, int n_min, int n_max) {
  if (block_count < 2 || block_count > BlockSet::kMaxBlocks)
    throw std::out_of_range("block count must be in [2, 64]");
  if (n_min < 1 || n_min > n_max)
    throw std::out_of_range("cardinality range must satisfy 1 <= n_min <= n_max");
  if (n_max >= block_count)
    throw std::out_of_range("cannot mask every block: n_max must be below the block count");

  std::vector<BlockSet> out;
  const std::uint64_t limit = block_count == 64 ? 0 : (std::uint64_t{1} << block_count);
  for (int n = n_min; n <= n_max; ++n) {
    // Gosper's hack walks the n-bit patterns in ascending numeric order.
    std::uint64_t v = (std::uint64_t{1} << n) - 1;
    while (true) {
      out.emplace_back(block_count, v);
      const std::uint64_t t = v | (v - 1);
      const std::uint64_t next = (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
      if (next <= v || (limit != 0 && next >= limit)) break;
      v = next;
    }
  }
  return out;
}

FeatureMask block_set_to_feature_mask(const BlockSet& set, const BlockGrid& grid) {
  if (set.block_count() != grid.block_count())
    throw DimensionError("block set and grid disagree on block count");
  FeatureMask mask = FeatureMask::Constant(grid.rows(), grid.cols(), false);
  for (int b : set.indices()) {
    const Extent& e = grid.block(b);
    mask.block(e.row_begin, e.col_begin, e.height(), e.width()).setConstant(true);
  }
  return mask;
}

std::vector<PixelRect> block_set_to_pixel_regions(const BlockSet& set, const BlockGrid& grid,
                                                  int image_height, int image_width) {
  if (set.block_count() != grid.block_count())
    throw DimensionError("block set and grid disagree on block count");
  const BlockGrid pixels = partition_grid(image_height, image_width, grid.grid_rows(), grid.grid_cols());
  std::vector<PixelRect> out;
  for (int b : set.indices()) out.push_back(pixels.block(b));
  return out;
}

}  // namespace qregion
