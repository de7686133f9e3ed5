#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qregion {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// rows x cols grid of feature vectors, channel-fastest. Row (r * cols + c) of
/// `data` is the feature vector at grid position (r, c).
struct FeatureMatrix {
  using Storage = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  int rows = 0;
  int cols = 0;
  int channels = 0;
  Storage data;

  FeatureMatrix() = default;
  FeatureMatrix(int rows, int cols, int channels);
  FeatureMatrix(int rows, int cols, int channels, Storage values);

  int positions() const { return rows * cols; }
  auto at(int r, int c) { return data.row(static_cast<Eigen::Index>(r) * cols + c); }
  auto at(int r, int c) const { return data.row(static_cast<Eigen::Index>(r) * cols + c); }

  /// Throws DimensionError on a shape mismatch or std::domain_error on NaN/inf.
  void validate() const;

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.channels == b.channels && a.data == b.data;
  }
};

/// Half-open rectangle [row_begin, row_end) x [col_begin, col_end).
struct Extent {
  int row_begin = 0;
  int row_end = 0;
  int col_begin = 0;
  int col_end = 0;

  int height() const { return row_end - row_begin; }
  int width() const { return col_end - col_begin; }
  long area() const { return static_cast<long>(height()) * width(); }
  bool contains(int r, int c) const {
    return r >= row_begin && r < row_end && c >= col_begin && c < col_end;
  }
  friend bool operator==(const Extent&, const Extent&) = default;
};

using PixelRect = Extent;

/// Fixed-width bit flags over up to 64 blocks.
class BlockSet {
 public:
  static constexpr int kMaxBlocks = 64;

  BlockSet() = default;
  explicit BlockSet(int block_count, std::uint64_t bits = 0);
  static BlockSet full(int block_count);
  static BlockSet of(int block_count, std::initializer_list<int> blocks);

  int block_count() const { return block_count_; }
  std::uint64_t bits() const { return bits_; }
  int size() const;
  bool empty() const { return bits_ == 0; }
  bool contains(int block) const { return (bits_ >> block) & 1U; }

  BlockSet& insert(int block);
  BlockSet& erase(int block);
  BlockSet complement() const;
  std::vector<int> indices() const;

  BlockSet operator|(const BlockSet& other) const;
  BlockSet operator&(const BlockSet& other) const;
  friend bool operator==(const BlockSet&, const BlockSet&) = default;

 private:
  std::uint64_t all_ones() const;
  void check_index(int block) const;

  int block_count_ = 0;
  std::uint64_t bits_ = 0;
};

/// Tiling of a rows x cols index space into grid_rows x grid_cols blocks,
/// indexed row-major. Trailing blocks absorb the remainder when the sizes are
/// not divisible.
class BlockGrid {
 public:
  BlockGrid() = default;

  int grid_rows() const { return grid_rows_; }
  int grid_cols() const { return grid_cols_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int block_count() const { return grid_rows_ * grid_cols_; }
  const std::vector<Extent>& blocks() const { return blocks_; }
  const Extent& block(int index) const { return blocks_.at(index); }
  int block_row(int index) const { return index / grid_cols_; }
  int block_col(int index) const { return index % grid_cols_; }
  /// Block index containing position (r, c).
  int block_of(int r, int c) const;

  friend BlockGrid partition_grid(int rows, int cols, int grid_rows, int grid_cols);

 private:
  int rows_ = 0;
  int cols_ = 0;
  int grid_rows_ = 0;
  int grid_cols_ = 0;
  std::vector<Extent> blocks_;
  std::vector<int> row_band_;
  std::vector<int> col_band_;
};

/// Ceil-division tiling. Throws DimensionError when the grid exceeds the
/// matrix or when the tiling would leave a block empty.
BlockGrid partition_grid(int rows, int cols, int grid_rows = 3, int grid_cols = 4);

/// Every subset with cardinality in [n_min, n_max], ascending cardinality and
/// then ascending bit pattern. Throws std::out_of_range when n_max >= block_count.
std::vector<BlockSet> enumerate_block_subsets(int block_count, int n_min, int n_max);

/// Number of n-subsets of a b-set; saturates at UINT64_MAX.
std::uint64_t binomial(int b, int n);

using FeatureMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// True at every feature position covered by a block in `set`.
FeatureMask block_set_to_feature_mask(const BlockSet& set, const BlockGrid& grid);

/// The same ceil-division tiling applied directly to image dimensions.
std::vector<PixelRect> block_set_to_pixel_regions(const BlockSet& set, const BlockGrid& grid,
                                                  int image_height, int image_width);

}  // namespace qregion
