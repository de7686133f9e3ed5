#pragma once

#include "qregion/binary_io.hpp"
#include "qregion/grid.hpp"
#include "qregion/image.hpp"
#include "qregion/measures.hpp"

#include <filesystem>
#include <span>

namespace qregion {

class UnsupportedFormatError : public FormatError {
 public:
  using FormatError::FormatError;
};

class CorruptImageError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// PNG, binary or ASCII PGM/PPM; values scaled to [0, 1].
ImageBuffer decode_image(const std::filesystem::path& path);

/// 8-bit encode chosen by extension: .png, .pgm (grey) or .ppm (colour).
void encode_image(const ImageBuffer& image, const std::filesystem::path& path);

/// SMP1 or any decodable greyscale/colour image (luma, scaled to [0, 1]).
MeasureMap load_measure_map(const std::filesystem::path& path, MeasureKind kind);

enum class MaskPolarity {
  black_out_selected,  // selected blocks rendered black
  show_selected,       // everything but the selected blocks rendered black
};

/// Min-max scaled 8-bit greyscale; a constant map renders as mid grey (128).
void render_heatmap(const MeasureMap& map, const std::filesystem::path& path);

/// Per-block scores painted as constant tiles of a grid_rows x grid_cols
/// tiling of a height x width canvas, min-max scaled.
void render_block_scores(std::span<const double> block_scores, int grid_rows, int grid_cols, int height,
                         int width, const std::filesystem::path& path);

/// The image with blocks blacked out according to `polarity`.
ImageBuffer mask_render(const ImageBuffer& image, const BlockSet& selected, int grid_rows, int grid_cols,
                        MaskPolarity polarity);

}  // namespace qregion
