#pragma once

#include "qregion/binary_io.hpp"
#include "qregion/grid.hpp"
#include "qregion/image.hpp"

#include <filesystem>

namespace qregion {

class ImageTooSmallError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExtractOptions {
  int stride = 32;
  int channels_out = 16;
  /// Per-channel standardisation across grid cells (mean 0, std 1).
  bool zscore = true;
};

/// Index of each built-in patch statistic in the output channels. Channels
/// from kBandEnergy onwards hold log band energies of the patch spectrum.
enum BuiltinChannel : int {
  kMeanR = 0,
  kMeanG,
  kMeanB,
  kStdR,
  kStdG,
  kStdB,
  kGradientMean,
  kLaplacianEnergy,
  kBandEnergy,
};

/// Deterministic patch statistics on a stride x stride lattice. Output is
/// floor(height/stride) x floor(width/stride) x channels_out.
FeatureMatrix extract_builtin(const ImageBuffer& image, const ExtractOptions& options = {});

/// FMX1: magic, u32 rows/cols/channels (little endian), then float32 values
/// row-major, channel-fastest.
void export_feature_matrix(const FeatureMatrix& features, const std::filesystem::path& path);
FeatureMatrix import_feature_matrix(const std::filesystem::path& path);

struct HeuristicTerms {
  double gradient_mean = 0;   // mean forward-difference gradient magnitude of luma
  double midband_ratio = 0;   // AC energy fraction at radial 0.05..0.25 cycles/pixel
};

HeuristicTerms heuristic_terms(const ImageBuffer& image);

/// Stand-in quality predictor on [1, 5]: 1 + 4 (1 - exp(-10 g (0.5 + r))).
double baseline_heuristic_score(const ImageBuffer& image);

}  // namespace qregion
