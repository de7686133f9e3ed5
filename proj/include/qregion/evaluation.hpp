#pragma once

#include "qregion/grid.hpp"
#include "qregion/image.hpp"
#include "qregion/measures.hpp"
#include "qregion/stats.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qregion {

inline constexpr int kMinThreshold = 1;
inline constexpr int kMaxThreshold = 5;

struct MatchOutcome {
  int overlap = 0;
  bool matched = false;
};

/// Indices of the larger half of `values`; ties prefer the lower index.
BlockSet top_half(std::span<const double> values);

/// Overlap between the important set and the top half of regions by measure;
/// matched when overlap > threshold.
MatchOutcome match_image(const BlockSet& important, std::span<const double> measure_region_means,
                         int threshold);

struct MatchResult {
  std::string image;
  MeasureKind measure = MeasureKind::averaged;
  int overlap = 0;
  std::array<bool, kMaxThreshold> matched{};  // index T-1

  bool matched_at(int threshold) const { return matched.at(threshold - 1); }
};

MatchResult match_all_thresholds(std::string image, MeasureKind measure, const BlockSet& important,
                                 std::span<const double> measure_region_means);

/// Percentage of the results for `measure` matched at `threshold`.
double matching_degree(std::span<const MatchResult> results, MeasureKind measure, int threshold);

/// Copy of the image with every rectangle zeroed in all channels.
ImageBuffer zero_regions(const ImageBuffer& image, std::span<const PixelRect> regions);

struct RegionSplit {
  BlockSet important;
  BlockSet trivial;
};

using ImagePredictor = std::function<double(const ImageBuffer&)>;

struct AblationResult {
  double plcc_pred_vs_zeroed_important = 0;
  double plcc_pred_vs_zeroed_trivial = 0;
  std::optional<double> plcc_mos_vs_zeroed_important;
  std::optional<double> plcc_mos_vs_zeroed_trivial;

  std::vector<double> baseline;
  std::vector<double> zeroed_important;
  std::vector<double> zeroed_trivial;

  /// Mean absolute change of the prediction when zeroing each half.
  double mean_abs_change_important() const;
  double mean_abs_change_trivial() const;
};

/// Scores each image as-is and with its important or trivial regions zeroed.
/// Splits index blocks of a grid_rows x grid_cols tiling of each image.
AblationResult ablation_study(std::span<const ImageBuffer> images, const ImagePredictor& predictor,
                              std::span<const RegionSplit> splits, int grid_rows, int grid_cols,
                              const std::optional<std::vector<double>>& mos = std::nullopt);

/// `image,measure,overlap,matched@1,...,matched@5`
void write_match_report(std::ostream& os, std::span<const MatchResult> results);
/// One row per measure, one column per threshold, percentages.
void write_matching_degree_table(std::ostream& os, std::span<const MatchResult> results,
                                 std::span<const int> thresholds);
/// `metric,value` rows for the four PLCCs, preceded by `# key=value` metadata.
void write_ablation_report(std::ostream& os, const AblationResult& result,
                           std::span<const std::pair<std::string, std::string>> metadata);

}  // namespace qregion
