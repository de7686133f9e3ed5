#include "qregion/evaluation.hpp"

#include "qregion/format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace qregion {

BlockSet top_half(std::span<const double> values) {
  const int n = static_cast<int>(values.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] > values[b]; });
  BlockSet top(n);
  for (int k = 0; k < n / 2; ++k) top.insert(order[k]);
  return top;
}

MatchOutcome match_image(const BlockSet& important, std::span<const double> measure_region_means,
                         int threshold) {
  const int n = static_cast<int>(measure_region_means.size());
  if (n < 2 || n % 2 != 0 || important.block_count() != n || important.size() != n / 2)
    throw std::invalid_argument("match_image needs an even region count and an even important/trivial split");
  if (threshold < kMinThreshold || threshold > kMaxThreshold)
    throw std::out_of_range("matching threshold must be in [1, 5]");
  const BlockSet top = top_half(measure_region_means);
  const int overlap = (important & top).size();
  return {overlap, overlap > threshold};
}

MatchResult match_all_thresholds(std::string image, MeasureKind measure, const BlockSet& important,
                                 std::span<const double> measure_region_means) {
  MatchResult r;
  r.image = std::move(image);
  r.measure = measure;
  for (int t = kMinThreshold; t <= kMaxThreshold; ++t) {
    const MatchOutcome o = match_image(important, measure_region_means, t);
    r.overlap = o.overlap;
    r.matched[t - 1] = o.matched;
  }
  return r;
}

double matching_degree(std::span<const MatchResult> results, MeasureKind measure, int threshold) {
  if (threshold < kMinThreshold || threshold > kMaxThreshold)
    throw std::out_of_range("matching threshold must be in [1, 5]");
  std::size_t total = 0, matched = 0;
  for (const MatchResult& r : results) {
    if (r.measure != measure) continue;
    ++total;
    matched += r.matched_at(threshold) ? 1 : 0;
  }
  if (total == 0) throw std::invalid_argument("no images for measure " + to_string(measure));
  return 100.0 * static_cast<double>(matched) / static_cast<double>(total);
}

ImageBuffer zero_regions(const ImageBuffer& image, std::span<const PixelRect> regions) {
  ImageBuffer out = image;
  for (const PixelRect& r : regions) {
    if (r.row_begin < 0 || r.col_begin < 0 || r.row_end > image.height || r.col_end > image.width ||
        r.row_begin > r.row_end || r.col_begin > r.col_end)
      throw std::out_of_range("zero region lies outside the image");
    for (int y = r.row_begin; y < r.row_end; ++y)
      std::fill_n(out.pixels.begin() + static_cast<std::ptrdiff_t>(out.index(y, r.col_begin, 0)),
                  static_cast<std::ptrdiff_t>(r.width()) * out.channels, 0.0f);
  }
  return out;
}

namespace {

double mean_abs_difference(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return a.empty() ? 0.0 : acc / static_cast<double>(a.size());
}

}  // namespace

double AblationResult::mean_abs_change_important() const {
  return mean_abs_difference(baseline, zeroed_important);
}

double AblationResult::mean_abs_change_trivial() const {
  return mean_abs_difference(baseline, zeroed_trivial);
}

AblationResult ablation_study(std::span<const ImageBuffer> images, const ImagePredictor& predictor,
                              std::span<const RegionSplit> splits, int grid_rows, int grid_cols,
                              const std::optional<std::vector<double>>& mos) {
  if (images.size() < 3) throw std::invalid_argument("ablation needs at least 3 images");
  if (splits.size() != images.size()) throw std::invalid_argument("one region split per image required");
  if (mos && mos->size() != images.size()) throw std::invalid_argument("one ground-truth score per image required");

  AblationResult result;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImageBuffer& img = images[i];
    const BlockGrid pixels = partition_grid(img.height, img.width, grid_rows, grid_cols);
    result.baseline.push_back(predictor(img));
    result.zeroed_important.push_back(
        predictor(zero_regions(img, block_set_to_pixel_regions(splits[i].important, pixels, img.height, img.width))));
    result.zeroed_trivial.push_back(
        predictor(zero_regions(img, block_set_to_pixel_regions(splits[i].trivial, pixels, img.height, img.width))));
  }
  result.plcc_pred_vs_zeroed_important = pearson(result.baseline, result.zeroed_important);
  result.plcc_pred_vs_zeroed_trivial = pearson(result.baseline, result.zeroed_trivial);
  if (mos) {
    result.plcc_mos_vs_zeroed_important = pearson(*mos, result.zeroed_important);
    result.plcc_mos_vs_zeroed_trivial = pearson(*mos, result.zeroed_trivial);
  }
  return result;
}

void write_match_report(std::ostream& os, std::span<const MatchResult> results) {
  os << "image,measure,overlap";
  for (int t = kMinThreshold; t <= kMaxThreshold; ++t) os << ",matched@" << t;
  os << '\n';
  for (const MatchResult& r : results) {
    os << r.image << ',' << to_string(r.measure) << ',' << r.overlap;
    for (bool m : r.matched) os << ',' << (m ? 1 : 0);
    os << '\n';
  }
}

void write_matching_degree_table(std::ostream& os, std::span<const MatchResult> results,
                                 std::span<const int> thresholds) {
  os << "measure";
  for (int t : thresholds) os << ",T=" << t;
  os << '\n';
  for (MeasureKind k : kAllMeasures) {
    const bool present = std::any_of(results.begin(), results.end(), [&](const MatchResult& r) { return r.measure == k; });
    if (!present) continue;
    os << to_string(k);
    for (int t : thresholds) os << ',' << format_real(matching_degree(results, k, t));
    os << '\n';
  }
}

void write_ablation_report(std::ostream& os, const AblationResult& result,
                           std::span<const std::pair<std::string, std::string>> metadata) {
  for (const auto& [key, value] : metadata) os << "# " << key << '=' << value << '\n';
  const auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("NA"); };
  os << "metric,value\n";
  os << "plcc_pred_vs_zeroed_important," << format_real(result.plcc_pred_vs_zeroed_important) << '\n';
  os << "plcc_pred_vs_zeroed_trivial," << format_real(result.plcc_pred_vs_zeroed_trivial) << '\n';
  os << "plcc_mos_vs_zeroed_important," << opt(result.plcc_mos_vs_zeroed_important) << '\n';
  os << "plcc_mos_vs_zeroed_trivial," << opt(result.plcc_mos_vs_zeroed_trivial) << '\n';
  os << "mean_abs_change_important," << format_real(result.mean_abs_change_important()) << '\n';
  os << "mean_abs_change_trivial," << format_real(result.mean_abs_change_trivial()) << '\n';
}

}  // namespace qregion
