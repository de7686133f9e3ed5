#pragma once

#include "qregion/fft.hpp"
#include "qregion/grid.hpp"
#include "qregion/image.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qregion {

enum class MeasureKind { saliency, frequency, objectness, averaged };

std::string to_string(MeasureKind kind);
MeasureKind parse_measure_kind(const std::string& text);
inline constexpr MeasureKind kAllMeasures[] = {MeasureKind::saliency, MeasureKind::frequency,
                                               MeasureKind::objectness, MeasureKind::averaged};

/// Per-pixel semantic measure.
struct MeasureMap {
  MeasureKind kind = MeasureKind::saliency;
  Plane values;

  int height() const { return static_cast<int>(values.rows()); }
  int width() const { return static_cast<int>(values.cols()); }
};

struct SaliencyOptions {
  int working_size = 128;  // longer side after downscaling
  double smoothing_sigma = 2.5;
};

/// Spectral residual saliency, scaled so the maximum is 1. Spectrum
/// coefficients below 1e-9 of the peak amplitude are dropped from the
/// reconstruction.
MeasureMap spectral_residual_saliency(const ImageBuffer& image, const SaliencyOptions& options = {});

/// Ten contiguous radial bands (edge_k, edge_k+1] in cycles/degree over
/// [0, 50]. Responses are the signed band-pass filtered luma; DC is in no band.
struct BandDecomposition {
  static constexpr int kBands = 10;
  static constexpr double kMaxFrequency = 50.0;

  double pixels_per_degree = 100.0;
  std::vector<double> edges;  // kBands + 1 entries
  std::vector<Plane> responses;

  double center(int band) const { return 0.5 * (edges[band] + edges[band + 1]); }
  Plane magnitude(int band) const { return responses.at(band).abs(); }
  double energy(int band) const { return responses.at(band).square().sum(); }
};

/// Default 100 pixels/degree puts the Nyquist frequency at 50 cycles/degree.
BandDecomposition band_decompose(const ImageBuffer& image, double pixels_per_degree = 100.0);
BandDecomposition band_decompose(const Plane& luma, double pixels_per_degree = 100.0);

/// Mannos-Sakrison contrast sensitivity 2.6 (0.0192 + 0.114 f) exp(-(0.114 f)^1.1),
/// replaced below its peak by a linear ramp from zero.
double csf_weight(double cycles_per_degree);
double csf_peak_frequency();

/// CSF-weighted sum of per-band response magnitudes, evaluated at band centers.
MeasureMap frequency_measure(const BandDecomposition& decomposition);

/// Passes an external map through (clamped to [0, 1]) or builds the proxy:
/// saliency x centre prior x coherent gradient strength, scaled to max 1.
MeasureMap objectness(const ImageBuffer& image, const std::optional<MeasureMap>& external = std::nullopt);

/// Min-max normalises each map (constant maps become 0.5), then averages.
MeasureMap fuse_average(std::span<const MeasureMap> maps);

/// All four measures for one image, in kAllMeasures order.
std::vector<MeasureMap> compute_measures(const ImageBuffer& image, double pixels_per_degree = 100.0,
                                         const std::optional<MeasureMap>& external_objectness = std::nullopt);

std::vector<double> region_means(const MeasureMap& map, std::span<const PixelRect> regions);

/// SMP1: magic, u32 height/width (little endian), float32 values row-major.
void save_measure_map(const MeasureMap& map, const std::filesystem::path& path);
MeasureMap load_measure_map_smp(const std::filesystem::path& path, MeasureKind kind);

// Resampling and filtering used by the measures.
Plane resize_plane(const Plane& input, int height, int width);
Plane gaussian_blur(const Plane& input, double sigma);

}  // namespace qregion
