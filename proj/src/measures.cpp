#include "qregion/measures.hpp"

#include "qregion/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace qregion {

std::string to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::saliency: return "saliency";
    case MeasureKind::frequency: return "frequency";
    case MeasureKind::objectness: return "objectness";
    case MeasureKind::averaged: return "averaged";
  }
  return "unknown";
}

MeasureKind parse_measure_kind(const std::string& text) {
  for (MeasureKind k : kAllMeasures)
    if (to_string(k) == text) return k;
  throw std::invalid_argument("unknown measure '" + text + "'");
}

namespace {

// Half-sample symmetric reflection into [0, n).
Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Rows of the returned matrix map `from` samples onto `to` samples: box
// averaging when shrinking, linear interpolation on pixel centres otherwise.
Eigen::MatrixXd resample_weights(Eigen::Index from, Eigen::Index to) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(to, from);
  const double scale = static_cast<double>(from) / static_cast<double>(to);
  if (to < from) {
    for (Eigen::Index i = 0; i < to; ++i) {
      const double lo = i * scale, hi = (i + 1) * scale;
      for (auto j = static_cast<Eigen::Index>(lo); j < from && j < hi; ++j) {
        const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
        if (overlap > 0) w(i, j) = overlap / scale;
      }
    }
  } else {
    for (Eigen::Index i = 0; i < to; ++i) {
      const double src = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(from - 1));
      const auto j0 = static_cast<Eigen::Index>(std::floor(src));
      const Eigen::Index j1 = std::min(j0 + 1, from - 1);
      const double t = src - j0;
      w(i, j0) += 1.0 - t;
      w(i, j1) += t;
    }
  }
  return w;
}

Plane convolve_separable(const Plane& input, const std::vector<double>& kernel) {
  const auto radius = static_cast<Eigen::Index>(kernel.size() / 2);
  const Eigen::Index h = input.rows(), w = input.cols();
  Plane tmp(h, w), out(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0;
      for (Eigen::Index k = -radius; k <= radius; ++k) acc += kernel[k + radius] * input(r, reflect(c + k, w));
      tmp(r, c) = acc;
    }
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0;
      for (Eigen::Index k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp(reflect(r + k, h), c);
      out(r, c) = acc;
    }
  return out;
}

// 3x3 mean with wrap-around.
Plane box3_circular(const Plane& p) {
  const Eigen::Index h = p.rows(), w = p.cols();
  Plane out(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) acc += p((r + dr + h) % h, (c + dc + w) % w);
      out(r, c) = acc / 9.0;
    }
  return out;
}

Plane scale_to_unit_max(Plane p) {
  const double m = p.maxCoeff();
  if (m > 0) p /= m;
  return p;
}

// Central differences with reflected borders.
void gradients(const Plane& p, Plane& gx, Plane& gy) {
  const Eigen::Index h = p.rows(), w = p.cols();
  gx.resize(h, w);
  gy.resize(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      gx(r, c) = 0.5 * (p(r, reflect(c + 1, w)) - p(r, reflect(c - 1, w)));
      gy(r, c) = 0.5 * (p(reflect(r + 1, h), c) - p(reflect(r - 1, h), c));
    }
}

double mannos_sakrison(double f) {
  return 2.6 * (0.0192 + 0.114 * f) * std::exp(-std::pow(0.114 * f, 1.1));
}

}  // namespace

Plane resize_plane(const Plane& input, int height, int width) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("resize target must be positive");
  if (height == input.rows() && width == input.cols()) return input;
  const Eigen::MatrixXd wr = resample_weights(input.rows(), height);
  const Eigen::MatrixXd wc = resample_weights(input.cols(), width);
  return (wr * input.matrix() * wc.transpose()).array();
}

Plane gaussian_blur(const Plane& input, double sigma) {
  if (sigma <= 0) return input;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0;
  for (int k = -radius; k <= radius; ++k) sum += kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
  for (double& v : kernel) v /= sum;
  return convolve_separable(input, kernel);
}

MeasureMap spectral_residual_saliency(const ImageBuffer& image, const SaliencyOptions& options) {
  image.validate();
  if (image.height < 8 || image.width < 8)
    throw DimensionError("saliency needs an image of at least 8x8 pixels");

  const Plane luma = image.luma();
  int h = image.height, w = image.width;
  const int longest = std::max(h, w);
  if (longest > options.working_size) {
    const double s = static_cast<double>(options.working_size) / longest;
    h = std::max(1, static_cast<int>(std::lround(h * s)));
    w = std::max(1, static_cast<int>(std::lround(w * s)));
  }
  const Plane small = resize_plane(luma, h, w);

  const ComplexPlane spectrum = fft2(small);
  const Plane amplitude = spectrum.abs();
  const double floor = 1e-9 * amplitude.maxCoeff();
  const Plane log_amplitude = amplitude.max(std::max(floor, 1e-300)).log();
  const Plane residual = log_amplitude - box3_circular(log_amplitude);

  ComplexPlane rebuilt(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c)
      rebuilt(r, c) = amplitude(r, c) > floor ? std::polar(std::exp(residual(r, c)), std::arg(spectrum(r, c)))
                                              : std::complex<double>(0.0, 0.0);

  Plane s = ifft2(rebuilt).abs2();
  s = gaussian_blur(s, options.smoothing_sigma);
  s = resize_plane(s, image.height, image.width);
  return {MeasureKind::saliency, scale_to_unit_max(std::move(s))};
}

BandDecomposition band_decompose(const ImageBuffer& image, double pixels_per_degree) {
  image.validate();
  return band_decompose(image.luma(), pixels_per_degree);
}

BandDecomposition band_decompose(const Plane& luma, double pixels_per_degree) {
  if (!(pixels_per_degree > 0)) throw std::invalid_argument("pixels per degree must be positive");
  BandDecomposition d;
  d.pixels_per_degree = pixels_per_degree;
  for (int k = 0; k <= BandDecomposition::kBands; ++k)
    d.edges.push_back(BandDecomposition::kMaxFrequency * k / BandDecomposition::kBands);

  const ComplexPlane spectrum = fft2(luma);
  const Eigen::Index h = spectrum.rows(), w = spectrum.cols();
  Eigen::ArrayXXi band(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      const double f = std::hypot(signed_frequency(r, h), signed_frequency(c, w)) * pixels_per_degree;
      band(r, c) = -1;
      for (int k = 0; k < BandDecomposition::kBands; ++k)
        if (f > d.edges[k] && f <= d.edges[k + 1]) band(r, c) = k;
    }

  for (int k = 0; k < BandDecomposition::kBands; ++k) {
    const ComplexPlane masked = (band == k).select(spectrum, std::complex<double>(0.0, 0.0));
    d.responses.push_back(ifft2(masked).real());
  }
  return d;
}

double csf_peak_frequency() {
  static const double peak = [] {
    // d/df log A = b / (a + b f) - p b^p f^(p-1), decreasing through zero.
    constexpr double a = 0.0192, b = 0.114, p = 1.1;
    const auto slope = [](double f) { return b / (a + b * f) - p * std::pow(b, p) * std::pow(f, p - 1); };
    double lo = 0.5, hi = 50.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (slope(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }();
  return peak;
}

double csf_weight(double f) {
  if (!(f >= 0)) throw std::invalid_argument("spatial frequency must be non-negative");
  const double peak = csf_peak_frequency();
  if (f < peak) return mannos_sakrison(peak) * f / peak;
  return mannos_sakrison(f);
}

MeasureMap frequency_measure(const BandDecomposition& decomposition) {
  if (decomposition.responses.size() != static_cast<std::size_t>(BandDecomposition::kBands))
    throw std::invalid_argument("band decomposition must hold 10 bands");
  const Plane& first = decomposition.responses.front();
  Plane acc = Plane::Zero(first.rows(), first.cols());
  for (int k = 0; k < BandDecomposition::kBands; ++k)
    acc += csf_weight(decomposition.center(k)) * decomposition.responses[k].abs();
  return {MeasureKind::frequency, std::move(acc)};
}

MeasureMap objectness(const ImageBuffer& image, const std::optional<MeasureMap>& external) {
  image.validate();
  if (external) {
    if (external->height() != image.height || external->width() != image.width)
      throw DimensionError("external objectness map does not match image dimensions");
    if (!external->values.allFinite()) throw std::domain_error("external objectness map is not finite");
    return {MeasureKind::objectness, external->values.max(0.0).min(1.0)};
  }

  const Plane saliency = spectral_residual_saliency(image).values;
  const Eigen::Index h = image.height, w = image.width;

  const double sigma = 0.35 * static_cast<double>(std::min(h, w));
  const double rc = 0.5 * (h - 1), cc = 0.5 * (w - 1);
  Plane centre(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c)
      centre(r, c) = std::exp(-((r - rc) * (r - rc) + (c - cc) * (c - cc)) / (2 * sigma * sigma));

  Plane gx, gy;
  gradients(image.luma(), gx, gy);
  const Plane jxx = gaussian_blur(gx * gx, 2.0);
  const Plane jxy = gaussian_blur(gx * gy, 2.0);
  const Plane jyy = gaussian_blur(gy * gy, 2.0);
  const Plane trace = jxx + jyy;
  const Plane gap = ((jxx - jyy).square() + 4.0 * jxy.square()).sqrt();  // lambda1 - lambda2
  const Plane coherence = (trace > 1e-12).select(gap / trace.max(1e-12), 0.0);
  const Plane strength = trace.max(0.0).sqrt() * (0.5 + 0.5 * coherence);

  Plane product = saliency * centre * strength;
  if (product.maxCoeff() <= 1e-12) product.setZero();
  return {MeasureKind::objectness, scale_to_unit_max(std::move(product))};
}

MeasureMap fuse_average(std::span<const MeasureMap> maps) {
  if (maps.empty()) throw std::invalid_argument("fuse_average needs at least one map");
  const Eigen::Index h = maps.front().values.rows(), w = maps.front().values.cols();
  Plane acc = Plane::Zero(h, w);
  for (const MeasureMap& m : maps) {
    if (m.values.rows() != h || m.values.cols() != w) throw DimensionError("measure maps differ in size");
    const double lo = m.values.minCoeff(), hi = m.values.maxCoeff();
    if (hi - lo <= 1e-12)
      acc += 0.5;
    else
      acc += (m.values - lo) / (hi - lo);
  }
  return {MeasureKind::averaged, acc / static_cast<double>(maps.size())};
}

std::vector<MeasureMap> compute_measures(const ImageBuffer& image, double pixels_per_degree,
                                         const std::optional<MeasureMap>& external_objectness) {
  std::vector<MeasureMap> maps;
  maps.push_back(spectral_residual_saliency(image));
  maps.push_back(frequency_measure(band_decompose(image, pixels_per_degree)));
  maps.push_back(objectness(image, external_objectness));
  maps.push_back(fuse_average(maps));
  return maps;
}

std::vector<double> region_means(const MeasureMap& map, std::span<const PixelRect> regions) {
  std::vector<double> out;
  out.reserve(regions.size());
  for (const PixelRect& r : regions) {
    if (r.height() <= 0 || r.width() <= 0) throw std::invalid_argument("empty region rectangle");
    if (r.row_begin < 0 || r.col_begin < 0 || r.row_end > map.height() || r.col_end > map.width())
      throw std::out_of_range("region rectangle lies outside the measure map");
    out.push_back(map.values.block(r.row_begin, r.col_begin, r.height(), r.width()).mean());
  }
  return out;
}

void save_measure_map(const MeasureMap& map, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  binary::write_magic(os, "SMP1");
  binary::write_u32(os, static_cast<std::uint32_t>(map.height()));
  binary::write_u32(os, static_cast<std::uint32_t>(map.width()));
  for (int r = 0; r < map.height(); ++r)
    for (int c = 0; c < map.width(); ++c) binary::write_f32(os, static_cast<float>(map.values(r, c)));
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

MeasureMap load_measure_map_smp(const std::filesystem::path& path, MeasureKind kind) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  binary::expect_magic(is, "SMP1");
  const std::uint32_t h = binary::read_u32(is, "SMP1 header");
  const std::uint32_t w = binary::read_u32(is, "SMP1 header");
  if (h == 0 || w == 0 || std::uint64_t{h} * w > (std::uint64_t{1} << 32))
    throw FormatError("SMP1 header has bad dimensions");
  MeasureMap m{kind, Plane(h, w)};
  for (std::uint32_t r = 0; r < h; ++r)
    for (std::uint32_t c = 0; c < w; ++c) {
      const float v = binary::read_f32(is, "SMP1 payload");
      if (!std::isfinite(v)) throw FormatError("SMP1 payload contains non-finite values");
      m.values(r, c) = v;
    }
  return m;
}

}  // namespace qregion
