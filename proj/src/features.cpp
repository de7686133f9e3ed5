#include "qregion/features.hpp"

#include "qregion/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace qregion {

namespace {

double plane_std(const Plane& p) {
  if (p.maxCoeff() == p.minCoeff()) return 0.0;
  return std::sqrt((p - p.mean()).square().mean());
}

double gradient_mean(const Plane& p) {
  if (p.rows() < 2 || p.cols() < 2) return 0.0;
  const Eigen::Index h = p.rows() - 1, w = p.cols() - 1;
  const Plane gx = p.block(0, 1, h, w) - p.block(0, 0, h, w);
  const Plane gy = p.block(1, 0, h, w) - p.block(0, 0, h, w);
  return (gx.square() + gy.square()).sqrt().mean();
}

double laplacian_energy(const Plane& p) {
  if (p.rows() < 3 || p.cols() < 3) return 0.0;
  const Eigen::Index h = p.rows() - 2, w = p.cols() - 2;
  const Plane lap = p.block(0, 1, h, w) + p.block(2, 1, h, w) + p.block(1, 0, h, w) +
                    p.block(1, 2, h, w) - 4.0 * p.block(1, 1, h, w);
  return lap.square().mean();
}

// log(1 + energy per pixel) in `count` equal radial bands over (0, 0.5]
// cycles/sample; corner frequencies beyond 0.5 fall into the last band.
std::vector<double> band_energies(const Plane& patch, int count) {
  std::vector<double> out(count, 0.0);
  if (count <= 0) return out;
  const ComplexPlane spec = fft2(Plane(patch - patch.mean()));
  const Eigen::Index h = spec.rows(), w = spec.cols();
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      if (r == 0 && c == 0) continue;
      const double rho = std::hypot(signed_frequency(r, h), signed_frequency(c, w));
      const int band = std::min(count - 1, static_cast<int>(std::ceil(rho / 0.5 * count)) - 1);
      out[std::max(band, 0)] += std::norm(spec(r, c));
    }
  }
  const double n = static_cast<double>(h * w);
  for (double& e : out) e = std::log1p(e / (n * n));
  return out;
}

}  // namespace

FeatureMatrix extract_builtin(const ImageBuffer& image, const ExtractOptions& options) {
  image.validate();
  const int s = options.stride;
  if (s <= 0 || options.channels_out <= 0)
    throw std::invalid_argument("stride and channel count must be positive");
  if (image.height < s || image.width < s)
    throw ImageTooSmallError("image " + std::to_string(image.height) + "x" +
                             std::to_string(image.width) + " is smaller than stride " +
                             std::to_string(s));

  const int rows = image.height / s;
  const int cols = image.width / s;
  const ImageBuffer rgb = image.to_rgb();
  const Plane planes[3] = {rgb.plane(0), rgb.plane(1), rgb.plane(2)};
  const Plane luma = rgb.luma();
  const int bands = std::max(0, options.channels_out - kBandEnergy);

  FeatureMatrix fm(rows, cols, options.channels_out);
  std::vector<double> cell(kBandEnergy + bands);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const Plane patch = planes[ch].block(r * s, c * s, s, s);
        cell[kMeanR + ch] = patch.mean();
        cell[kStdR + ch] = plane_std(patch);
      }
      const Plane patch = luma.block(r * s, c * s, s, s);
      cell[kGradientMean] = gradient_mean(patch);
      cell[kLaplacianEnergy] = laplacian_energy(patch);
      const auto be = band_energies(patch, bands);
      std::copy(be.begin(), be.end(), cell.begin() + kBandEnergy);
      for (int k = 0; k < options.channels_out; ++k) fm.at(r, c)(k) = static_cast<float>(cell[k]);
    }
  }

  if (options.zscore) {
    for (int k = 0; k < fm.channels; ++k) {
      auto col = fm.data.col(k);
      const Eigen::ArrayXd v = col.cast<double>().array();
      const double mean = v.mean();
      const double sd = std::sqrt((v - mean).square().mean());
      col = ((v - mean) / (sd + 1e-8)).cast<float>().matrix();
    }
  }
  return fm;
}

void export_feature_matrix(const FeatureMatrix& features, const std::filesystem::path& path) {
  features.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  binary::write_magic(os, "FMX1");
  binary::write_u32(os, static_cast<std::uint32_t>(features.rows));
  binary::write_u32(os, static_cast<std::uint32_t>(features.cols));
  binary::write_u32(os, static_cast<std::uint32_t>(features.channels));
  for (Eigen::Index i = 0; i < features.data.rows(); ++i)
    for (Eigen::Index k = 0; k < features.data.cols(); ++k) binary::write_f32(os, features.data(i, k));
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

FeatureMatrix import_feature_matrix(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  binary::expect_magic(is, "FMX1");
  const std::uint32_t rows = binary::read_u32(is, "FMX1 header");
  const std::uint32_t cols = binary::read_u32(is, "FMX1 header");
  const std::uint32_t channels = binary::read_u32(is, "FMX1 header");
  if (rows == 0 || cols == 0 || channels == 0)
    throw FormatError("FMX1 header has a zero dimension");
  const std::uint64_t count = std::uint64_t{rows} * cols * channels;
  if (count > (std::uint64_t{1} << 32)) throw FormatError("FMX1 header dimensions are implausibly large");

  FeatureMatrix::Storage data(static_cast<Eigen::Index>(rows) * cols, channels);
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    for (Eigen::Index k = 0; k < data.cols(); ++k) {
      const float v = binary::read_f32(is, "FMX1 payload");
      if (!std::isfinite(v)) throw FormatError("FMX1 payload contains non-finite values");
      data(i, k) = v;
    }
  return FeatureMatrix(static_cast<int>(rows), static_cast<int>(cols), static_cast<int>(channels),
                       std::move(data));
}

HeuristicTerms heuristic_terms(const ImageBuffer& image) {
  image.validate();
  const Plane luma = image.luma();
  HeuristicTerms t;
  t.gradient_mean = gradient_mean(luma);

  const ComplexPlane spec = fft2(Plane(luma - luma.mean()));
  double total = 0, mid = 0;
  for (Eigen::Index r = 0; r < spec.rows(); ++r)
    for (Eigen::Index c = 0; c < spec.cols(); ++c) {
      if (r == 0 && c == 0) continue;
      const double e = std::norm(spec(r, c));
      const double rho = std::hypot(signed_frequency(r, spec.rows()), signed_frequency(c, spec.cols()));
      total += e;
      if (rho >= 0.05 && rho <= 0.25) mid += e;
    }
  t.midband_ratio = total > 1e-20 * spec.size() ? mid / total : 0.0;
  return t;
}

double baseline_heuristic_score(const ImageBuffer& image) {
  const HeuristicTerms t = heuristic_terms(image);
  return 1.0 + 4.0 * (1.0 - std::exp(-10.0 * t.gradient_mean * (0.5 + t.midband_ratio)));
}

}  // namespace qregion
