#pragma once

#include "qregion/fft.hpp"

#include <vector>

namespace qregion {

/// Row-major interleaved image with values in [0, 1]; 1 or 3 channels.
struct ImageBuffer {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> pixels;

  ImageBuffer() = default;
  ImageBuffer(int height, int width, int channels, float fill = 0.0f);

  float& at(int r, int c, int ch) { return pixels[index(r, c, ch)]; }
  float at(int r, int c, int ch) const { return pixels[index(r, c, ch)]; }
  std::size_t index(int r, int c, int ch) const {
    return (static_cast<std::size_t>(r) * width + c) * channels + ch;
  }

  /// Throws std::invalid_argument on bad dimensions or out-of-range values.
  void validate() const;

  Plane plane(int channel) const;
  /// Rec. 601 luma for colour images, the single channel otherwise.
  Plane luma() const;
  ImageBuffer to_rgb() const;

  static ImageBuffer from_plane(const Plane& values);
  static ImageBuffer from_planes(const Plane& r, const Plane& g, const Plane& b);

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

}  // namespace qregion
