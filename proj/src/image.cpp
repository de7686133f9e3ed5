#include "qregion/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qregion {

ImageBuffer::ImageBuffer(int height, int width, int channels, float fill)
    : height(height), width(width), channels(channels) {
  if (height <= 0 || width <= 0 || (channels != 1 && channels != 3))
    throw std::invalid_argument("image needs positive size and 1 or 3 channels");
  pixels.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

void ImageBuffer::validate() const {
  if (height <= 0 || width <= 0 || (channels != 1 && channels != 3))
    throw std::invalid_argument("image needs positive size and 1 or 3 channels");
  if (pixels.size() != static_cast<std::size_t>(height) * width * channels)
    throw std::invalid_argument("image pixel count does not match its dimensions");
  for (float v : pixels)
    if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("image values must lie in [0, 1]");
}

Plane ImageBuffer::plane(int channel) const {
  if (channel < 0 || channel >= channels) throw std::out_of_range("channel index out of range");
  Plane p(height, width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) p(r, c) = at(r, c, channel);
  return p;
}

Plane ImageBuffer::luma() const {
  if (channels == 1) return plane(0);
  Plane p(height, width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      p(r, c) = 0.299 * at(r, c, 0) + 0.587 * at(r, c, 1) + 0.114 * at(r, c, 2);
  return p;
}

ImageBuffer ImageBuffer::to_rgb() const {
  if (channels == 3) return *this;
  ImageBuffer out(height, width, 3);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = at(r, c, 0);
  return out;
}

ImageBuffer ImageBuffer::from_plane(const Plane& values) {
  ImageBuffer out(static_cast<int>(values.rows()), static_cast<int>(values.cols()), 1);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c)
      out.at(r, c, 0) = static_cast<float>(std::clamp(values(r, c), 0.0, 1.0));
  return out;
}

ImageBuffer ImageBuffer::from_planes(const Plane& red, const Plane& green, const Plane& blue) {
  if (red.rows() != green.rows() || red.rows() != blue.rows() || red.cols() != green.cols() ||
      red.cols() != blue.cols())
    throw std::invalid_argument("colour planes differ in size");
  ImageBuffer out(static_cast<int>(red.rows()), static_cast<int>(red.cols()), 3);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) {
      out.at(r, c, 0) = static_cast<float>(std::clamp(red(r, c), 0.0, 1.0));
      out.at(r, c, 1) = static_cast<float>(std::clamp(green(r, c), 0.0, 1.0));
      out.at(r, c, 2) = static_cast<float>(std::clamp(blue(r, c), 0.0, 1.0));
    }
  return out;
}

}  // namespace qregion
