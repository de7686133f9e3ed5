#include "qregion/image_io.hpp"

#include "qregion/evaluation.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace qregion {

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

class PnmReader {
 public:
  PnmReader(const std::vector<unsigned char>& bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

  // Next whitespace-delimited header token, skipping '#' comments.
  unsigned long number() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) ++pos_;
    if (start == pos_) throw CorruptImageError(name_ + ": malformed PNM header");
    return std::stoul(std::string(bytes_.begin() + static_cast<std::ptrdiff_t>(start),
                                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_)));
  }

  void single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw CorruptImageError(name_ + ": malformed PNM header");
    ++pos_;
  }

  unsigned binary_sample(bool wide) {
    const std::size_t need = wide ? 2 : 1;
    if (pos_ + need > bytes_.size()) throw CorruptImageError(name_ + ": truncated PNM payload");
    unsigned v = bytes_[pos_++];
    if (wide) v = (v << 8) | bytes_[pos_++];
    return v;
  }

  void skip(std::size_t n) { pos_ += n; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ >= bytes_.size()) throw CorruptImageError(name_ + ": truncated PNM data");
  }

  const std::vector<unsigned char>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

ImageBuffer decode_pnm(const std::vector<unsigned char>& bytes, const std::string& name) {
  const char kind = static_cast<char>(bytes[1]);
  const bool colour = kind == '3' || kind == '6';
  const bool ascii = kind == '2' || kind == '3';
  PnmReader reader(bytes, name);
  reader.skip(2);
  const unsigned long width = reader.number();
  const unsigned long height = reader.number();
  const unsigned long maxval = reader.number();
  if (width == 0 || height == 0 || width > (1UL << 16) || height > (1UL << 16))
    throw CorruptImageError(name + ": bad PNM dimensions");
  if (maxval == 0 || maxval > 65535) throw CorruptImageError(name + ": bad PNM maxval");
  if (!ascii) reader.single_space();

  ImageBuffer img(static_cast<int>(height), static_cast<int>(width), colour ? 3 : 1);
  const bool wide = maxval > 255;
  for (float& v : img.pixels) {
    const unsigned long s = ascii ? reader.number() : reader.binary_sample(wide);
    if (s > maxval) throw CorruptImageError(name + ": sample exceeds maxval");
    v = static_cast<float>(static_cast<double>(s) / static_cast<double>(maxval));
  }
  return img;
}

ImageBuffer decode_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw CorruptImageError(path.string() + ": " + image.message);
  const bool colour = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw CorruptImageError(path.string() + ": " + msg);
  }
  ImageBuffer img(static_cast<int>(image.height), static_cast<int>(image.width), colour ? 3 : 1);
  std::transform(buffer.begin(), buffer.end(), img.pixels.begin(),
                 [](png_byte b) { return static_cast<float>(b) / 255.0f; });
  return img;
}

unsigned char quantize(float v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

ImageBuffer decode_image(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  static constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= 8 && std::equal(bytes.begin(), bytes.begin() + 8, kPngSignature)) return decode_png(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && std::string("2356").find(static_cast<char>(bytes[1])) != std::string::npos)
    return decode_pnm(bytes, path.string());
  throw UnsupportedFormatError(path.string() + ": unsupported image format (expected PNG, PGM or PPM)");
}

void encode_image(const ImageBuffer& image, const std::filesystem::path& path) {
  image.validate();
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    std::vector<png_byte> buffer(image.pixels.size());
    std::transform(image.pixels.begin(), image.pixels.end(), buffer.begin(), quantize);
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr))
      throw std::runtime_error(path.string() + ": " + png.message);
    return;
  }
  if (ext != ".pgm" && ext != ".ppm") throw UnsupportedFormatError(path.string() + ": unsupported output extension");
  const ImageBuffer& src = image;
  ImageBuffer converted;
  const ImageBuffer* out = &src;
  if (ext == ".ppm" && image.channels == 1) {
    converted = image.to_rgb();
    out = &converted;
  } else if (ext == ".pgm" && image.channels == 3) {
    converted = ImageBuffer::from_plane(image.luma());
    out = &converted;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << (ext == ".ppm" ? "P6" : "P5") << '\n' << out->width << ' ' << out->height << "\n255\n";
  std::string payload(out->pixels.size(), '\0');
  std::transform(out->pixels.begin(), out->pixels.end(), payload.begin(),
                 [](float v) { return static_cast<char>(quantize(v)); });
  os << payload;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

MeasureMap load_measure_map(const std::filesystem::path& path, MeasureKind kind) {
  std::ifstream probe(path, std::ios::binary);
  char magic[4] = {};
  probe.read(magic, 4);
  if (probe.gcount() == 4 && std::string(magic, 4) == "SMP1") return load_measure_map_smp(path, kind);
  return {kind, decode_image(path).luma()};
}

void render_heatmap(const MeasureMap& map, const std::filesystem::path& path) {
  if (!map.values.allFinite()) throw std::domain_error("cannot render a non-finite map");
  const double lo = map.values.minCoeff(), hi = map.values.maxCoeff();
  Plane scaled = hi - lo <= 1e-12 ? Plane::Constant(map.values.rows(), map.values.cols(), 128.0 / 255.0)
                                  : Plane((map.values - lo) / (hi - lo));
  encode_image(ImageBuffer::from_plane(scaled), path);
}

void render_block_scores(std::span<const double> block_scores, int grid_rows, int grid_cols, int height,
                         int width, const std::filesystem::path& path) {
  if (static_cast<int>(block_scores.size()) != grid_rows * grid_cols)
    throw std::invalid_argument("block score count does not match the grid");
  const BlockGrid tiles = partition_grid(height, width, grid_rows, grid_cols);
  MeasureMap map{MeasureKind::averaged, Plane(height, width)};
  for (int b = 0; b < tiles.block_count(); ++b) {
    const Extent& e = tiles.block(b);
    map.values.block(e.row_begin, e.col_begin, e.height(), e.width()).setConstant(block_scores[b]);
  }
  render_heatmap(map, path);
}

ImageBuffer mask_render(const ImageBuffer& image, const BlockSet& selected, int grid_rows, int grid_cols,
                        MaskPolarity polarity) {
  const BlockGrid tiles = partition_grid(image.height, image.width, grid_rows, grid_cols);
  const BlockSet black = polarity == MaskPolarity::black_out_selected ? selected : selected.complement();
  return zero_regions(image, block_set_to_pixel_regions(black, tiles, image.height, image.width));
}

}  // namespace qregion
