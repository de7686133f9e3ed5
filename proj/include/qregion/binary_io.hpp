#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qregion {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

namespace binary {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

inline std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
  }
  return v;
}

inline void write_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
  v = to_le(v);
  char buf[4];
  std::memcpy(buf, &v, 4);
  os.write(buf, 4);
}

inline void write_f32(std::ostream& os, float f) { write_u32(os, std::bit_cast<std::uint32_t>(f)); }

inline void read_exact(std::istream& is, char* dst, std::size_t n, const char* what) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw TruncationError(std::string("truncated payload while reading ") + what);
}

inline void expect_magic(std::istream& is, std::string_view magic) {
  std::string got(magic.size(), '\0');
  is.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (static_cast<std::size_t>(is.gcount()) != magic.size() || got != magic)
    throw FormatError("bad magic: expected \"" + std::string(magic) + "\"");
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
  char buf[4];
  read_exact(is, buf, 4, what);
  std::uint32_t v;
  std::memcpy(&v, buf, 4);
  return to_le(v);
}

inline float read_f32(std::istream& is, const char* what) {
  return std::bit_cast<float>(read_u32(is, what));
}

}  // namespace binary
}  // namespace qregion
