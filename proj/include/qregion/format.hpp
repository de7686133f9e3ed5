#pragma once

#include <cstdio>
#include <string>

namespace qregion {

/// Fixed textual form used by every report.
inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

}  // namespace qregion
