#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qregion {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetRecord {
  std::filesystem::path image_path;
  std::optional<double> mos;
};

/// CSV with header `image_path` or `image_path,mos`. Relative paths resolve
/// against the CSV's directory. Errors name the 1-based line number.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& csv_path);

}  // namespace qregion
