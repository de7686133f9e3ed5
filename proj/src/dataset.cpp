#include "qregion/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace qregion {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& csv_path) {
  std::ifstream is(csv_path);
  if (!is) throw DatasetError("dataset file not found: " + csv_path.string());
  const std::filesystem::path base = csv_path.parent_path();

  std::string line;
  int line_no = 0;
  bool has_mos = false;
  bool header_seen = false;
  std::vector<DatasetRecord> records;
  std::set<std::filesystem::path> seen;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string where = csv_path.string() + ":" + std::to_string(line_no) + ": ";
    if (trim(line).empty()) continue;
    const auto fields = split_fields(trim(line));
    if (!header_seen) {
      header_seen = true;
      if (fields.size() == 1 && fields[0] == "image_path") continue;
      if (fields.size() == 2 && fields[0] == "image_path" && fields[1] == "mos") {
        has_mos = true;
        continue;
      }
      throw DatasetError(where + "expected header 'image_path' or 'image_path,mos'");
    }
    if (fields.size() != (has_mos ? 2U : 1U))
      throw DatasetError(where + "expected " + std::to_string(has_mos ? 2 : 1) + " fields, got " +
                         std::to_string(fields.size()));
    if (fields[0].empty()) throw DatasetError(where + "empty image path");

    DatasetRecord rec;
    rec.image_path = std::filesystem::path(fields[0]);
    if (rec.image_path.is_relative()) rec.image_path = base / rec.image_path;
    rec.image_path = rec.image_path.lexically_normal();
    if (has_mos && !fields[1].empty()) {
      double v = 0;
      const char* first = fields[1].data();
      const char* last = first + fields[1].size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw DatasetError(where + "mos '" + fields[1] + "' is not a finite number");
      rec.mos = v;
    }
    if (!seen.insert(rec.image_path).second)
      throw DatasetError(where + "duplicate image path " + rec.image_path.string());
    records.push_back(std::move(rec));
  }
  if (!header_seen) throw DatasetError(csv_path.string() + ": empty dataset file");
  return records;
}

}  // namespace qregion
