#pragma once

#include "qregion/encoder.hpp"
#include "qregion/importance.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qregion {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PredictorKind { builtin_encoder, builtin_heuristic, bridge };

struct PredictorSpec {
  PredictorKind kind = PredictorKind::builtin_encoder;
  std::string bridge_command;  // only for PredictorKind::bridge

  /// "builtin_encoder", "builtin_heuristic" or "bridge:<command>".
  static PredictorSpec parse(const std::string& text);
  std::string to_string() const;
};

struct RunConfig {
  int grid_rows = 3;
  int grid_cols = 4;
  ImportanceMode importance_mode = ImportanceMode::image_deviation;
  int subset_cap = 0;  // 0 enumerates every subset
  std::uint64_t subset_seed = 0;
  EncoderConfig encoder;
  std::optional<std::filesystem::path> weights_file;
  PredictorSpec predictor;
  double pixels_per_degree = 100.0;
  std::vector<int> thresholds{1, 2, 3, 4, 5};
  std::filesystem::path output_dir = "qregion_out";
  int stride = 32;
  int channels = 16;
  int jobs = 0;  // 0 uses every logical core
  std::optional<std::filesystem::path> objectness_dir;

  /// Throws ConfigError on any out-of-range value.
  void validate() const;
};

/// Overlays keys of a JSON object onto `config`. Unknown keys are rejected.
void apply_config_json(RunConfig& config, const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace qregion
