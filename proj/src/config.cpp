#include "qregion/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace qregion {

using nlohmann::json;

PredictorSpec PredictorSpec::parse(const std::string& text) {
  if (text == "builtin_encoder") return {PredictorKind::builtin_encoder, {}};
  if (text == "builtin_heuristic") return {PredictorKind::builtin_heuristic, {}};
  if (text.rfind("bridge:", 0) == 0 && text.size() > 7) return {PredictorKind::bridge, text.substr(7)};
  throw ConfigError("unknown predictor '" + text + "' (builtin_encoder, builtin_heuristic or bridge:<command>)");
}

std::string PredictorSpec::to_string() const {
  switch (kind) {
    case PredictorKind::builtin_encoder: return "builtin_encoder";
    case PredictorKind::builtin_heuristic: return "builtin_heuristic";
    case PredictorKind::bridge: return "bridge:" + bridge_command;
  }
  return "unknown";
}

void RunConfig::validate() const {
  const auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(grid_rows >= 1 && grid_cols >= 1, "grid_rows and grid_cols must be >= 1");
  require(grid_rows * grid_cols >= 2 && grid_rows * grid_cols <= 64, "grid must have between 2 and 64 blocks");
  require(subset_cap >= 0, "subset_cap must be >= 0");
  require(pixels_per_degree > 0, "pixels_per_degree must be positive");
  require(!thresholds.empty(), "thresholds must not be empty");
  for (int t : thresholds) require(t >= 1 && t <= 5, "thresholds must lie in [1, 5]");
  require(stride >= 1, "stride must be >= 1");
  require(channels >= 1, "channels must be >= 1");
  require(jobs >= 0, "jobs must be >= 0");
  require(!output_dir.empty(), "output_dir must not be empty");
  try {
    encoder.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("encoder: ") + e.what());
  }
}

namespace {

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void apply_encoder(EncoderConfig& enc, const json& j) {
  if (!j.is_object()) throw ConfigError("config key 'encoder' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "embed_dim") enc.embed_dim = get_as<int>(value, key);
    else if (key == "num_heads") enc.num_heads = get_as<int>(value, key);
    else if (key == "num_layers") enc.num_layers = get_as<int>(value, key);
    else if (key == "mlp_dim") enc.mlp_dim = get_as<int>(value, key);
    else if (key == "mask_logit_value") enc.mask_logit_value = get_as<double>(value, key);
    else if (key == "seed") enc.seed = get_as<std::uint64_t>(value, key);
    else throw ConfigError("unknown config key 'encoder." + key + "'");
  }
}

}  // namespace

void apply_config_json(RunConfig& config, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "grid_rows") config.grid_rows = get_as<int>(value, key);
    else if (key == "grid_cols") config.grid_cols = get_as<int>(value, key);
    else if (key == "importance_mode") {
      try {
        config.importance_mode = parse_importance_mode(get_as<std::string>(value, key));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "subset_cap") config.subset_cap = get_as<int>(value, key);
    else if (key == "subset_seed") config.subset_seed = get_as<std::uint64_t>(value, key);
    else if (key == "encoder") apply_encoder(config.encoder, value);
    else if (key == "weights_file") config.weights_file = get_as<std::string>(value, key);
    else if (key == "predictor") config.predictor = PredictorSpec::parse(get_as<std::string>(value, key));
    else if (key == "pixels_per_degree") config.pixels_per_degree = get_as<double>(value, key);
    else if (key == "thresholds") config.thresholds = get_as<std::vector<int>>(value, key);
    else if (key == "output_dir") config.output_dir = get_as<std::string>(value, key);
    else if (key == "stride") config.stride = get_as<int>(value, key);
    else if (key == "channels") config.channels = get_as<int>(value, key);
    else if (key == "jobs") config.jobs = get_as<int>(value, key);
    else if (key == "objectness_dir") config.objectness_dir = get_as<std::string>(value, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  RunConfig config;
  apply_config_json(config, ss.str());
  config.validate();
  return config;
}

}  // namespace qregion
