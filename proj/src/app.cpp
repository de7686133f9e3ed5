#include "qregion/app.hpp"

#include "qregion/bridge.hpp"
#include "qregion/config.hpp"
#include "qregion/dataset.hpp"
#include "qregion/evaluation.hpp"
#include "qregion/features.hpp"
#include "qregion/format.hpp"
#include "qregion/image_io.hpp"
#include "qregion/importance.hpp"
#include "qregion/measures.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace qregion {

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

namespace {

namespace fs = std::filesystem;

struct Item {
  fs::path path;
  std::string name;  // unique artifact prefix
  std::optional<double> mos;
};

class Log {
 public:
  Log(std::ostream& out, const fs::path& sidecar) : out_(out), file_(sidecar, std::ios::app) {}

  void info(const std::string& msg) { write("info", msg); }
  void warn(const std::string& msg) { write("warn", msg); }

 private:
  void write(const char* level, const std::string& msg) {
    std::lock_guard lock(mutex_);
    out_ << msg << '\n';
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    file_ << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << level << ' ' << msg << '\n';
  }

  std::mutex mutex_;
  std::ostream& out_;
  std::ofstream file_;
};

struct ImageFeatures {
  FeatureMatrix features;
  BlockGrid grid;
};

struct Context {
  RunConfig cfg;
  std::vector<Item> items;
  std::unique_ptr<Log> log;
  std::unique_ptr<BridgeClient> bridge;
  std::mutex bridge_mutex;
  std::optional<EncoderWeights<float>> weights;
  std::mutex weights_mutex;
  MaskPolarity polarity = MaskPolarity::black_out_selected;

  fs::path out(const std::string& file) const { return cfg.output_dir / file; }

  BridgeClient& bridge_client() {
    if (!bridge) bridge = std::make_unique<BridgeClient>(cfg.predictor.bridge_command);
    return *bridge;
  }

  const EncoderWeights<float>& encoder_weights(int channels) {
    std::lock_guard lock(weights_mutex);
    if (!weights) {
      if (cfg.weights_file) {
        weights = load_weights<float>(*cfg.weights_file);
        weights->config.mask_logit_value = cfg.encoder.mask_logit_value;
      } else {
        weights = init_weights<float>(cfg.encoder, channels);
      }
    }
    if (weights->channels != channels)
      throw DimensionError("encoder expects " + std::to_string(weights->channels) + " channels, features have " +
                           std::to_string(channels));
    return *weights;
  }
};

// ---- per-image stages ------------------------------------------------------

ImageFeatures features_for(Context& ctx, const Item& item, const ImageBuffer& image) {
  FeatureMatrix fm;
  if (ctx.cfg.predictor.kind == PredictorKind::bridge) {
    const fs::path target = fs::absolute(ctx.out(item.name + ".fmx"));
    fs::path written;
    {
      std::lock_guard lock(ctx.bridge_mutex);
      written = ctx.bridge_client().features(fs::absolute(item.path), target);
    }
    fm = import_feature_matrix(written);
  } else {
    fm = extract_builtin(image, {ctx.cfg.stride, ctx.cfg.channels, true});
  }
  BlockGrid grid = partition_grid(fm.rows, fm.cols, ctx.cfg.grid_rows, ctx.cfg.grid_cols);
  return {std::move(fm), std::move(grid)};
}

std::vector<BlockSet> subsets_for(const RunConfig& cfg) {
  const int blocks = cfg.grid_rows * cfg.grid_cols;
  if (cfg.subset_cap == 0) return enumerate_block_subsets(blocks, 1, blocks - 1);
  return sample_subsets(blocks, cfg.subset_cap, cfg.subset_seed);
}

ScorerFactory masked_predictor(Context& ctx, int channels, const BlockGrid& grid) {
  return encoder_scorer(ctx.encoder_weights(channels), grid);
}

ImagePredictor image_predictor(Context& ctx) {
  switch (ctx.cfg.predictor.kind) {
    case PredictorKind::builtin_heuristic:
      return [](const ImageBuffer& img) { return baseline_heuristic_score(img); };
    case PredictorKind::builtin_encoder:
      return [&ctx](const ImageBuffer& img) {
        FeatureMatrix fm = extract_builtin(img, {ctx.cfg.stride, ctx.cfg.channels, true});
        const BlockGrid grid = partition_grid(fm.rows, fm.cols, 1, 1);
        return predict(fm, BlockSet(1), ctx.encoder_weights(fm.channels), grid);
      };
    case PredictorKind::bridge:
      return [&ctx](const ImageBuffer& img) {
        std::lock_guard lock(ctx.bridge_mutex);
        const fs::path tmp = fs::absolute(ctx.out(".bridge_input.png"));
        encode_image(img, tmp);
        const double s = ctx.bridge_client().score(tmp);
        fs::remove(tmp);
        return s;
      };
  }
  throw ConfigError("unknown predictor");
}

// Runs fn for every item in parallel; failures are logged and leave nullopt.
template <typename T>
std::vector<std::optional<T>> per_image(Context& ctx, const std::string& stage,
                                        const std::function<T(const Item&)>& fn) {
  std::vector<std::optional<T>> results(ctx.items.size());
  parallel_for(ctx.items.size(), ctx.cfg.jobs, [&](std::size_t i) {
    try {
      results[i] = fn(ctx.items[i]);
    } catch (const std::exception& e) {
      ctx.log->warn(stage + ": skipping " + ctx.items[i].path.string() + ": " + e.what());
    }
  });
  return results;
}

template <typename T>
std::size_t count_ok(const std::vector<std::optional<T>>& v) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](const auto& x) { return x.has_value(); }));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

// ---- commands --------------------------------------------------------------

using Profiles = std::vector<std::optional<ImportanceProfile>>;

int cmd_extract(Context& ctx) {
  auto done = per_image<bool>(ctx, "extract", [&](const Item& item) {
    const ImageBuffer img = decode_image(item.path);
    const ImageFeatures f = features_for(ctx, item, img);
    export_feature_matrix(f.features, ctx.out(item.name + ".fmx"));
    return true;
  });
  ctx.log->info("extract: " + std::to_string(count_ok(done)) + "/" + std::to_string(done.size()) + " images");
  return count_ok(done) == 0 ? 1 : 0;
}

Profiles compute_importance(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const std::vector<BlockSet> subsets = subsets_for(cfg);
  const int blocks = cfg.grid_rows * cfg.grid_cols;

  struct Sweep {
    MaskedPredictionTable table;
  };
  auto sweeps = per_image<Sweep>(ctx, "importance", [&](const Item& item) {
    const ImageBuffer img = decode_image(item.path);
    const ImageFeatures f = features_for(ctx, item, img);
    const std::span<const FeatureMatrix> one(&f.features, 1);
    Sweep s{masked_prediction_sweep(one, masked_predictor(ctx, f.features.channels, f.grid), blocks, subsets)};
    ctx.log->info("importance: " + item.name + ": " + std::to_string(subsets.size()) +
                  " subset evaluations + 1 baseline");
    return s;
  });

  Profiles profiles(ctx.items.size());
  if (cfg.importance_mode == ImportanceMode::image_deviation) {
    for (std::size_t i = 0; i < sweeps.size(); ++i)
      if (sweeps[i]) profiles[i] = block_importance_image(sweeps[i]->table, 0);
    return profiles;
  }

  MaskedPredictionTable table;
  table.block_count = blocks;
  table.subsets = subsets;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < sweeps.size(); ++i)
    if (sweeps[i]) rows.push_back(i);
  table.baseline.resize(static_cast<Eigen::Index>(rows.size()));
  table.scores.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(subsets.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    table.baseline(k) = sweeps[rows[k]]->table.baseline(0);
    table.scores.row(k) = sweeps[rows[k]]->table.scores.row(0);
  }
  const ImportanceProfile corpus = block_importance_dataset(table);
  for (std::size_t i : rows) profiles[i] = corpus;
  return profiles;
}

void write_importance_artifacts(Context& ctx, const Profiles& profiles) {
  const RunConfig& cfg = ctx.cfg;
  const BlockGrid lattice = partition_grid(cfg.grid_rows, cfg.grid_cols, cfg.grid_rows, cfg.grid_cols);
  if (cfg.importance_mode == ImportanceMode::dataset_plcc) {
    for (const auto& p : profiles)
      if (p) {
        std::ostringstream os;
        write_importance_report(os, *p, lattice);
        write_text(ctx.out("importance.csv"), os.str());
        break;
      }
  }
  per_image<bool>(ctx, "importance", [&](const Item& item) {
    const auto& p = profiles[static_cast<std::size_t>(&item - ctx.items.data())];
    if (!p) return false;
    if (cfg.importance_mode == ImportanceMode::image_deviation) {
      std::ostringstream os;
      write_importance_report(os, *p, lattice);
      write_text(ctx.out(item.name + ".importance.csv"), os.str());
    }
    const ImageBuffer img = decode_image(item.path);
    encode_image(mask_render(img, p->important, cfg.grid_rows, cfg.grid_cols, ctx.polarity),
                 ctx.out(item.name + ".important.png"));
    encode_image(mask_render(img, p->trivial, cfg.grid_rows, cfg.grid_cols, ctx.polarity),
                 ctx.out(item.name + ".trivial.png"));
    return true;
  });
}

int cmd_importance(Context& ctx) {
  const Profiles profiles = compute_importance(ctx);
  if (count_ok(profiles) == 0) {
    ctx.log->warn("importance: every image failed");
    return 1;
  }
  write_importance_artifacts(ctx, profiles);
  return 0;
}

using MeasureSets = std::vector<std::optional<std::vector<MeasureMap>>>;

std::optional<MeasureMap> external_objectness(const Context& ctx, const Item& item) {
  if (!ctx.cfg.objectness_dir) return std::nullopt;
  for (const char* ext : {".smp", ".pgm", ".png", ".ppm"}) {
    const fs::path p = *ctx.cfg.objectness_dir / (item.path.stem().string() + ext);
    if (fs::exists(p)) return load_measure_map(p, MeasureKind::objectness);
  }
  throw std::runtime_error("no external objectness map for " + item.path.stem().string());
}

MeasureSets compute_measure_sets(Context& ctx, bool write_artifacts) {
  return per_image<std::vector<MeasureMap>>(ctx, "measures", [&](const Item& item) {
    const ImageBuffer img = decode_image(item.path);
    auto maps = compute_measures(img, ctx.cfg.pixels_per_degree, external_objectness(ctx, item));
    if (write_artifacts) {
      for (const MeasureMap& m : maps) {
        save_measure_map(m, ctx.out(item.name + "." + to_string(m.kind) + ".smp"));
        render_heatmap(m, ctx.out(item.name + "." + to_string(m.kind) + ".pgm"));
      }
    }
    return maps;
  });
}

int cmd_measures(Context& ctx) {
  const MeasureSets sets = compute_measure_sets(ctx, true);
  ctx.log->info("measures: " + std::to_string(count_ok(sets)) + "/" + std::to_string(sets.size()) + " images");
  return count_ok(sets) == 0 ? 1 : 0;
}

int run_match(Context& ctx, const Profiles& profiles, const MeasureSets& sets) {
  std::vector<MatchResult> results;
  for (std::size_t i = 0; i < ctx.items.size(); ++i) {
    if (!profiles[i] || !sets[i]) continue;
    const MeasureMap& first = sets[i]->front();
    const BlockGrid pixels = partition_grid(first.height(), first.width(), ctx.cfg.grid_rows, ctx.cfg.grid_cols);
    const auto regions =
        block_set_to_pixel_regions(BlockSet::full(pixels.block_count()), pixels, first.height(), first.width());
    try {
      for (const MeasureMap& m : *sets[i])
        results.push_back(match_all_thresholds(ctx.items[i].name, m.kind, profiles[i]->important,
                                               region_means(m, regions)));
    } catch (const std::exception& e) {
      ctx.log->warn("match: skipping " + ctx.items[i].path.string() + ": " + e.what());
    }
  }
  if (results.empty()) {
    ctx.log->warn("match: no image produced both an importance split and measures");
    return 1;
  }
  std::ostringstream per_image_report, table;
  write_match_report(per_image_report, results);
  write_matching_degree_table(table, results, ctx.cfg.thresholds);
  write_text(ctx.out("match.csv"), per_image_report.str());
  write_text(ctx.out("matching_degree.csv"), table.str());
  ctx.log->info("match: " + std::to_string(results.size() / 4) + " images matched against 4 measures");
  return 0;
}

int cmd_match(Context& ctx) {
  const Profiles profiles = compute_importance(ctx);
  const MeasureSets sets = compute_measure_sets(ctx, false);
  return run_match(ctx, profiles, sets);
}

int run_ablate(Context& ctx, const Profiles& profiles) {
  std::vector<ImageBuffer> images;
  std::vector<RegionSplit> splits;
  std::vector<double> mos;
  bool all_mos = true;
  for (std::size_t i = 0; i < ctx.items.size(); ++i) {
    if (!profiles[i]) continue;
    try {
      images.push_back(decode_image(ctx.items[i].path));
    } catch (const std::exception& e) {
      ctx.log->warn("ablate: skipping " + ctx.items[i].path.string() + ": " + e.what());
      continue;
    }
    splits.push_back({profiles[i]->important, profiles[i]->trivial});
    all_mos = all_mos && ctx.items[i].mos.has_value();
    mos.push_back(ctx.items[i].mos.value_or(0.0));
  }
  const AblationResult result =
      ablation_study(images, image_predictor(ctx), splits, ctx.cfg.grid_rows, ctx.cfg.grid_cols,
                     all_mos ? std::optional(mos) : std::nullopt);
  const std::vector<std::pair<std::string, std::string>> meta{
      {"images", std::to_string(images.size())},
      {"predictor", ctx.cfg.predictor.to_string()},
      {"seed", std::to_string(ctx.cfg.encoder.seed)},
      {"importance_mode", to_string(ctx.cfg.importance_mode)},
      {"grid", std::to_string(ctx.cfg.grid_rows) + "x" + std::to_string(ctx.cfg.grid_cols)},
      {"ground_truth", all_mos ? "yes" : "no"},
  };
  std::ostringstream os;
  write_ablation_report(os, result, meta);
  write_text(ctx.out("ablation.csv"), os.str());
  ctx.log->info("ablate: PLCC important-zeroed " + format_real(result.plcc_pred_vs_zeroed_important) +
                ", trivial-zeroed " + format_real(result.plcc_pred_vs_zeroed_trivial));
  return 0;
}

int cmd_ablate(Context& ctx) { return run_ablate(ctx, compute_importance(ctx)); }

int cmd_report(Context& ctx) {
  const Profiles profiles = compute_importance(ctx);
  if (count_ok(profiles) == 0) {
    ctx.log->warn("report: every image failed");
    return 1;
  }
  write_importance_artifacts(ctx, profiles);
  const MeasureSets sets = compute_measure_sets(ctx, true);
  int status = run_match(ctx, profiles, sets);
  status |= run_ablate(ctx, profiles);
  return status;
}

// ---- argument handling -----------------------------------------------------

std::vector<Item> collect_items(const std::string& dataset, const std::vector<std::string>& images) {
  std::vector<Item> items;
  if (!dataset.empty()) {
    for (DatasetRecord& r : load_dataset(dataset)) items.push_back({std::move(r.image_path), {}, r.mos});
  }
  for (const std::string& p : images) items.push_back({fs::path(p), {}, std::nullopt});
  if (items.empty()) throw ConfigError("no input images (pass image paths or --dataset)");

  std::map<std::string, int> stems;
  for (const Item& it : items) ++stems[it.path.stem().string()];
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string stem = items[i].path.stem().string();
    items[i].name = stems[stem] > 1 ? stem + "_" + std::to_string(i) : stem;
  }
  return items;
}

struct Overrides {
  std::string config_path;
  std::string dataset;
  std::vector<std::string> images;
  std::string output, mode, predictor, weights, objectness_dir, polarity = "blackout";
  int grid_rows = 0, grid_cols = 0, subset_cap = -1, jobs = -1, stride = 0, channels = 0;
  std::uint64_t seed = 0, subset_seed = 0;
  double ppd = 0;
  std::vector<int> thresholds;
  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  o.opts["config"] = cmd->add_option("--config", o.config_path, "JSON run configuration (default: $QREGION_CONFIG)");
  o.opts["dataset"] = cmd->add_option("--dataset", o.dataset, "CSV with image_path[,mos]");
  cmd->add_option("images", o.images, "Image files (PNG/PGM/PPM)");
  o.opts["output"] = cmd->add_option("-o,--output", o.output, "Output directory");
  o.opts["grid-rows"] = cmd->add_option("--grid-rows", o.grid_rows, "Block grid rows");
  o.opts["grid-cols"] = cmd->add_option("--grid-cols", o.grid_cols, "Block grid columns");
  o.opts["mode"] = cmd->add_option("--mode", o.mode, "Importance mode: deviation or plcc");
  o.opts["subset-cap"] = cmd->add_option("--subset-cap", o.subset_cap, "Subsets per cardinality (0 = all)");
  o.opts["subset-seed"] = cmd->add_option("--subset-seed", o.subset_seed, "Seed for subset sampling");
  o.opts["seed"] = cmd->add_option("--seed", o.seed, "Encoder weight seed");
  o.opts["weights"] = cmd->add_option("--weights", o.weights, "QWT1 encoder weight file");
  o.opts["predictor"] = cmd->add_option("--predictor", o.predictor,
                                        "builtin_encoder, builtin_heuristic or bridge:<command>");
  o.opts["ppd"] = cmd->add_option("--ppd,--pixels-per-degree", o.ppd, "Pixels per degree of visual angle");
  o.opts["thresholds"] = cmd->add_option("--thresholds", o.thresholds, "Matching thresholds, e.g. 1,2,3,4,5")
                             ->delimiter(',');
  o.opts["jobs"] = cmd->add_option("-j,--jobs", o.jobs, "Worker threads (0 = all cores)");
  o.opts["stride"] = cmd->add_option("--stride", o.stride, "Built-in feature stride in pixels");
  o.opts["channels"] = cmd->add_option("--channels", o.channels, "Built-in feature channels");
  o.opts["objectness-dir"] = cmd->add_option("--objectness-dir", o.objectness_dir,
                                             "Directory of external objectness maps named <stem>.smp/.pgm/.png");
  o.opts["polarity"] = cmd->add_option("--polarity", o.polarity,
                                       "Mask renders: blackout (selected half black) or show (selected half visible)");
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg;
  std::string path = o.config_path;
  if (path.empty())
    if (const char* env = std::getenv("QREGION_CONFIG"); env && *env) path = env;
  if (!path.empty()) cfg = load_run_config(path);

  if (o.given("grid-rows")) cfg.grid_rows = o.grid_rows;
  if (o.given("grid-cols")) cfg.grid_cols = o.grid_cols;
  if (o.given("mode")) {
    try {
      cfg.importance_mode = parse_importance_mode(o.mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (o.given("subset-cap")) cfg.subset_cap = o.subset_cap;
  if (o.given("subset-seed")) cfg.subset_seed = o.subset_seed;
  if (o.given("seed")) cfg.encoder.seed = o.seed;
  if (o.given("weights")) cfg.weights_file = o.weights;
  if (o.given("predictor")) cfg.predictor = PredictorSpec::parse(o.predictor);
  if (o.given("ppd")) cfg.pixels_per_degree = o.ppd;
  if (o.given("thresholds")) cfg.thresholds = o.thresholds;
  if (o.given("output")) cfg.output_dir = o.output;
  if (o.given("jobs")) cfg.jobs = o.jobs;
  if (o.given("stride")) cfg.stride = o.stride;
  if (o.given("channels")) cfg.channels = o.channels;
  if (o.given("objectness-dir")) cfg.objectness_dir = o.objectness_dir;
  cfg.validate();
  if (cfg.weights_file && !fs::exists(*cfg.weights_file))
    throw ConfigError("weights file not found: " + cfg.weights_file->string());
  return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Region importance and semantic-measure analysis for image quality predictors", "qregion"};
  app.require_subcommand(1);

  const std::map<std::string, std::pair<std::string, int (*)(Context&)>> commands{
      {"extract", {"Write built-in or bridge feature matrices (FMX) per image", cmd_extract}},
      {"importance", {"Masked-prediction sweep and important/trivial split per image", cmd_importance}},
      {"measures", {"Saliency, frequency, objectness and averaged maps per image", cmd_measures}},
      {"match", {"Matching degree between measures and importance splits", cmd_match}},
      {"ablate", {"Zero-region ablation of important vs trivial halves", cmd_ablate}},
      {"report", {"Run importance, measures, match and ablate into one directory", cmd_report}},
  };
  std::map<std::string, Overrides> overrides;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, entry] : commands) {
    subs[name] = app.add_subcommand(name, entry.first);
    add_common_options(subs[name], overrides[name]);
  }

  std::vector<const char*> argv{"qregion"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  for (const auto& [name, entry] : commands) {
    if (!subs[name]->parsed()) continue;
    const Overrides& o = overrides[name];
    Context ctx;
    try {
      ctx.cfg = resolve_config(o);
      if (o.polarity == "show")
        ctx.polarity = MaskPolarity::show_selected;
      else if (o.polarity != "blackout")
        throw ConfigError("--polarity must be 'blackout' or 'show'");
      ctx.items = collect_items(o.dataset, o.images);
      fs::create_directories(ctx.cfg.output_dir);
      ctx.log = std::make_unique<Log>(out, ctx.cfg.output_dir / "run.log");
    } catch (const std::exception& e) {
      err << "qregion " << name << ": " << e.what() << '\n';
      return 2;
    }
    try {
      ctx.log->info(name + ": " + std::to_string(ctx.items.size()) + " images, grid " +
                    std::to_string(ctx.cfg.grid_rows) + "x" + std::to_string(ctx.cfg.grid_cols));
      const int status = entry.second(ctx);
      if (ctx.bridge) ctx.bridge->close();
      return status;
    } catch (const std::exception& e) {
      err << "qregion " << name << ": " << e.what() << '\n';
      return 1;
    }
  }
  return 1;
}

}  // namespace qregion
