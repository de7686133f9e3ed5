#include "qregion/importance.hpp"

#include "qregion/format.hpp"
#include "qregion/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

namespace qregion {

std::string to_string(ImportanceMode mode) {
  return mode == ImportanceMode::dataset_plcc ? "dataset_plcc" : "image_deviation";
}

ImportanceMode parse_importance_mode(const std::string& text) {
  if (text == "plcc" || text == "dataset_plcc") return ImportanceMode::dataset_plcc;
  if (text == "deviation" || text == "image_deviation") return ImportanceMode::image_deviation;
  throw std::invalid_argument("unknown importance mode '" + text + "'");
}

MaskedPredictionTable masked_prediction_sweep(std::span<const FeatureMatrix> images,
                                              const ScorerFactory& predictor, int block_count,
                                              std::span<const BlockSet> subsets) {
  if (images.empty()) throw std::invalid_argument("sweep needs at least one image");
  if (subsets.empty()) throw std::invalid_argument("sweep needs at least one subset");
  for (const BlockSet& s : subsets) {
    if (s.block_count() != block_count) throw std::invalid_argument("subset block count mismatch");
    if (s.empty()) throw std::invalid_argument("empty subset requested; the baseline is scored separately");
    if (s.size() == block_count) throw std::invalid_argument("subset masks every block");
  }

  MaskedPredictionTable table;
  table.block_count = block_count;
  table.subsets.assign(subsets.begin(), subsets.end());
  table.baseline.resize(static_cast<Eigen::Index>(images.size()));
  table.scores.resize(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(subsets.size()));

  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "image " + std::to_string(i);
    MaskedScorer score;
    try {
      score = predictor(images[i]);
      table.baseline(i) = score(BlockSet(block_count));
    } catch (const std::exception& e) {
      throw SweepError(where + ", baseline: " + e.what());
    }
    for (std::size_t j = 0; j < subsets.size(); ++j) {
      try {
        table.scores(i, j) = score(subsets[j]);
      } catch (const std::exception& e) {
        throw SweepError(where + ", subset bits 0x" + std::to_string(subsets[j].bits()) + ": " + e.what());
      }
    }
  }
  return table;
}

namespace {

ImportanceProfile make_profile(ImportanceMode mode, std::vector<double> scores, std::size_t subsets) {
  ImportanceProfile p;
  p.mode = mode;
  std::tie(p.important, p.trivial) = split_half(scores, mode);
  p.block_scores = std::move(scores);
  p.subset_count = subsets;
  return p;
}

double population_variance(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / n;
}

double subset_plcc(std::span<const double> masked, std::span<const double> base) {
  bool equal = true;
  for (std::size_t i = 0; i < base.size() && equal; ++i) equal = std::abs(masked[i] - base[i]) <= 1e-12;
  if (equal) return 1.0;
  if (population_variance(base) <= 1e-12)
    throw DegenerateVarianceError("baseline scores are constant across images");
  if (population_variance(masked) <= 1e-12) return 0.0;
  return pearson(masked, base);
}

}  // namespace

ImportanceProfile block_importance_dataset(const MaskedPredictionTable& table) {
  if (table.image_count() < 3) throw std::invalid_argument("dataset importance needs at least 3 images");
  const std::vector<double> base(table.baseline.data(), table.baseline.data() + table.baseline.size());

  std::vector<double> sum(table.block_count, 0.0);
  std::vector<int> count(table.block_count, 0);
  std::vector<double> masked(base.size());
  for (std::size_t j = 0; j < table.subsets.size(); ++j) {
    for (std::size_t i = 0; i < base.size(); ++i) masked[i] = table.scores(i, j);
    const double r = subset_plcc(masked, base);
    for (int b : table.subsets[j].indices()) {
      sum[b] += r;
      ++count[b];
    }
  }
  std::vector<double> scores(table.block_count);
  for (int b = 0; b < table.block_count; ++b) {
    if (count[b] == 0) throw std::invalid_argument("block " + std::to_string(b) + " is never masked");
    scores[b] = sum[b] / count[b];
  }
  return make_profile(ImportanceMode::dataset_plcc, std::move(scores), table.subsets.size());
}

ImportanceProfile block_importance_image(const MaskedPredictionTable& table, int image) {
  if (image < 0 || image >= table.image_count()) throw std::out_of_range("image index out of range");
  std::vector<double> sum(table.block_count, 0.0);
  std::vector<int> count(table.block_count, 0);
  const double base = table.baseline(image);
  for (std::size_t j = 0; j < table.subsets.size(); ++j) {
    const double dev = std::abs(table.scores(image, j) - base);
    for (int b : table.subsets[j].indices()) {
      sum[b] += dev;
      ++count[b];
    }
  }
  std::vector<double> scores(table.block_count);
  for (int b = 0; b < table.block_count; ++b) {
    if (count[b] == 0) throw std::invalid_argument("block " + std::to_string(b) + " is never masked");
    scores[b] = sum[b] / count[b];
  }
  return make_profile(ImportanceMode::image_deviation, std::move(scores), table.subsets.size());
}

std::pair<BlockSet, BlockSet> split_half(std::span<const double> block_scores, ImportanceMode mode) {
  const int n = static_cast<int>(block_scores.size());
  if (n < 1 || n > BlockSet::kMaxBlocks) throw std::invalid_argument("split_half: bad block count");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return mode == ImportanceMode::image_deviation ? block_scores[a] > block_scores[b]
                                                   : block_scores[a] < block_scores[b];
  });
  BlockSet important(n);
  for (int k = 0; k < (n + 1) / 2; ++k) important.insert(order[k]);
  return {important, important.complement()};
}

namespace {

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return x % bound;
}

// Floyd's algorithm: a uniform random n-subset of [0, b).
std::uint64_t random_subset(std::mt19937_64& rng, int b, int n) {
  std::uint64_t bits = 0;
  for (int j = b - n; j < b; ++j) {
    const int t = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(j) + 1));
    const std::uint64_t tb = std::uint64_t{1} << t;
    bits |= (bits & tb) ? (std::uint64_t{1} << j) : tb;
  }
  return bits;
}

}  // namespace

std::vector<BlockSet> sample_subsets(int block_count, int per_cardinality_cap, std::uint64_t seed) {
  if (per_cardinality_cap < 1) throw std::invalid_argument("per-cardinality cap must be >= 1");
  if (block_count < 2 || block_count > BlockSet::kMaxBlocks)
    throw std::out_of_range("block count must be in [2, 64]");

  std::mt19937_64 rng(seed);
  std::vector<BlockSet> out;
  for (int n = 1; n < block_count; ++n) {
    const std::uint64_t total = binomial(block_count, n);
    const auto cap = static_cast<std::uint64_t>(per_cardinality_cap);
    if (total <= cap) {
      const auto all = enumerate_block_subsets(block_count, n, n);
      out.insert(out.end(), all.begin(), all.end());
      continue;
    }
    std::set<std::uint64_t> picked;
    while (picked.size() < cap) picked.insert(random_subset(rng, block_count, n));
    for (std::uint64_t bits : picked) out.emplace_back(block_count, bits);
  }
  return out;
}

void write_importance_report(std::ostream& os, const ImportanceProfile& profile, const BlockGrid& grid) {
  if (static_cast<int>(profile.block_scores.size()) != grid.block_count())
    throw std::invalid_argument("profile and grid disagree on block count");
  os << "block_index,row,col,score,group\n";
  for (int b = 0; b < grid.block_count(); ++b) {
    os << b << ',' << grid.block_row(b) << ',' << grid.block_col(b) << ','
       << format_real(profile.block_scores[b]) << ','
       << (profile.important.contains(b) ? "important" : "trivial") << '\n';
  }
  os << "# mode=" << to_string(profile.mode) << ",subsets=" << profile.subset_count << '\n';
}

}  // namespace qregion
