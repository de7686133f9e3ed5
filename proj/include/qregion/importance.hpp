#pragma once

// Region importance from exhaustive (or sampled) masked predictions.
//
// Each image is scored once unmasked (the baseline) and once per block subset
// with that subset masked. Two indicators are derived from the table:
//   dataset_plcc     per subset, PLCC across images of masked vs baseline
//                    scores; a block's score is the mean PLCC over subsets
//                    containing it. Lower means more important.
//   image_deviation  per image, mean |masked - baseline| over subsets
//                    containing the block. Higher means more important.

#include "qregion/encoder.hpp"
#include "qregion/grid.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qregion {

enum class ImportanceMode { dataset_plcc, image_deviation };

std::string to_string(ImportanceMode mode);
/// Accepts "plcc"/"dataset_plcc" and "deviation"/"image_deviation".
ImportanceMode parse_importance_mode(const std::string& text);

/// Score of one prepared image with the given blocks masked. The empty set
/// yields the baseline.
using MaskedScorer = std::function<double(const BlockSet&)>;
/// Prepares an image (e.g. tokenizes it once) and returns its scorer.
using ScorerFactory = std::function<MaskedScorer(const FeatureMatrix&)>;

class SweepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MaskedPredictionTable {
  int block_count = 0;
  std::vector<BlockSet> subsets;
  Eigen::VectorXd baseline;  // one per image
  Eigen::MatrixXd scores;    // images x subsets

  int image_count() const { return static_cast<int>(baseline.size()); }
};

struct ImportanceProfile {
  ImportanceMode mode = ImportanceMode::image_deviation;
  std::vector<double> block_scores;
  BlockSet important;
  BlockSet trivial;
  std::size_t subset_count = 0;
};

MaskedPredictionTable masked_prediction_sweep(std::span<const FeatureMatrix> images,
                                              const ScorerFactory& predictor, int block_count,
                                              std::span<const BlockSet> subsets);

/// Needs at least 3 images. Per subset PLCC between masked and baseline
/// scores; 1 when they coincide, 0 when the masked scores are constant.
/// Throws DegenerateVarianceError when the baseline is constant.
ImportanceProfile block_importance_dataset(const MaskedPredictionTable& table);

ImportanceProfile block_importance_image(const MaskedPredictionTable& table, int image);

/// Important half first. Odd block counts give the important side the extra
/// block; ties go to the lower block index.
std::pair<BlockSet, BlockSet> split_half(std::span<const double> block_scores, ImportanceMode mode);

/// Up to `per_cardinality_cap` subsets of every cardinality 1..b-1, drawn
/// uniformly without replacement when C(b, n) exceeds the cap. Output is in
/// enumeration order.
std::vector<BlockSet> sample_subsets(int block_count, int per_cardinality_cap, std::uint64_t seed);

/// Masked scorer backed by the encoder; features are tokenized once per image.
template <typename Scalar>
ScorerFactory encoder_scorer(EncoderWeights<Scalar> weights, BlockGrid grid) {
  struct Model {
    EncoderWeights<Scalar> weights;
    BlockGrid grid;
  };
  auto model = std::make_shared<const Model>(Model{std::move(weights), std::move(grid)});
  return [model](const FeatureMatrix& features) {
    auto base = std::make_shared<const TokenSequence<Scalar>>(
        tokenize(features, model->weights, BlockSet(model->grid.block_count()), model->grid));
    return MaskedScorer([model, base](const BlockSet& blocks) {
      TokenSequence<Scalar> seq = *base;
      seq.apply_mask(blocks, model->grid);
      return forward(seq, model->weights);
    });
  };
}

/// `block_index,row,col,score,group` per block followed by a `# mode=...` line.
void write_importance_report(std::ostream& os, const ImportanceProfile& profile, const BlockGrid& grid);

}  // namespace qregion
