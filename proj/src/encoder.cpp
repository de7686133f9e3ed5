#include "qregion/encoder.hpp"

namespace qregion {

void EncoderConfig::validate() const {
  if (embed_dim <= 0 || num_heads <= 0 || num_layers <= 0 || mlp_dim <= 0)
    throw std::invalid_argument("encoder dimensions must be positive");
  if (embed_dim % num_heads != 0)
    throw std::invalid_argument("embed_dim must be divisible by num_heads");
  if (!(mask_logit_value <= -1e8)) throw std::invalid_argument("mask_logit_value must be <= -1e8");
}

template EncoderWeights<float> init_weights<float>(const EncoderConfig&, int);
template TokenSequence<float> tokenize<float>(const FeatureMatrix&, const EncoderWeights<float>&,
                                              const BlockSet&, const BlockGrid&);
template double forward<float>(const TokenSequence<float>&, const EncoderWeights<float>&);
template EncoderWeights<double> init_weights<double>(const EncoderConfig&, int);
template TokenSequence<double> tokenize<double>(const FeatureMatrix&, const EncoderWeights<double>&,
                                                const BlockSet&, const BlockGrid&);
template double forward<double>(const TokenSequence<double>&, const EncoderWeights<double>&);

}  // namespace qregion
