#pragma once

// Forward-only transformer encoder over feature-grid tokens with positional
// key masking. A dedicated quality token is prepended to the grid tokens; the
// quality head reads its final embedding.

#include "qregion/binary_io.hpp"
#include "qregion/grid.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

namespace qregion {

class AllKeysMaskedError : public std::invalid_argument {
 public:
  AllKeysMaskedError() : std::invalid_argument("attention needs at least one unmasked key") {}
};

struct EncoderConfig {
  int embed_dim = 64;
  int num_heads = 4;
  int num_layers = 2;
  int mlp_dim = 128;
  double mask_logit_value = -1e9;
  std::uint64_t seed = 0;

  int head_dim() const { return embed_dim / num_heads; }
  /// Throws std::invalid_argument.
  void validate() const;
};

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
struct LayerWeights {
  RowMatrix<Scalar> query, key, value, output;
  RowVector<Scalar> query_bias, key_bias, value_bias, output_bias;
  RowVector<Scalar> norm1_scale, norm1_offset;
  RowMatrix<Scalar> mlp_in;
  RowVector<Scalar> mlp_in_bias;
  RowMatrix<Scalar> mlp_out;
  RowVector<Scalar> mlp_out_bias;
  RowVector<Scalar> norm2_scale, norm2_offset;
};

template <typename Scalar>
struct EncoderWeights {
  EncoderConfig config;
  int channels = 0;
  RowVector<Scalar> quality_token;
  RowMatrix<Scalar> input_projection;  // channels x embed_dim
  RowVector<Scalar> input_bias;
  std::vector<LayerWeights<Scalar>> layers;
  RowVector<Scalar> head;  // embed_dim
  Scalar head_bias = 0;

  bool all_finite() const;
  friend bool operator==(const EncoderWeights& a, const EncoderWeights& b) {
    return a.serialize() == b.serialize();
  }

  /// Visits every parameter array in file order: quality_token, input
  /// projection, input bias, then per layer query, query bias, key, key bias,
  /// value, value bias, output, output bias, norm1 scale/offset, mlp_in,
  /// mlp_in bias, mlp_out, mlp_out bias, norm2 scale/offset, then head and
  /// head bias. Matrices are row-major.
  template <typename Fn>
  void for_each_array(Fn&& fn);
  template <typename Fn>
  void for_each_array(Fn&& fn) const;

 private:
  std::vector<float> serialize() const;
};

/// Grid coordinate of a token; the quality token sits at (-1, -1).
struct TokenPosition {
  int row = -1;
  int col = -1;
  bool is_quality() const { return row < 0; }
};

template <typename Scalar>
struct TokenSequence {
  RowMatrix<Scalar> tokens;  // length x embed_dim
  std::vector<TokenPosition> positions;
  std::vector<bool> mask;  // true = masked as an attention key

  int size() const { return static_cast<int>(tokens.rows()); }
  int masked_count() const;
  /// Sets mask flags for the grid tokens from a block set. The quality token
  /// stays unmasked.
  void apply_mask(const BlockSet& blocks, const BlockGrid& grid);
};

/// Deterministic weights from config.seed, uniform with variance 1/fan_in.
/// The input projection uses variance 1/(2 fan_in).
template <typename Scalar = float>
EncoderWeights<Scalar> init_weights(const EncoderConfig& config, int channels);

/// Fixed 2-D sinusoidal encoding; the first half of the embedding encodes the
/// row, the second half the column.
template <typename Scalar = float>
RowVector<Scalar> positional_encoding(int row, int col, int embed_dim);

template <typename Scalar>
TokenSequence<Scalar> tokenize(const FeatureMatrix& features, const EncoderWeights<Scalar>& weights,
                               const BlockSet& mask_blocks, const BlockGrid& grid);

/// Row-normalized softmax of Q K^T / sqrt(d) with `mask_logit_value` added to
/// every logit whose key is masked.
template <typename Scalar>
RowMatrix<Scalar> attention_weights(const RowMatrix<Scalar>& queries, const RowMatrix<Scalar>& keys,
                                    const std::vector<bool>& key_mask, Scalar mask_logit_value);

template <typename Scalar>
RowMatrix<Scalar> masked_attention(const RowMatrix<Scalar>& queries, const RowMatrix<Scalar>& keys,
                                   const RowMatrix<Scalar>& values, const std::vector<bool>& key_mask,
                                   Scalar mask_logit_value);

template <typename Scalar>
double forward(const TokenSequence<Scalar>& tokens, const EncoderWeights<Scalar>& weights);

template <typename Scalar>
double predict(const FeatureMatrix& features, const BlockSet& mask_blocks,
               const EncoderWeights<Scalar>& weights, const BlockGrid& grid) {
  return forward(tokenize(features, weights, mask_blocks, grid), weights);
}

/// QWT1 weight file. The mask constant and seed are not stored; loaded
/// weights carry the defaults.
template <typename Scalar>
void save_weights(const EncoderWeights<Scalar>& weights, const std::filesystem::path& path);
template <typename Scalar = float>
EncoderWeights<Scalar> load_weights(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

namespace detail {

// Uniform in [-1, 1) from the top 53 bits of a 64-bit draw.
inline double uniform_symmetric(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
}

template <typename Derived>
void fill_uniform(Eigen::MatrixBase<Derived>& m, std::mt19937_64& rng, double bound) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = static_cast<typename Derived::Scalar>(bound * uniform_symmetric(rng));
}

template <typename Scalar>
RowMatrix<Scalar> layer_norm(const RowMatrix<Scalar>& x, const RowVector<Scalar>& scale,
                             const RowVector<Scalar>& offset) {
  constexpr Scalar kEps = Scalar(1e-6);
  RowMatrix<Scalar> out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const Scalar mean = row.mean();
    const Scalar var = (row.array() - mean).square().mean();
    out.row(i) = ((row.array() - mean) / std::sqrt(var + kEps)).matrix().cwiseProduct(scale) + offset;
  }
  return out;
}

template <typename Scalar>
Scalar gelu(Scalar x) {
  constexpr Scalar kC = Scalar(0.7978845608028654);  // sqrt(2/pi)
  return Scalar(0.5) * x * (Scalar(1) + std::tanh(kC * (x + Scalar(0.044715) * x * x * x)));
}

}  // namespace detail

template <typename Scalar>
template <typename Fn>
void EncoderWeights<Scalar>::for_each_array(Fn&& fn) {
  fn(quality_token);
  fn(input_projection);
  fn(input_bias);
  for (auto& l : layers) {
    fn(l.query), fn(l.query_bias), fn(l.key), fn(l.key_bias);
    fn(l.value), fn(l.value_bias), fn(l.output), fn(l.output_bias);
    fn(l.norm1_scale), fn(l.norm1_offset);
    fn(l.mlp_in), fn(l.mlp_in_bias), fn(l.mlp_out), fn(l.mlp_out_bias);
    fn(l.norm2_scale), fn(l.norm2_offset);
  }
  fn(head);
  Eigen::Map<RowVector<Scalar>> bias(&head_bias, 1);
  fn(bias);
}

template <typename Scalar>
template <typename Fn>
void EncoderWeights<Scalar>::for_each_array(Fn&& fn) const {
  const_cast<EncoderWeights*>(this)->for_each_array([&](const auto& a) { fn(a); });
}

template <typename Scalar>
std::vector<float> EncoderWeights<Scalar>::serialize() const {
  std::vector<float> flat{static_cast<float>(config.embed_dim), static_cast<float>(config.num_heads),
                          static_cast<float>(config.num_layers), static_cast<float>(config.mlp_dim),
                          static_cast<float>(channels)};
  for_each_array([&](const auto& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) flat.push_back(static_cast<float>(a(i, j)));
  });
  return flat;
}

template <typename Scalar>
bool EncoderWeights<Scalar>::all_finite() const {
  bool ok = std::isfinite(head_bias);
  for_each_array([&](const auto& a) { ok = ok && a.allFinite(); });
  return ok;
}

template <typename Scalar>
int TokenSequence<Scalar>::masked_count() const {
  return static_cast<int>(std::count(mask.begin(), mask.end(), true));
}

template <typename Scalar>
void TokenSequence<Scalar>::apply_mask(const BlockSet& blocks, const BlockGrid& grid) {
  const FeatureMask fm = block_set_to_feature_mask(blocks, grid);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const TokenPosition& p = positions[i];
    mask[i] = !p.is_quality() && fm(p.row, p.col);
  }
}

template <typename Scalar>
EncoderWeights<Scalar> init_weights(const EncoderConfig& config, int channels) {
  config.validate();
  if (channels <= 0) throw std::invalid_argument("encoder input channels must be positive");
  const int d = config.embed_dim;
  const int m = config.mlp_dim;
  const auto bound = [](int fan_in) { return std::sqrt(3.0 / fan_in); };

  EncoderWeights<Scalar> w;
  w.config = config;
  w.channels = channels;
  std::mt19937_64 rng(config.seed);

  w.quality_token = RowVector<Scalar>(d);
  detail::fill_uniform(w.quality_token, rng, std::sqrt(3.0));
  w.input_projection = RowMatrix<Scalar>(channels, d);
  detail::fill_uniform(w.input_projection, rng, bound(2 * channels));
  w.input_bias = RowVector<Scalar>::Zero(d);

  w.layers.resize(config.num_layers);
  for (auto& l : w.layers) {
    for (RowMatrix<Scalar>* p : {&l.query, &l.key, &l.value, &l.output}) {
      *p = RowMatrix<Scalar>(d, d);
      detail::fill_uniform(*p, rng, bound(d));
    }
    l.query_bias = l.key_bias = l.value_bias = l.output_bias = RowVector<Scalar>::Zero(d);
    l.norm1_scale = l.norm2_scale = RowVector<Scalar>::Ones(d);
    l.norm1_offset = l.norm2_offset = RowVector<Scalar>::Zero(d);
    l.mlp_in = RowMatrix<Scalar>(d, m);
    detail::fill_uniform(l.mlp_in, rng, bound(d));
    l.mlp_in_bias = RowVector<Scalar>::Zero(m);
    l.mlp_out = RowMatrix<Scalar>(m, d);
    detail::fill_uniform(l.mlp_out, rng, bound(m));
    l.mlp_out_bias = RowVector<Scalar>::Zero(d);
  }
  w.head = RowVector<Scalar>(d);
  detail::fill_uniform(w.head, rng, bound(d));
  w.head_bias = Scalar(3);
  return w;
}

template <typename Scalar>
RowVector<Scalar> positional_encoding(int row, int col, int embed_dim) {
  RowVector<Scalar> pe(embed_dim);
  const int row_dims = embed_dim / 2;
  const auto fill = [&](int offset, int count, int pos) {
    for (int j = 0; j < count; ++j) {
      const int pair = j / 2;
      const double freq = std::pow(10000.0, -2.0 * pair / std::max(count, 1));
      const double angle = pos * freq;
      pe(offset + j) = static_cast<Scalar>(j % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  };
  fill(0, row_dims, row);
  fill(row_dims, embed_dim - row_dims, col);
  return pe;
}

template <typename Scalar>
TokenSequence<Scalar> tokenize(const FeatureMatrix& features, const EncoderWeights<Scalar>& weights,
                               const BlockSet& mask_blocks, const BlockGrid& grid) {
  if (features.channels != weights.channels)
    throw DimensionError("feature channels " + std::to_string(features.channels) +
                         " do not match encoder input channels " + std::to_string(weights.channels));
  if (grid.rows() != features.rows || grid.cols() != features.cols)
    throw DimensionError("block grid does not match feature matrix dimensions");

  const int d = weights.config.embed_dim;
  const int n = features.positions();
  TokenSequence<Scalar> seq;
  seq.tokens.resize(n + 1, d);
  seq.tokens.row(0) = weights.quality_token;
  seq.tokens.bottomRows(n).noalias() = features.data.template cast<Scalar>() * weights.input_projection;
  seq.tokens.bottomRows(n).rowwise() += weights.input_bias;
  seq.positions.resize(n + 1);
  for (int r = 0; r < features.rows; ++r) {
    for (int c = 0; c < features.cols; ++c) {
      const int i = 1 + r * features.cols + c;
      seq.tokens.row(i) += positional_encoding<Scalar>(r, c, d);
      seq.positions[i] = {r, c};
    }
  }
  seq.mask.assign(n + 1, false);
  seq.apply_mask(mask_blocks, grid);
  return seq;
}

template <typename Scalar>
RowMatrix<Scalar> attention_weights(const RowMatrix<Scalar>& queries, const RowMatrix<Scalar>& keys,
                                    const std::vector<bool>& key_mask, Scalar mask_logit_value) {
  if (static_cast<Eigen::Index>(key_mask.size()) != keys.rows())
    throw DimensionError("key mask length does not match key count");
  if (queries.cols() != keys.cols()) throw DimensionError("query/key width mismatch");
  if (std::all_of(key_mask.begin(), key_mask.end(), [](bool b) { return b; }))
    throw AllKeysMaskedError();

  RowVector<Scalar> bias(keys.rows());
  for (Eigen::Index j = 0; j < keys.rows(); ++j) bias(j) = key_mask[j] ? mask_logit_value : Scalar(0);

  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(queries.cols()));
  RowMatrix<Scalar> logits = (queries * keys.transpose()) * scale;
  logits.rowwise() += bias;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    const Scalar top = row.maxCoeff();
    row = row.unaryExpr([top](Scalar v) { return std::exp(v - top); });
    row /= row.sum();
  }
  return logits;
}

template <typename Scalar>
RowMatrix<Scalar> masked_attention(const RowMatrix<Scalar>& queries, const RowMatrix<Scalar>& keys,
                                   const RowMatrix<Scalar>& values, const std::vector<bool>& key_mask,
                                   Scalar mask_logit_value) {
  if (values.rows() != keys.rows()) throw DimensionError("key/value count mismatch");
  return attention_weights(queries, keys, key_mask, mask_logit_value) * values;
}

template <typename Scalar>
double forward(const TokenSequence<Scalar>& seq, const EncoderWeights<Scalar>& weights) {
  const EncoderConfig& cfg = weights.config;
  if (seq.tokens.cols() != cfg.embed_dim) throw DimensionError("token width does not match embed_dim");
  if (static_cast<int>(seq.mask.size()) != seq.size() ||
      static_cast<int>(seq.positions.size()) != seq.size())
    throw DimensionError("token sequence fields disagree in length");
  if (seq.size() == 0 || !seq.positions[0].is_quality() || seq.mask[0])
    throw std::invalid_argument("token sequence must start with an unmasked quality token");

  const Scalar mask_value = static_cast<Scalar>(cfg.mask_logit_value);
  const int dh = cfg.head_dim();
  RowMatrix<Scalar> x = seq.tokens;
  for (const LayerWeights<Scalar>& l : weights.layers) {
    RowMatrix<Scalar> q = x * l.query;
    q.rowwise() += l.query_bias;
    RowMatrix<Scalar> k = x * l.key;
    k.rowwise() += l.key_bias;
    RowMatrix<Scalar> v = x * l.value;
    v.rowwise() += l.value_bias;

    RowMatrix<Scalar> heads(x.rows(), cfg.embed_dim);
    for (int h = 0; h < cfg.num_heads; ++h) {
      heads.middleCols(h * dh, dh) =
          masked_attention<Scalar>(q.middleCols(h * dh, dh), k.middleCols(h * dh, dh),
                                   v.middleCols(h * dh, dh), seq.mask, mask_value);
    }
    RowMatrix<Scalar> attended = heads * l.output;
    attended.rowwise() += l.output_bias;
    x = detail::layer_norm<Scalar>(x + attended, l.norm1_scale, l.norm1_offset);

    RowMatrix<Scalar> hidden = x * l.mlp_in;
    hidden.rowwise() += l.mlp_in_bias;
    hidden = hidden.unaryExpr([](Scalar s) { return detail::gelu(s); });
    RowMatrix<Scalar> mlp = hidden * l.mlp_out;
    mlp.rowwise() += l.mlp_out_bias;
    x = detail::layer_norm<Scalar>(x + mlp, l.norm2_scale, l.norm2_offset);
  }
  return static_cast<double>(x.row(0).dot(weights.head) + weights.head_bias);
}

template <typename Scalar>
void save_weights(const EncoderWeights<Scalar>& weights, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  binary::write_magic(os, "QWT1");
  for (int v : {weights.config.embed_dim, weights.config.num_heads, weights.config.num_layers,
                weights.config.mlp_dim, weights.channels})
    binary::write_u32(os, static_cast<std::uint32_t>(v));
  weights.for_each_array([&](const auto& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) binary::write_f32(os, static_cast<float>(a(i, j)));
  });
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

template <typename Scalar>
EncoderWeights<Scalar> load_weights(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  binary::expect_magic(is, "QWT1");
  EncoderConfig cfg;
  cfg.embed_dim = static_cast<int>(binary::read_u32(is, "QWT1 header"));
  cfg.num_heads = static_cast<int>(binary::read_u32(is, "QWT1 header"));
  cfg.num_layers = static_cast<int>(binary::read_u32(is, "QWT1 header"));
  cfg.mlp_dim = static_cast<int>(binary::read_u32(is, "QWT1 header"));
  const int channels = static_cast<int>(binary::read_u32(is, "QWT1 header"));
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("QWT1 header: ") + e.what());
  }
  if (channels <= 0 || channels > (1 << 20)) throw FormatError("QWT1 header: bad channel count");

  EncoderWeights<Scalar> w = init_weights<Scalar>(cfg, channels);
  w.for_each_array([&](auto& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const float f = binary::read_f32(is, "QWT1 weights");
        if (!std::isfinite(f)) throw FormatError("QWT1 weights contain non-finite values");
        a(i, j) = static_cast<Scalar>(f);
      }
  });
  return w;
}

extern template EncoderWeights<float> init_weights<float>(const EncoderConfig&, int);
extern template TokenSequence<float> tokenize<float>(const FeatureMatrix&, const EncoderWeights<float>&,
                                                     const BlockSet&, const BlockGrid&);
extern template double forward<float>(const TokenSequence<float>&, const EncoderWeights<float>&);
extern template EncoderWeights<double> init_weights<double>(const EncoderConfig&, int);
extern template TokenSequence<double> tokenize<double>(const FeatureMatrix&, const EncoderWeights<double>&,
                                                       const BlockSet&, const BlockGrid&);
extern template double forward<double>(const TokenSequence<double>&, const EncoderWeights<double>&);

}  // namespace qregion
