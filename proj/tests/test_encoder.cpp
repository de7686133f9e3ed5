#include "qregion/encoder.hpp"

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace qregion;

namespace {

constexpr double kPinnedBase = 3.2764315605163574;
constexpr double kPinnedMasked = 3.0787651538848877;

FeatureMatrix zscored(FeatureMatrix fm) {
  for (Eigen::Index j = 0; j < fm.data.cols(); ++j) {
    auto col = fm.data.col(j);
    const float mean = col.mean();
    col.array() -= mean;
    const float sd = std::sqrt(col.squaredNorm() / static_cast<float>(col.size()));
    col /= (sd + 1e-8f);
  }
  return fm;
}

template <typename S>
TokenSequence<S> drop_masked(const TokenSequence<S>& seq) {
  TokenSequence<S> out;
  std::vector<int> keep;
  for (int i = 0; i < seq.size(); ++i)
    if (!seq.mask[i]) keep.push_back(i);
  out.tokens.resize(static_cast<Eigen::Index>(keep.size()), seq.tokens.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.tokens.row(static_cast<Eigen::Index>(k)) = seq.tokens.row(keep[k]);
    out.positions.push_back(seq.positions[keep[k]]);
  }
  out.mask.assign(keep.size(), false);
  return out;
}

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("config validation") {
    EncoderConfig c;
    CHECK_NOTHROW(c.validate());
    c.num_heads = 5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.mask_logit_value = -1e7;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.num_layers = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }

  TEST_CASE("weights are a pure function of the seed") {
    const EncoderConfig c;
    const auto a = init_weights<float>(c, 16);
    const auto b = init_weights<float>(c, 16);
    CHECK(a == b);
    CHECK(a.all_finite());
    EncoderConfig other = c;
    other.seed = 1;
    CHECK_FALSE(a == init_weights<float>(other, 16));
  }

  TEST_CASE("weight shapes follow the config") {
    EncoderConfig c;
    c.embed_dim = 32;
    c.num_heads = 2;
    c.num_layers = 3;
    c.mlp_dim = 48;
    const auto w = init_weights<float>(c, 7);
    CHECK(w.input_projection.rows() == 7);
    CHECK(w.input_projection.cols() == 32);
    CHECK(w.layers.size() == 3);
    CHECK(w.layers[0].mlp_in.cols() == 48);
    CHECK(w.layers[2].mlp_out.rows() == 48);
    CHECK(w.head.size() == 32);
  }

  TEST_CASE("first-layer logits stay in range on unit-variance input") {
    std::mt19937_64 rng(11);
    float worst = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      EncoderConfig c;
      c.seed = seed;
      const auto w = init_weights<float>(c, 16);
      const FeatureMatrix fm = zscored(qtest::random_features(rng, 24, 32, 16));
      const auto seq = tokenize(fm, w, BlockSet(12), partition_grid(24, 32));
      const RowMatrix<float> q = seq.tokens * w.layers[0].query;
      const RowMatrix<float> k = seq.tokens * w.layers[0].key;
      const int dh = c.head_dim();
      for (int h = 0; h < c.num_heads; ++h) {
        const RowMatrix<float> logits =
            q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose() / std::sqrt(float(dh));
        worst = std::max(worst, logits.cwiseAbs().maxCoeff());
      }
    }
    MESSAGE("largest first-layer logit magnitude: " << worst);
    CHECK(worst <= 10.0f);
  }

  TEST_CASE("token counts") {
    const auto w = init_weights<float>(EncoderConfig{}, 16);
    std::mt19937_64 rng(3);
    const FeatureMatrix fm = qtest::random_features(rng, 24, 32, 16);
    const BlockGrid g = partition_grid(24, 32);
    const auto plain = tokenize(fm, w, BlockSet(12), g);
    CHECK(plain.size() == 769);
    CHECK(plain.masked_count() == 0);
    const auto half = tokenize(fm, w, BlockSet::of(12, {0, 2, 4, 6, 8, 10}), g);
    CHECK(half.size() == 769);
    CHECK(half.masked_count() == 384);
    CHECK(half.positions[0].is_quality());
    CHECK_FALSE(half.mask[0]);

    const FeatureMatrix small = qtest::random_features(rng, 2, 2, 16);
    CHECK(tokenize(small, w, BlockSet(1), partition_grid(2, 2, 1, 1)).size() == 5);
  }

  TEST_CASE("tokenize rejects mismatched inputs") {
    const auto w = init_weights<float>(EncoderConfig{}, 16);
    std::mt19937_64 rng(3);
    CHECK_THROWS_AS(tokenize(qtest::random_features(rng, 6, 8, 8), w, BlockSet(12), partition_grid(6, 8)),
                    DimensionError);
    CHECK_THROWS_AS(tokenize(qtest::random_features(rng, 6, 8, 16), w, BlockSet(12), partition_grid(24, 32)),
                    DimensionError);
  }

  TEST_CASE("a single surviving key takes all the attention") {
    std::mt19937_64 rng(8);
    const int L = 9;
    RowMatrix<float> q(L, 16), k(L, 16);
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      q.data()[i] = static_cast<float>(qtest::normal(rng));
      k.data()[i] = static_cast<float>(qtest::normal(rng));
    }
    for (int j = 0; j < L; ++j) {
      std::vector<bool> mask(L, true);
      mask[j] = false;
      const auto a = attention_weights<float>(q, k, mask, -1e9f);
      for (int i = 0; i < L; ++i) {
        CHECK(a(i, j) == 1.0f);
        for (int m = 0; m < L; ++m)
          if (m != j) CHECK(a(i, m) == 0.0f);
      }
    }
  }

  TEST_CASE("zero logits give uniform weights") {
    const int L = 7;
    const RowMatrix<float> zero = RowMatrix<float>::Zero(L, 4);
    const auto a = attention_weights<float>(zero, zero, std::vector<bool>(L, false), -1e9f);
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) CHECK(a(i, j) == doctest::Approx(1.0 / L).epsilon(1e-6));
  }

  TEST_CASE("masked keys receive exactly zero weight") {
    std::mt19937_64 rng(21);
    const int L = 40;
    RowMatrix<float> q(L, 16), k(L, 16), v(L, 16);
    for (auto* m : {&q, &k, &v})
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = static_cast<float>(3.0 * qtest::normal(rng));
    std::vector<bool> mask(L);
    for (int i = 0; i < L; ++i) mask[i] = (rng() & 1U) != 0;
    mask[0] = false;
    const auto a = attention_weights<float>(q, k, mask, -1e9f);
    for (int i = 0; i < L; ++i) {
      CHECK(a.row(i).sum() == doctest::Approx(1.0).epsilon(1e-5));
      for (int j = 0; j < L; ++j)
        if (mask[j]) CHECK(a(i, j) == 0.0f);
    }
    CHECK(masked_attention<float>(q, k, v, mask, -1e9f).allFinite());
  }

  TEST_CASE("all keys masked is an error") {
    const RowMatrix<float> m = RowMatrix<float>::Ones(3, 4);
    CHECK_THROWS_AS(attention_weights<float>(m, m, std::vector<bool>(3, true), -1e9f), AllKeysMaskedError);
    const auto w = init_weights<float>(EncoderConfig{}, 4);
    auto seq = tokenize(FeatureMatrix(2, 2, 4), w, BlockSet(4), partition_grid(2, 2, 2, 2));
    seq.mask[0] = true;
    CHECK_THROWS(forward(seq, w));
  }

  TEST_CASE("forward is pure") {
    std::mt19937_64 rng(4);
    const auto w = init_weights<float>(EncoderConfig{}, 16);
    const FeatureMatrix fm = qtest::random_features(rng, 6, 8, 16);
    const BlockGrid g = partition_grid(6, 8);
    const double a = predict(fm, BlockSet::of(12, {2, 5}), w, g);
    const double b = predict(fm, BlockSet::of(12, {2}), w, g);
    const double c = predict(fm, BlockSet::of(12, {5}), w, g);
    const double d = predict(fm, BlockSet::of(12, {2, 5}), w, g);
    CHECK(a == d);
    CHECK(std::isfinite(b));
    CHECK(std::isfinite(c));
  }

  TEST_CASE("masked forward equals the reduced-sequence oracle") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 6; ++trial) {
      EncoderConfig c;
      c.seed = rng();
      const auto w = init_weights<float>(c, 16);
      const FeatureMatrix fm = qtest::random_features(rng, 6, 8, 16);
      const BlockGrid g = partition_grid(6, 8);
      const BlockSet masked(12, (rng() & 0xFFF) == 0xFFF ? 0x7FF : rng() & 0xFFF);
      const auto seq = tokenize(fm, w, masked, g);
      const double lib = forward(seq, w);
      const FeatureMask drop = block_set_to_feature_mask(masked, g);
      const double ref = qtest::reduced_sequence_forward(fm, w, [&](int r, int col) { return !drop(r, col); });
      CHECK(close_rel(lib, ref, 1e-4));
      CHECK(close_rel(lib, forward(drop_masked(seq), w), 1e-5));
    }
  }

  TEST_CASE("empty mask equals removing nothing") {
    std::mt19937_64 rng(12);
    const auto w = init_weights<float>(EncoderConfig{}, 16);
    const FeatureMatrix fm = qtest::random_features(rng, 6, 8, 16);
    const auto seq = tokenize(fm, w, BlockSet(12), partition_grid(6, 8));
    CHECK(forward(seq, w) == forward(drop_masked(seq), w));
  }

  TEST_CASE("only the unmasked block contributes when eleven are masked") {
    std::mt19937_64 rng(31);
    const auto w = init_weights<float>(EncoderConfig{}, 16);
    FeatureMatrix fm = qtest::random_features(rng, 24, 32, 16);
    const BlockGrid g = partition_grid(24, 32);
    const BlockSet masked = BlockSet::of(12, {7}).complement();
    const double before = predict(fm, masked, w, g);
    for (int b : masked.indices()) {
      const Extent& e = g.block(b);
      for (int r = e.row_begin; r < e.row_end; ++r)
        for (int c = e.col_begin; c < e.col_end; ++c) fm.at(r, c).reverseInPlace();
    }
    CHECK(predict(fm, masked, w, g) == before);
    fm.at(g.block(7).row_begin, g.block(7).col_begin)(0) += 1.0f;
    CHECK(predict(fm, masked, w, g) != before);
  }

  TEST_CASE("scores stay finite for large inputs") {
    std::mt19937_64 rng(2);
    const auto w = init_weights<float>(EncoderConfig{}, 16);
    FeatureMatrix fm = qtest::random_features(rng, 6, 8, 16);
    fm.data *= 1000.0f;
    CHECK(std::isfinite(predict(fm, BlockSet::of(12, {1, 3}), w, partition_grid(6, 8))));
  }

  TEST_CASE("single and double precision agree") {
    std::mt19937_64 rng(6);
    EncoderConfig c;
    c.seed = 17;
    const auto wf = init_weights<float>(c, 16);
    const auto wd = init_weights<double>(c, 16);
    const FeatureMatrix fm = qtest::random_features(rng, 6, 8, 16);
    const BlockGrid g = partition_grid(6, 8);
    const BlockSet m = BlockSet::of(12, {0, 4, 9});
    CHECK(close_rel(predict(fm, m, wf, g), predict(fm, m, wd, g), 1e-4));
  }

  TEST_CASE("pinned regression value for seed 0") {
    std::mt19937_64 rng(2024);
    const auto w = init_weights<float>(EncoderConfig{}, 16);
    const FeatureMatrix fm = qtest::random_features(rng, 6, 8, 16);
    const BlockGrid g = partition_grid(6, 8);
    const double base = predict(fm, BlockSet(12), w, g);
    const double masked = predict(fm, BlockSet::of(12, {2, 5}), w, g);
    CHECK(base == doctest::Approx(kPinnedBase).epsilon(1e-6));
    CHECK(masked == doctest::Approx(kPinnedMasked).epsilon(1e-6));
  }

  TEST_CASE("weight file round trip") {
    qtest::TempDir dir;
    EncoderConfig c;
    c.embed_dim = 16;
    c.num_heads = 2;
    c.num_layers = 1;
    c.mlp_dim = 24;
    c.seed = 5;
    const auto w = init_weights<float>(c, 6);
    save_weights(w, dir / "w.qwt");
    const auto loaded = load_weights<float>(dir / "w.qwt");
    CHECK(loaded == w);

    const std::string bytes = qtest::read_file(dir / "w.qwt");
    CHECK(bytes.substr(0, 4) == "QWT1");
    std::size_t floats = 0;
    w.for_each_array([&](const auto& a) { floats += static_cast<std::size_t>(a.size()); });
    CHECK(bytes.size() == 4 + 5 * 4 + floats * 4);
    CHECK(static_cast<unsigned char>(bytes[4]) == 16);
    CHECK(static_cast<unsigned char>(bytes[20]) == 6);

    std::ofstream(dir / "bad.qwt", std::ios::binary) << "QWT2" << bytes.substr(4);
    CHECK_THROWS_AS(load_weights<float>(dir / "bad.qwt"), FormatError);
    std::ofstream(dir / "short.qwt", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
    CHECK_THROWS_AS(load_weights<float>(dir / "short.qwt"), TruncationError);
  }
}
