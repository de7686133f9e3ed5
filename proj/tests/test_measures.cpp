#include "qregion/measures.hpp"

#include "support/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace qregion;

namespace {

ImageBuffer impulse(int size, int r, int c) {
  ImageBuffer img = qtest::constant_image(size, size, 0.2f, 1);
  img.at(r, c, 0) = 1.0f;
  return img;
}

ImageBuffer mirrored(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < img.channels; ++ch) out.at(r, img.width - 1 - c, ch) = img.at(r, c, ch);
  return out;
}

ImageBuffer centred_texture_disk(int size, double radius) {
  ImageBuffer img = qtest::constant_image(size, size, 0.5f, 1);
  const double mid = 0.5 * (size - 1);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c)
      if (std::hypot(r - mid, c - mid) < radius) img.at(r, c, 0) = ((r / 2 + c / 2) % 2) ? 0.9f : 0.1f;
  return img;
}

double range(const Plane& p) { return p.maxCoeff() - p.minCoeff(); }

MeasureMap map_of(const Plane& p, MeasureKind kind = MeasureKind::saliency) { return {kind, p}; }

}  // namespace

TEST_SUITE("measures") {
  TEST_CASE("saliency of a constant image is flat") {
    const MeasureMap m = spectral_residual_saliency(qtest::constant_image(64, 80, 0.4f));
    CHECK(m.height() == 64);
    CHECK(m.width() == 80);
    CHECK(range(m.values) <= 1e-6);
  }

  TEST_CASE("saliency peaks at an isolated impulse") {
    for (auto [r, c] : {std::pair{10, 10}, {40, 22}, {55, 3}}) {
      const MeasureMap m = spectral_residual_saliency(impulse(64, r, c));
      Eigen::Index pr = 0, pc = 0;
      m.values.maxCoeff(&pr, &pc);
      CHECK(std::max(std::abs(pr - r), std::abs(pc - c)) <= 3);
      CHECK(m.values.maxCoeff() == doctest::Approx(1.0));
    }
  }

  TEST_CASE("saliency commutes with a mirror") {
    const ImageBuffer img = qtest::textured_scene(12, 64, 96);
    const Plane a = spectral_residual_saliency(img).values;
    const Plane b = spectral_residual_saliency(mirrored(img)).values;
    CHECK((a - b.rowwise().reverse()).abs().maxCoeff() <= 1e-5);
  }

  TEST_CASE("saliency handles images larger than the working size") {
    const MeasureMap m = spectral_residual_saliency(qtest::textured_scene(3, 300, 200));
    CHECK(m.height() == 300);
    CHECK(m.width() == 200);
    CHECK(m.values.allFinite());
    CHECK(m.values.minCoeff() >= 0.0);
    CHECK(m.values.maxCoeff() == doctest::Approx(1.0));
  }

  TEST_CASE("saliency rejects tiny images") {
    CHECK_THROWS_AS(spectral_residual_saliency(qtest::constant_image(7, 64, 0.5f)), DimensionError);
  }

  TEST_CASE("band edges partition [0, 50]") {
    const BandDecomposition d = band_decompose(qtest::textured_scene(1, 32, 32));
    REQUIRE(d.edges.size() == 11u);
    for (int k = 0; k <= 10; ++k) CHECK(d.edges[k] == doctest::Approx(5.0 * k));
    CHECK(d.center(1) == doctest::Approx(7.5));
    CHECK(d.responses.size() == 10u);
    CHECK_THROWS_AS(band_decompose(qtest::textured_scene(1, 32, 32), 0.0), std::invalid_argument);
  }

  TEST_CASE("constant image has no band energy") {
    const BandDecomposition d = band_decompose(qtest::constant_image(48, 64, 0.7f));
    for (int k = 0; k < 10; ++k) CHECK(d.magnitude(k).maxCoeff() <= 1e-9);
    CHECK(frequency_measure(d).values.maxCoeff() <= 1e-9);
  }

  TEST_CASE("a 7.5 cycles/degree grating lands in band 1") {
    // 0.075 cycles/pixel at 100 pixels/degree; 80 columns hold exactly six periods
    const BandDecomposition d = band_decompose(qtest::horizontal_sinusoid(40, 80, 0.075, 0.3));
    double total = 0;
    for (int k = 0; k < 10; ++k) total += d.energy(k);
    REQUIRE(total > 0);
    CHECK(d.energy(1) / total >= 0.8);
  }

  TEST_CASE("a non-periodic grating still concentrates in its band") {
    const BandDecomposition d = band_decompose(qtest::horizontal_sinusoid(64, 97, 0.075, 0.3));
    double total = 0;
    for (int k = 0; k < 10; ++k) total += d.energy(k);
    CHECK(d.energy(1) / total >= 0.8);
  }

  TEST_CASE("band responses are linear and bounded by the signal energy") {
    const Plane x = qtest::textured_scene(5, 40, 56).luma();
    const Plane y = qtest::textured_scene(6, 40, 56).luma();
    const BandDecomposition dx = band_decompose(x), dy = band_decompose(y), dxy = band_decompose(x + 2.0 * y);
    double band_sum = 0;
    for (int k = 0; k < 10; ++k) {
      CHECK((dxy.responses[k] - dx.responses[k] - 2.0 * dy.responses[k]).abs().maxCoeff() <= 1e-6);
      band_sum += dx.energy(k);
    }
    const Plane centred = x - x.mean();
    CHECK(band_sum <= centred.square().sum() * (1 + 1e-9));

    const BandDecomposition coarse = band_decompose(x, 50.0);
    Plane recon = Plane::Zero(x.rows(), x.cols());
    for (int k = 0; k < 10; ++k) recon += coarse.responses[k];
    CHECK((recon - centred).abs().maxCoeff() <= 1e-9);
  }

  TEST_CASE("contrast sensitivity curve") {
    CHECK(csf_weight(0.0) == 0.0);
    CHECK_THROWS_AS(csf_weight(-0.1), std::invalid_argument);
    double best_f = 0, best = -1;
    for (int i = 0; i <= 5000; ++i) {
      const double f = 0.01 * i;
      const double v = csf_weight(f);
      if (v > best) {
        best = v;
        best_f = f;
      }
    }
    CHECK(best_f >= 6.0);
    CHECK(best_f <= 9.0);
    CHECK(csf_peak_frequency() == doctest::Approx(best_f).epsilon(0.01));
    for (int i = 1; i <= 5000; ++i) {
      const double f0 = 0.01 * (i - 1), f1 = 0.01 * i;
      if (f1 <= best_f)
        REQUIRE(csf_weight(f1) >= csf_weight(f0));
      else if (f0 >= best_f)
        REQUIRE(csf_weight(f1) <= csf_weight(f0));
    }
    CHECK(csf_weight(50.0) < csf_weight(8.0));
  }

  TEST_CASE("frequency measure scales with contrast and favours texture") {
    const ImageBuffer low = qtest::horizontal_sinusoid(40, 80, 0.075, 0.1);
    const ImageBuffer high = qtest::horizontal_sinusoid(40, 80, 0.075, 0.2);
    const Plane a = frequency_measure(band_decompose(low)).values;
    const Plane b = frequency_measure(band_decompose(high)).values;
    CHECK((b - 2.0 * a).abs().maxCoeff() <= 1e-6 * b.maxCoeff());

    ImageBuffer ramp(64, 64, 1);
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) ramp.at(r, c, 0) = 0.2f + 0.6f * c / 63.0f;
    const double texture = frequency_measure(band_decompose(qtest::horizontal_sinusoid(64, 64, 0.125, 0.3))).values.mean();
    const double smooth = frequency_measure(band_decompose(ramp)).values.mean();
    CHECK(texture > smooth);
    CHECK_THROWS_AS(frequency_measure(BandDecomposition{}), std::invalid_argument);
  }

  TEST_CASE("external objectness passes through with clamping") {
    const ImageBuffer img = qtest::textured_scene(2, 32, 48);
    Plane p(32, 48);
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = -0.5 + 2.0 * static_cast<double>(i) / (p.size() - 1);
    const MeasureMap m = objectness(img, map_of(p, MeasureKind::objectness));
    CHECK(m.kind == MeasureKind::objectness);
    CHECK((m.values - p.max(0.0).min(1.0)).abs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(objectness(img, map_of(Plane::Zero(31, 48))), DimensionError);
    Plane bad = Plane::Zero(32, 48);
    bad(3, 3) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(objectness(img, map_of(bad)), std::domain_error);
  }

  TEST_CASE("objectness proxy") {
    CHECK(objectness(qtest::constant_image(64, 64, 0.5f)).values.maxCoeff() <= 1e-9);

    const ImageBuffer img = centred_texture_disk(96, 20);
    const Plane o = objectness(img).values;
    CHECK(o.maxCoeff() == doctest::Approx(1.0));
    double inside = 0, outside = 0;
    int ni = 0, no = 0;
    for (int r = 0; r < 96; ++r)
      for (int c = 0; c < 96; ++c) {
        if (std::hypot(r - 47.5, c - 47.5) < 20) {
          inside += o(r, c);
          ++ni;
        } else {
          outside += o(r, c);
          ++no;
        }
      }
    CHECK(inside / ni > 2.0 * (outside / no));
  }

  TEST_CASE("average fusion") {
    std::mt19937_64 rng(21);
    Plane a(8, 10), b(8, 10);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a(i) = qtest::uniform(rng, -3, 3);
      b(i) = qtest::uniform(rng, 0, 100);
    }
    const std::vector<MeasureMap> one{map_of(a)};
    const Plane norm_a = (a - a.minCoeff()) / (a.maxCoeff() - a.minCoeff());
    CHECK((fuse_average(one).values - norm_a).abs().maxCoeff() <= 1e-12);
    const std::vector<MeasureMap> twice{map_of(norm_a), map_of(norm_a)};
    CHECK((fuse_average(twice).values - norm_a).abs().maxCoeff() <= 1e-12);

    const std::vector<MeasureMap> flat{map_of(Plane::Zero(8, 10)), map_of(Plane::Ones(8, 10))};
    CHECK((fuse_average(flat).values - 0.5).abs().maxCoeff() == 0.0);

    const std::vector<MeasureMap> ab{map_of(a), map_of(b)}, ba{map_of(b), map_of(a)};
    const Plane fab = fuse_average(ab).values;
    CHECK((fab - fuse_average(ba).values).abs().maxCoeff() <= 1e-15);
    CHECK(fab.minCoeff() >= 0.0);
    CHECK(fab.maxCoeff() <= 1.0);
    CHECK(fuse_average(ab).kind == MeasureKind::averaged);

    const std::vector<MeasureMap> mismatched{map_of(a), map_of(Plane::Zero(8, 9))};
    CHECK_THROWS_AS(fuse_average(mismatched), DimensionError);
    CHECK_THROWS_AS(fuse_average(std::span<const MeasureMap>{}), std::invalid_argument);
  }

  TEST_CASE("compute_measures returns the four maps in order") {
    const auto maps = compute_measures(qtest::textured_scene(4, 48, 64));
    REQUIRE(maps.size() == 4u);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(maps[i].kind == kAllMeasures[i]);
      CHECK(maps[i].height() == 48);
      CHECK(maps[i].width() == 64);
      CHECK(maps[i].values.allFinite());
    }
  }

  TEST_CASE("region means") {
    const MeasureMap flat = map_of(Plane::Constant(24, 32, 0.25));
    const BlockGrid g = partition_grid(24, 32);
    const auto rects = block_set_to_pixel_regions(BlockSet::full(12), g, 24, 32);
    for (double m : region_means(flat, rects)) CHECK(m == 0.25);

    Plane p = Plane::Zero(24, 32);
    p.block(0, 0, 8, 8).setOnes();
    const auto means = region_means(map_of(p), rects);
    CHECK(means[0] == 1.0);
    for (std::size_t i = 1; i < 12; ++i) CHECK(means[i] == 0.0);

    std::mt19937_64 rng(4);
    Plane q(25, 33);
    for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = qtest::uniform(rng);
    const BlockGrid g2 = partition_grid(25, 33);
    const auto rects2 = block_set_to_pixel_regions(BlockSet::full(12), g2, 25, 33);
    const auto means2 = region_means(map_of(q), rects2);
    double weighted = 0;
    for (std::size_t i = 0; i < 12; ++i) weighted += means2[i] * rects2[i].area();
    CHECK(weighted / q.size() == doctest::Approx(q.mean()).epsilon(1e-12));

    const std::vector<PixelRect> empty{PixelRect{3, 3, 0, 4}};
    CHECK_THROWS_AS(region_means(flat, empty), std::invalid_argument);
    const std::vector<PixelRect> outside{PixelRect{0, 25, 0, 4}};
    CHECK_THROWS_AS(region_means(flat, outside), std::out_of_range);
  }

  TEST_CASE("SMP round trip and kind names") {
    qtest::TempDir dir;
    std::mt19937_64 rng(9);
    Plane p(5, 7);
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = static_cast<float>(qtest::uniform(rng));
    save_measure_map(map_of(p, MeasureKind::frequency), dir / "m.smp");
    const MeasureMap back = load_measure_map_smp(dir / "m.smp", MeasureKind::frequency);
    CHECK(back.kind == MeasureKind::frequency);
    CHECK((back.values - p).abs().maxCoeff() == 0.0);
    CHECK(std::filesystem::file_size(dir / "m.smp") == 12u + 4u * 35u);
    for (MeasureKind k : kAllMeasures) CHECK(parse_measure_kind(to_string(k)) == k);
    CHECK_THROWS(parse_measure_kind("sharpness"));
  }
}
