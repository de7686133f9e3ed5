#include "qregion/features.hpp"

#include "support/synthetic.hpp"

#include <doctest.h>

#include <complex>
#include <fstream>
#include <numbers>

using namespace qregion;

namespace {

// Direct O(N^4) DFT energy split for a small luma plane.
qregion::HeuristicTerms direct_terms(const ImageBuffer& img) {
  const Plane y = img.luma();
  const int h = static_cast<int>(y.rows()), w = static_cast<int>(y.cols());
  const double mean = y.mean();
  double total = 0, mid = 0;
  for (int u = 0; u < h; ++u) {
    for (int v = 0; v < w; ++v) {
      if (u == 0 && v == 0) continue;
      std::complex<double> acc = 0;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
          acc += (y(r, c) - mean) * std::polar(1.0, -2.0 * std::numbers::pi * (double(u) * r / h + double(v) * c / w));
      const double fu = (u <= h / 2 ? u : u - h) / double(h);
      const double fv = (v <= w / 2 ? v : v - w) / double(w);
      const double rho = std::sqrt(fu * fu + fv * fv);
      total += std::norm(acc);
      if (rho >= 0.05 && rho <= 0.25) mid += std::norm(acc);
    }
  }
  double grad = 0;
  for (int r = 0; r + 1 < h; ++r)
    for (int c = 0; c + 1 < w; ++c) {
      const double gx = y(r, c + 1) - y(r, c), gy = y(r + 1, c) - y(r, c);
      grad += std::sqrt(gx * gx + gy * gy);
    }
  return {grad / ((h - 1) * (w - 1)), total > 0 ? mid / total : 0.0};
}

ImageBuffer checker(int size, int cell) {
  ImageBuffer img(size, size, 1);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) img.at(r, c, 0) = ((r / cell + c / cell) % 2) ? 0.9f : 0.1f;
  return img;
}

ImageBuffer box_blur(const ImageBuffer& img, int radius, int passes) {
  ImageBuffer out = img;
  for (int p = 0; p < passes; ++p) {
    ImageBuffer next = out;
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c) {
        double s = 0;
        int n = 0;
        for (int dr = -radius; dr <= radius; ++dr)
          for (int dc = -radius; dc <= radius; ++dc) {
            const int rr = std::clamp(r + dr, 0, img.height - 1), cc = std::clamp(c + dc, 0, img.width - 1);
            s += out.at(rr, cc, 0);
            ++n;
          }
        next.at(r, c, 0) = static_cast<float>(s / n);
      }
    out = next;
  }
  return out;
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("output geometry follows the stride") {
    CHECK(extract_builtin(qtest::textured_scene(1, 768, 1024)).rows == 24);
    const FeatureMatrix fm = extract_builtin(qtest::textured_scene(1, 768, 1024));
    CHECK(fm.cols == 32);
    CHECK(fm.channels == 16);
    const FeatureMatrix small = extract_builtin(qtest::textured_scene(2, 96, 128));
    CHECK(small.rows == 3);
    CHECK(small.cols == 4);
    const FeatureMatrix odd = extract_builtin(qtest::textured_scene(2, 100, 70), {16, 5, true});
    CHECK(odd.rows == 6);
    CHECK(odd.cols == 4);
    CHECK(odd.channels == 5);
  }

  TEST_CASE("constant image has zero spread features before standardisation") {
    const FeatureMatrix fm = extract_builtin(qtest::constant_image(64, 96, 0.5f), {32, 16, false});
    for (int r = 0; r < fm.rows; ++r)
      for (int c = 0; c < fm.cols; ++c) {
        for (int k : {kStdR, kStdG, kStdB, kGradientMean, kLaplacianEnergy}) CHECK(fm.at(r, c)(k) == 0.0f);
        CHECK(fm.at(r, c)(kMeanR) == 0.5f);
      }
  }

  TEST_CASE("too-small images are rejected") {
    CHECK_THROWS_AS(extract_builtin(qtest::constant_image(31, 64, 0.5f)), ImageTooSmallError);
    CHECK_THROWS_AS(extract_builtin(qtest::constant_image(64, 20, 0.5f)), ImageTooSmallError);
  }

  TEST_CASE("standardised channels have zero mean and unit spread") {
    const FeatureMatrix fm = extract_builtin(qtest::textured_scene(9, 192, 256));
    for (int k = 0; k < fm.channels; ++k) {
      const Eigen::ArrayXd v = fm.data.col(k).cast<double>().array();
      CHECK(std::abs(v.mean()) < 1e-5);
      const double sd = std::sqrt((v - v.mean()).square().mean());
      CHECK(sd == doctest::Approx(1.0).epsilon(1e-4));
    }
  }

  TEST_CASE("patch features depend only on the patch") {
    const ImageBuffer a = qtest::textured_scene(4, 96, 128);
    ImageBuffer b = qtest::textured_scene(5, 96, 128);
    for (int r = 32; r < 64; ++r)
      for (int c = 64; c < 96; ++c)
        for (int ch = 0; ch < 3; ++ch) b.at(r, c, ch) = a.at(r, c, ch);
    const ExtractOptions raw{32, 16, false};
    const FeatureMatrix fa = extract_builtin(a, raw), fb = extract_builtin(b, raw);
    CHECK(fa.at(1, 2) == fb.at(1, 2));
    CHECK(fa.at(0, 0) != fb.at(0, 0));
  }

  TEST_CASE("FMX round trip is bit exact") {
    qtest::TempDir dir;
    std::mt19937_64 rng(77);
    for (auto [r, c, k] : {std::tuple{1, 1, 1}, {3, 4, 16}, {24, 32, 7}, {5, 2, 33}}) {
      FeatureMatrix fm = qtest::random_features(rng, r, c, k);
      fm.data(fm.data.rows() - 1, 0) = std::numeric_limits<float>::denorm_min();
      fm.data(0, 0) = -0.0f;
      export_feature_matrix(fm, dir / "m.fmx");
      const FeatureMatrix back = import_feature_matrix(dir / "m.fmx");
      CHECK(back == fm);
      CHECK(std::signbit(back.data(0, 0)));
      CHECK(std::filesystem::file_size(dir / "m.fmx") == 16u + 4u * r * c * k);
    }
  }

  TEST_CASE("FMX layout is little endian, channel fastest") {
    qtest::TempDir dir;
    FeatureMatrix fm(1, 2, 2);
    fm.data << 1.0f, 2.0f, 3.0f, -4.0f;
    export_feature_matrix(fm, dir / "m.fmx");
    const std::string bytes = qtest::read_file(dir / "m.fmx");
    CHECK(bytes.substr(0, 4) == "FMX1");
    CHECK(bytes.substr(4, 4) == std::string("\x01\x00\x00\x00", 4));
    CHECK(bytes.substr(8, 4) == std::string("\x02\x00\x00\x00", 4));
    CHECK(bytes.substr(16, 4) == std::string("\x00\x00\x80\x3f", 4));  // 1.0f
    CHECK(bytes.substr(28, 4) == std::string("\x00\x00\x80\xc0", 4));  // -4.0f
  }

  TEST_CASE("malformed FMX files are rejected") {
    qtest::TempDir dir;
    std::mt19937_64 rng(1);
    export_feature_matrix(qtest::random_features(rng, 2, 2, 3), dir / "ok.fmx");
    const std::string good = qtest::read_file(dir / "ok.fmx");

    std::ofstream(dir / "magic.fmx", std::ios::binary) << "FMX2" << good.substr(4);
    CHECK_THROWS_AS(import_feature_matrix(dir / "magic.fmx"), FormatError);

    std::string header = "FMX1";
    for (std::uint32_t v : {24u, 32u, 2048u}) header.append(reinterpret_cast<const char*>(&v), 4);
    std::ofstream(dir / "short.fmx", std::ios::binary) << header << std::string(400, '\0');
    CHECK_THROWS_AS(import_feature_matrix(dir / "short.fmx"), TruncationError);

    std::ofstream(dir / "hdr.fmx", std::ios::binary) << "FMX1" << std::string(5, '\0');
    CHECK_THROWS_AS(import_feature_matrix(dir / "hdr.fmx"), TruncationError);

    std::string zero = "FMX1";
    for (std::uint32_t v : {0u, 2u, 2u}) zero.append(reinterpret_cast<const char*>(&v), 4);
    std::ofstream(dir / "zero.fmx", std::ios::binary) << zero;
    CHECK_THROWS_AS(import_feature_matrix(dir / "zero.fmx"), FormatError);

    std::string nan = good;
    const float bad = std::numeric_limits<float>::infinity();
    nan.replace(20, 4, reinterpret_cast<const char*>(&bad), 4);
    std::ofstream(dir / "nan.fmx", std::ios::binary) << nan;
    CHECK_THROWS_AS(import_feature_matrix(dir / "nan.fmx"), FormatError);
  }

  TEST_CASE("heuristic score: constant image sits at the bottom of the range") {
    CHECK(baseline_heuristic_score(qtest::constant_image(64, 64, 0.3f)) == 1.0);
    const ImageBuffer img = qtest::textured_scene(3, 64, 64);
    const double s = baseline_heuristic_score(img);
    CHECK(s == baseline_heuristic_score(img));
    CHECK(s > 1.0);
    CHECK(s <= 5.0);
  }

  TEST_CASE("heuristic terms match a direct transform") {
    for (const ImageBuffer& img : {checker(32, 4), box_blur(checker(32, 4), 2, 3), qtest::textured_scene(8, 24, 40)}) {
      const HeuristicTerms lib = heuristic_terms(img);
      const HeuristicTerms ref = direct_terms(img);
      CHECK(lib.gradient_mean == doctest::Approx(ref.gradient_mean).epsilon(1e-9));
      CHECK(lib.midband_ratio == doctest::Approx(ref.midband_ratio).epsilon(1e-9));
    }
  }

  TEST_CASE("sharp checker scores above its blurred version") {
    const ImageBuffer sharp = checker(64, 4);
    const ImageBuffer blurred = box_blur(sharp, 2, 3);
    const HeuristicTerms ts = direct_terms(sharp), tb = direct_terms(blurred);
    CHECK(ts.gradient_mean > tb.gradient_mean);
    CHECK(baseline_heuristic_score(sharp) > baseline_heuristic_score(blurred));
  }
}
