#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "nastaliq/error.hpp"
#include "nastaliq/raster.hpp"
#include "oracles.hpp"

using namespace nastaliq;

namespace {

void write_raw(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

GrayImage random_image(std::size_t h, std::size_t w, Rng& rng) {
  std::vector<double> px(h * w);
  for (auto& v : px) v = rng.uniform01();
  return GrayImage(h, w, std::move(px));
}

}  // namespace

TEST(GrayImage, RejectsInvalid) {
  EXPECT_THROW(GrayImage(0, 3), Error);
  EXPECT_THROW(GrayImage(2, 2, std::vector<double>{0, 1, 1.5, 0}), Error);
  EXPECT_THROW(GrayImage(2, 2, std::vector<double>{0, 1, 1}), Error);
}

TEST(LoadImage, ScalesPgmBytes) {
  oracle::TempDir dir("raster");
  write_raw(dir / "a.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x80\xff", 4));
  const auto img = load_image(dir / "a.pgm");
  ASSERT_EQ(img.height(), 2u);
  ASSERT_EQ(img.width(), 2u);
  EXPECT_EQ(img.at(0, 0), 0.0);
  EXPECT_EQ(img.at(0, 1), 1.0);
  EXPECT_NEAR(img.at(1, 0), 128.0 / 255.0, 1e-15);
  EXPECT_EQ(img.at(1, 1), 1.0);
}

TEST(LoadImage, SinglePixel) {
  oracle::TempDir dir("raster");
  write_raw(dir / "one.pgm", std::string("P5 1 1 255\n") + "\xff");
  EXPECT_EQ(load_image(dir / "one.pgm"), GrayImage(1, 1, 1.0));
}

TEST(LoadImage, CommentsInHeader) {
  oracle::TempDir dir("raster");
  write_raw(dir / "c.pgm", std::string("P5\n# scanner\n1 2\n# depth\n255\n") + std::string("\x00\xff", 2));
  const auto img = load_image(dir / "c.pgm");
  EXPECT_EQ(img.height(), 2u);
  EXPECT_EQ(img.at(1, 0), 1.0);
}

TEST(LoadImage, Errors) {
  oracle::TempDir dir("raster");
  write_raw(dir / "trunc.pgm", "P5\n2");
  write_raw(dir / "short.pgm", std::string("P5\n2 2\n255\n") + std::string(1, '\0'));
  write_raw(dir / "zero.pgm", "P5\n0 2\n255\n");
  write_raw(dir / "bmp.bmp", "BM....");
  auto message = [](const std::filesystem::path& p) {
    try {
      load_image(p);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::data);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(dir / "trunc.pgm").find("unreadable file"), std::string::npos);
  EXPECT_NE(message(dir / "short.pgm").find("unreadable file"), std::string::npos);
  EXPECT_NE(message(dir / "zero.pgm").find("zero-dimension"), std::string::npos);
  EXPECT_NE(message(dir / "bmp.bmp").find("unsupported format"), std::string::npos);
  EXPECT_NE(message(dir / "missing.pgm").find("unreadable file"), std::string::npos);
}

TEST(LoadImage, PpmReducedToLuma) {
  oracle::TempDir dir("raster");
  write_raw(dir / "c.ppm", std::string("P6\n1 1\n255\n") + std::string("\xff\x00\x00", 3));
  EXPECT_NEAR(load_image(dir / "c.ppm").at(0, 0), 0.299, 1e-12);
  const auto color = load_color_image(dir / "c.ppm");
  EXPECT_EQ(color.channels, 3u);
  EXPECT_EQ(color.at(0, 0, 0), 1.0);
}

TEST(SavePgm, RoundTripsQuantizedValues) {
  oracle::TempDir dir("raster");
  Rng rng(5);
  std::vector<double> px(12);
  for (auto& v : px) v = static_cast<double>(rng.below(256)) / 255.0;
  const GrayImage img(3, 4, px);
  save_pgm(img, dir / "rt.pgm");
  const auto back = load_image(dir / "rt.pgm");
  for (std::size_t i = 0; i < px.size(); ++i) EXPECT_NEAR(back.pixels()[i], px[i], 1e-12);
}

TEST(MedianFilter, ConstantUnchanged) {
  const GrayImage img(4, 6, 0.7);
  EXPECT_EQ(median_filter(img, 1), img);
}

TEST(MedianFilter, RemovesIsolatedOutlier) {
  GrayImage img(5, 5, 1.0);
  img.at(2, 2) = 0.0;
  EXPECT_EQ(median_filter(img, 1), GrayImage(5, 5, 1.0));
}

TEST(MedianFilter, StripedCentre) {
  const GrayImage img(3, 3, std::vector<double>{0, 0, 0, 1, 1, 1, 0, 0, 0});
  const auto out = median_filter(img, 1);
  // centre window holds six 0s and three 1s
  EXPECT_EQ(out.at(1, 1), 0.0);
}

TEST(MedianFilter, PropertyOutputsAreInputValuesAndIdempotentOnConstants) {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto h = 1 + rng.below(7);
    const auto w = 1 + rng.below(7);
    const auto img = random_image(h, w, rng);
    const auto out = median_filter(img, 1 + static_cast<int>(rng.below(2)));
    for (double v : out.pixels()) {
      EXPECT_NE(std::find(img.pixels().begin(), img.pixels().end(), v), img.pixels().end());
    }
  }
}

TEST(Binarize, BimodalImage) {
  std::vector<double> px(100);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = i % 5 < 2 ? 0.1 : 0.9;
  const auto mask = binarize(GrayImage(10, 10, px));
  for (std::size_t i = 0; i < px.size(); ++i) EXPECT_EQ(mask.pixels()[i], px[i] == 0.1 ? 1 : 0);
}

TEST(Binarize, ConstantIsBackground) {
  EXPECT_EQ(binarize(GrayImage(3, 3, 0.4)).ink_count(), 0u);
  EXPECT_EQ(binarize(GrayImage(3, 3, 1.0)).ink_count(), 0u);
}

TEST(Binarize, BinaryImageIdentity) {
  Rng rng(2);
  std::vector<double> px(64);
  std::vector<std::uint8_t> expect(64);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const bool ink = rng.below(3) == 0;
    px[i] = ink ? 0.0 : 1.0;
    expect[i] = ink;
  }
  px[0] = 0.0;
  expect[0] = 1;
  px[1] = 1.0;
  expect[1] = 0;
  EXPECT_EQ(binarize(GrayImage(8, 8, px)), BinaryImage(8, 8, expect));
}

TEST(Binarize, TwoLevelsLowerIsInk) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const double lo = static_cast<double>(rng.below(255)) / 255.0;
    const double hi = lo + static_cast<double>(1 + rng.below(255 - static_cast<std::uint64_t>(lo * 255 + 0.5))) / 255.0;
    std::vector<double> px(20);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = (i % 3 == 0) ? lo : std::min(hi, 1.0);
    const auto mask = binarize(GrayImage(4, 5, px));
    for (std::size_t i = 0; i < px.size(); ++i) EXPECT_EQ(mask.pixels()[i], px[i] == lo ? 1 : 0);
  }
}

TEST(Binarize, MatchesExhaustiveOtsu) {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const auto img = random_image(1 + rng.below(12), 1 + rng.below(12), rng);
    const auto mask = binarize(img);
    const auto expect = oracle::otsu_mask(img);
    EXPECT_TRUE(std::equal(expect.begin(), expect.end(), mask.pixels().begin())) << "trial " << trial;
  }
}

TEST(Projection, RowSums) {
  const BinaryImage m(3, 3, std::vector<std::uint8_t>{1, 1, 1, 0, 0, 0, 0, 1, 0});
  EXPECT_EQ(horizontal_projection(m).values, (std::vector<std::int64_t>{3, 0, 1}));
  EXPECT_EQ(horizontal_projection(BinaryImage(2, 4)).values, (std::vector<std::int64_t>{0, 0}));
  EXPECT_EQ(horizontal_projection(BinaryImage(4, 5, std::vector<std::uint8_t>(20, 1))).values,
            (std::vector<std::int64_t>{5, 5, 5, 5}));
}

TEST(Projection, PropertySumEqualsInk) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto h = 1 + rng.below(10);
    const auto w = 1 + rng.below(10);
    std::vector<std::uint8_t> px(h * w);
    for (auto& v : px) v = static_cast<std::uint8_t>(rng.below(2));
    const BinaryImage b(h, w, px);
    EXPECT_EQ(static_cast<std::size_t>(horizontal_projection(b).total()), b.ink_count());
  }
}

TEST(Rotate, ZeroIsIdentity) {
  Rng rng(4);
  const auto img = random_image(7, 9, rng);
  EXPECT_EQ(rotate(img, 0.0), img);
}

TEST(Rotate, WhiteStaysWhite) {
  for (double a : {3.0, 17.5, -45.0, 90.0, 180.0}) EXPECT_EQ(rotate(GrayImage(6, 10, 1.0), a), GrayImage(6, 10, 1.0));
}

TEST(Rotate, QuarterTurnRoundTrip) {
  GrayImage img(41, 41, 1.0);
  for (std::size_t r = 0; r < 41; ++r) {
    for (std::size_t c = 0; c < 41; ++c) {
      const double d = std::hypot(static_cast<double>(r) - 20.0, static_cast<double>(c) - 20.0);
      if (d < 10.0) img.at(r, c) = 0.0;
    }
  }
  const auto back = rotate(rotate(img, 90.0), -90.0);
  double mad = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) mad += std::abs(back.pixels()[i] - img.pixels()[i]);
  EXPECT_LT(mad / static_cast<double>(img.size()), 0.02);
}

TEST(Rotate, PositiveAngleIsCounterClockwise) {
  // A horizontal bar right of centre moves up under a small positive turn.
  GrayImage img(21, 21, 1.0);
  for (std::size_t c = 12; c < 20; ++c) img.at(10, c) = 0.0;
  const auto out = rotate(img, 20.0);
  double above = 0, below = 0;
  for (std::size_t r = 0; r < 21; ++r) {
    for (std::size_t c = 11; c < 21; ++c) {
      const double ink = 1.0 - out.at(r, c);
      (r < 10 ? above : below) += r == 10 ? 0.0 : ink;
    }
  }
  EXPECT_GT(above, below);
}

TEST(Variance, Examples) {
  EXPECT_NEAR(variance(Projection{{3, 0, 1}}), 14.0 / 9.0, 1e-12);
  EXPECT_EQ(variance(Projection{{4, 4, 4}}), 0.0);
  EXPECT_EQ(variance(Projection{{0, 4}}), 4.0);
}

TEST(Variance, PropertyNonNegativeZeroIffConstant) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    Projection p;
    const auto n = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) p.values.push_back(static_cast<std::int64_t>(rng.below(4)));
    const bool constant = std::all_of(p.values.begin(), p.values.end(), [&](auto v) { return v == p.values[0]; });
    const double v = variance(p);
    EXPECT_GE(v, 0.0);
    EXPECT_EQ(v == 0.0, constant);
  }
}
