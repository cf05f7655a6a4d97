#include <gtest/gtest.h>

#include <random>

#include "avlsp/preprocess.hpp"
#include "oracles.hpp"

using namespace avlsp;

namespace {

FovMask disc_fov(int w, int h, double r) {
    std::vector<std::uint8_t> in(std::size_t(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) in[std::size_t(y) * w + x] = std::hypot(x - (w - 1) / 2.0, y - (h - 1) / 2.0) <= r;
    }
    return FovMask(w, h, in);
}

Raster2D random_channel(int w, int h, std::mt19937_64& rng, bool bytes) {
    std::uniform_real_distribution<float> u(0.0f, 255.0f);
    Raster2D r(w, h, 1);
    for (auto& v : r.channel(0)) v = bytes ? std::floor(u(rng)) : u(rng);
    return r;
}

} // namespace

TEST(Median, ConstantAndImpulse) {
    Raster2D c(6, 5, 1, 77.0f);
    EXPECT_TRUE(median_filter(c, 3) == c);
    Raster2D z(5, 5, 1, 0.0f);
    z.at(2, 2) = 255.0f;
    EXPECT_TRUE(median_filter(z, 3) == Raster2D(5, 5, 1, 0.0f));
}

TEST(Median, EvenKernelRejected) {
    try {
        median_filter(Raster2D(3, 3, 1), 4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EvenKernel);
    }
}

TEST(Median, MatchesSortedWindowOracle) {
    std::mt19937_64 rng(5);
    for (bool bytes : {true, false}) {
        for (int k : {1, 3, 5, 9}) {
            auto r = random_channel(7 + k, 7, rng, bytes);
            auto got = median_filter(r, k);
            auto want = oracle::sorted_window_median(r, k);
            for (std::size_t i = 0; i < want.size(); ++i) ASSERT_EQ(got.channel(0)[i], want[i]) << k << ' ' << i;
        }
    }
}

TEST(Median, StaysWithinInputRange) {
    std::mt19937_64 rng(6);
    auto r = random_channel(20, 20, rng, false);
    auto m = median_filter(r, 7);
    auto [lo, hi] = std::minmax_element(r.samples().begin(), r.samples().end());
    for (float v : m.samples()) {
        EXPECT_GE(v, *lo);
        EXPECT_LE(v, *hi);
    }
}

TEST(Normalize, ZeroResidualGives128) {
    Raster2D c(4, 4, 1, 90.0f);
    auto out = illumination_normalize(c, c, NormalizationParams{}, FovMask::full(4, 4));
    for (float v : out.samples()) EXPECT_EQ(v, 128.0f);
}

TEST(Normalize, ResidualWithTargetStdIsShifted) {
    // residual +-50 on a checkerboard has population std exactly 50
    Raster2D c(4, 4, 1), med(4, 4, 1, 100.0f);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) c.at(x, y) = (x + y) % 2 ? 150.0f : 50.0f;
    }
    auto out = illumination_normalize(c, med, NormalizationParams{}, FovMask::full(4, 4));
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) EXPECT_NEAR(out.at(x, y), c.at(x, y) - 100.0f + 128.0f, 1e-4);
    }
}

TEST(Normalize, StdMatchesTwoPassOracle) {
    std::mt19937_64 rng(8);
    auto fov = disc_fov(40, 40, 17);
    for (int k = 0; k < 5; ++k) {
        auto c = random_channel(40, 40, rng, false);
        auto med = median_filter(c, 5);
        NormalizationParams p;
        auto out = illumination_normalize(c, med, p, fov);
        auto st = oracle::fov_mean_std(out.channel(0), fov);
        EXPECT_NEAR(st.std, 50.0, 0.05);
    }
}

TEST(Normalize, ParamsValidated) {
    NormalizationParams p;
    p.kernel_fraction = 1.0;
    EXPECT_THROW(p.validate(), Error);
    p = {};
    p.sigma0 = 0.0;
    EXPECT_THROW(p.validate(), Error);
}

TEST(KernelRule, RoundThenOdd) {
    EXPECT_EQ(median_kernel_size(100, 0.1), 11);
    EXPECT_EQ(median_kernel_size(90, 0.1), 9);
    EXPECT_EQ(median_kernel_size(94, 0.1), 9);
    EXPECT_EQ(median_kernel_size(96, 0.1), 11);
    EXPECT_EQ(median_kernel_size(3, 0.1), 1);
    FovMask m(5, 6, {0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    EXPECT_EQ(vertical_fov_extent(m), 3);
}

TEST(SixChannel, PassThroughAndConstant) {
    Raster2D rgb(12, 12, 3);
    std::mt19937_64 rng(9);
    for (auto c = 0; c < 3; ++c) {
        for (auto& v : rgb.channel(c)) v = float(rng() % 256);
    }
    auto fov = disc_fov(12, 12, 5);
    auto six = assemble_six_channel(rgb, NormalizationParams{}, fov);
    ASSERT_EQ(six.channels(), 6);
    for (int c = 0; c < 3; ++c) {
        auto a = six.channel(c), b = rgb.channel(c);
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
    auto flat = assemble_six_channel(Raster2D(12, 12, 3, 200.0f), NormalizationParams{}, fov);
    for (int c = 3; c < 6; ++c) {
        for (float v : flat.channel(c)) EXPECT_EQ(v, 128.0f);
    }
}
