#include <gtest/gtest.h>

#include <random>

#include "avlsp/distance.hpp"
#include "oracles.hpp"

using namespace avlsp;

TEST(DistanceTransform, MatchesBruteForce) {
    std::mt19937_64 rng(31);
    for (int k = 0; k < 20; ++k) {
        int w = 5 + int(rng() % 20), h = 5 + int(rng() % 20);
        BinaryImage img(w, h);
        for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng() % 100 < 70;
        auto got = distance_to_background(img);
        auto want = oracle::brute_edt(img);
        for (std::size_t i = 0; i < want.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-9) << k << ' ' << i;
    }
}

TEST(DistanceTransform, AllForegroundUsesImageBorder) {
    BinaryImage img(5, 3, 1);
    auto d = distance_to_background(img);
    EXPECT_DOUBLE_EQ(d[1 * 5 + 2], 2.0);
    EXPECT_DOUBLE_EQ(d[0], 1.0);
}

TEST(FeatureTransform, NearestFeatureIsAtMinimumDistance) {
    std::mt19937_64 rng(32);
    BinaryImage feat(23, 17);
    for (std::size_t i = 0; i < feat.size(); ++i) feat[i] = rng() % 100 < 5;
    feat[7] = 1;
    auto ft = feature_transform(feat);
    for (int y = 0; y < 17; ++y) {
        for (int x = 0; x < 23; ++x) {
            double best = 1e18;
            for (int v = 0; v < 17; ++v) {
                for (int u = 0; u < 23; ++u) {
                    if (feat.at(u, v)) best = std::min(best, double((u - x) * (u - x) + (v - y) * (v - y)));
                }
            }
            std::size_t i = std::size_t(y) * 23 + x;
            ASSERT_GE(ft.nearest[i], 0);
            auto n = std::size_t(ft.nearest[i]);
            EXPECT_TRUE(feat[n]);
            int nx = int(n % 23), ny = int(n / 23);
            EXPECT_EQ(double((nx - x) * (nx - x) + (ny - y) * (ny - y)), best);
            EXPECT_EQ(ft.sq_dist[i], best);
        }
    }
}

TEST(FeatureTransform, NoFeatures) {
    auto ft = feature_transform(BinaryImage(4, 4));
    for (auto n : ft.nearest) EXPECT_EQ(n, -1);
}
