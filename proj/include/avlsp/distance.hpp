#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "avlsp/raster.hpp"

namespace avlsp {

/// Squared Euclidean distance to the nearest feature pixel and that pixel's index.
struct FeatureTransform {
    int width = 0;
    int height = 0;
    std::vector<double> sq_dist;         // +inf when the image has no feature
    std::vector<std::int64_t> nearest;   // y * width + x of the nearest feature, -1 if none
};

namespace detail {

// Lower envelope of parabolas (q - x)^2 + f(q) over the finite samples of f.
// Writes the minimum and its argmin for every x in [0, n).
inline void envelope_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& arg) {
    const int n = int(f.size());
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<int> v;
    std::vector<double> z;
    v.reserve(std::size_t(n));
    z.reserve(std::size_t(n) + 1);
    for (int q = 0; q < n; ++q) {
        if (f[std::size_t(q)] == inf) continue;
        while (!v.empty()) {
            int p = v.back();
            double s = ((f[std::size_t(q)] + double(q) * q) - (f[std::size_t(p)] + double(p) * p)) / (2.0 * (q - p));
            if (s <= z[z.size() - 2]) {
                v.pop_back();
                z.pop_back();
            } else {
                z.back() = s;
                break;
            }
        }
        if (v.empty()) {
            z.assign({-inf, inf});
        } else {
            z.push_back(inf);
        }
        v.push_back(q);
    }
    d.assign(std::size_t(n), inf);
    arg.assign(std::size_t(n), -1);
    if (v.empty()) return;
    std::size_t k = 0;
    for (int x = 0; x < n; ++x) {
        while (z[k + 1] < x) ++k;
        int q = v[k];
        d[std::size_t(x)] = double(x - q) * (x - q) + f[std::size_t(q)];
        arg[std::size_t(x)] = q;
    }
}

} // namespace detail

/**
 * @brief Exact Euclidean feature transform (separable lower-envelope method).
 *
 * Every pixel gets the squared distance to, and index of, its nearest
 * nonzero pixel of `features`. Equidistant features resolve to the one the
 * envelope scan meets first, which is deterministic for a given image.
 */
inline FeatureTransform feature_transform(const BinaryImage& features) {
    const int w = features.width(), h = features.height();
    constexpr double inf = std::numeric_limits<double>::infinity();
    FeatureTransform out;
    out.width = w;
    out.height = h;

    // columns: distance to nearest feature in the same column
    std::vector<double> col_d(std::size_t(w) * h);
    std::vector<int> col_arg(std::size_t(w) * h);
    std::vector<double> f(static_cast<std::size_t>(h)), d;
    std::vector<int> arg;
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[std::size_t(y)] = features.at(x, y) ? 0.0 : inf;
        detail::envelope_1d(f, d, arg);
        for (int y = 0; y < h; ++y) {
            col_d[std::size_t(y) * w + x] = d[std::size_t(y)];
            col_arg[std::size_t(y) * w + x] = arg[std::size_t(y)];
        }
    }

    out.sq_dist.assign(std::size_t(w) * h, inf);
    out.nearest.assign(std::size_t(w) * h, -1);
    f.resize(std::size_t(w));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[std::size_t(x)] = col_d[std::size_t(y) * w + x];
        detail::envelope_1d(f, d, arg);
        for (int x = 0; x < w; ++x) {
            int qx = arg[std::size_t(x)];
            if (qx < 0) continue;
            int qy = col_arg[std::size_t(y) * w + qx];
            out.sq_dist[std::size_t(y) * w + x] = d[std::size_t(x)];
            out.nearest[std::size_t(y) * w + x] = std::int64_t(qy) * w + qx;
        }
    }
    return out;
}

/**
 * @brief Distance from every mask pixel to the nearest non-mask pixel.
 *
 * Pixels beyond the image border count as background. Non-mask pixels get 0.
 */
inline std::vector<double> distance_to_background(const BinaryImage& mask) {
    const int w = mask.width(), h = mask.height();
    BinaryImage background(w + 2, h + 2, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) background.at(x + 1, y + 1) = mask.at(x, y) ? 0 : 1;
    }
    auto ft = feature_transform(background);
    std::vector<double> out(std::size_t(w) * h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out[std::size_t(y) * w + x] = std::sqrt(ft.sq_dist[std::size_t(y + 1) * (w + 2) + (x + 1)]);
        }
    }
    return out;
}

} // namespace avlsp
