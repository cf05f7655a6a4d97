#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "avlsp/error.hpp"
#include "avlsp/raster.hpp"

namespace avlsp {

struct NormalizationParams {
    double sigma0 = 50.0;          // target std of the residual, intensity units
    double kernel_fraction = 0.1;  // median kernel as a fraction of the vertical FOV extent
    double epsilon = 1e-6;         // variance guard

    void validate() const {
        if (!(sigma0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma0 must be > 0");
        if (!(kernel_fraction > 0.0 && kernel_fraction < 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "kernel_fraction must be in (0,1)");
        }
        if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be > 0");
    }
};

namespace detail {

inline bool is_byte_valued(std::span<const float> v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return x >= 0.0f && x <= 255.0f && x == std::floor(x); });
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Huang's running histogram, valid for integer samples in [0,255].
inline void median_histogram(const Raster2D& in, int kernel, Raster2D& out) {
    const int w = in.width(), h = in.height(), r = kernel / 2;
    const int half = kernel * kernel / 2;
    for (int y = 0; y < h; ++y) {
        std::array<int, 256> hist{};
        for (int dy = -r; dy <= r; ++dy) {
            int yy = clampi(y + dy, 0, h - 1);
            for (int dx = -r; dx <= r; ++dx) hist[std::size_t(in.at(clampi(dx, 0, w - 1), yy))]++;
        }
        for (int x = 0; x < w; ++x) {
            if (x > 0) {
                int xo = clampi(x - r - 1, 0, w - 1), xn = clampi(x + r, 0, w - 1);
                for (int dy = -r; dy <= r; ++dy) {
                    int yy = clampi(y + dy, 0, h - 1);
                    hist[std::size_t(in.at(xo, yy))]--;
                    hist[std::size_t(in.at(xn, yy))]++;
                }
            }
            int acc = 0, v = 0;
            for (; v < 256; ++v) {
                acc += hist[std::size_t(v)];
                if (acc > half) break;
            }
            out.at(x, y) = float(v);
        }
    }
}

inline void median_select(const Raster2D& in, int kernel, Raster2D& out) {
    const int w = in.width(), h = in.height(), r = kernel / 2;
    std::vector<float> window(std::size_t(kernel) * kernel);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t k = 0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    window[k++] = in.at(clampi(x + dx, 0, w - 1), clampi(y + dy, 0, h - 1));
                }
            }
            auto mid = window.begin() + std::ptrdiff_t(window.size() / 2);
            std::nth_element(window.begin(), mid, window.end());
            out.at(x, y) = *mid;
        }
    }
}

} // namespace detail

/**
 * @brief Square median filter with replicated borders.
 *
 * 8-bit valued channels use a running histogram; anything else falls back to
 * per-pixel selection.
 */
inline Raster2D median_filter(const Raster2D& channel, int kernel_px) {
    if (channel.channels() != 1) throw Error(ErrorCode::InvalidArgument, "median_filter expects one channel");
    if (kernel_px < 1 || kernel_px % 2 == 0) {
        throw Error(ErrorCode::EvenKernel, "median kernel must be odd and >= 1, got " + std::to_string(kernel_px));
    }
    Raster2D out(channel.width(), channel.height(), 1);
    if (kernel_px == 1) return channel;
    if (detail::is_byte_valued(channel.channel(0))) {
        detail::median_histogram(channel, kernel_px, out);
    } else {
        detail::median_select(channel, kernel_px, out);
    }
    return out;
}

/// sigma0 * (I - I_med) / max(std_FOV(I - I_med), epsilon) + 128, evaluated at every pixel.
inline Raster2D illumination_normalize(const Raster2D& channel, const Raster2D& med, const NormalizationParams& params,
                                       const FovMask& mask) {
    params.validate();
    if (channel.channels() != 1 || med.channels() != 1) {
        throw Error(ErrorCode::InvalidArgument, "illumination_normalize expects single-channel rasters");
    }
    if (!channel.same_shape(med) || channel.width() != mask.width() || channel.height() != mask.height()) {
        throw Error(ErrorCode::DimensionMismatch, "channel, median and FOV must be aligned");
    }
    auto src = channel.channel(0);
    auto bg = med.channel(0);

    double mean = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (!mask.inside(i)) continue;
        mean += double(src[i]) - double(bg[i]);
        ++n;
    }
    mean /= double(n);
    double var = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (!mask.inside(i)) continue;
        double d = double(src[i]) - double(bg[i]) - mean;
        var += d * d;
    }
    double sigma = std::sqrt(var / double(n));
    double scale = params.sigma0 / std::max(sigma, params.epsilon);

    Raster2D out(channel.width(), channel.height(), 1);
    auto dst = out.channel(0);
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = float(scale * (double(src[i]) - double(bg[i])) + 128.0);
    }
    return out;
}

/// Number of rows spanned by the inside of the FOV.
inline int vertical_fov_extent(const FovMask& mask) {
    int top = mask.height(), bottom = -1;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.inside(x, y)) {
                top = std::min(top, y);
                bottom = std::max(bottom, y);
                break;
            }
        }
    }
    return bottom - top + 1;
}

/// round(fraction * extent), bumped to the next odd number, at least 1.
inline int median_kernel_size(int vertical_extent, double kernel_fraction) {
    int k = int(std::lround(kernel_fraction * double(vertical_extent)));
    if (k < 1) k = 1;
    if (k % 2 == 0) ++k;
    return k;
}

/// [R, G, B, Rnorm, Gnorm, Bnorm]; the first three are copied untouched.
inline Raster2D assemble_six_channel(const Raster2D& rgb, const NormalizationParams& params, const FovMask& mask) {
    params.validate();
    if (rgb.channels() != 3) throw Error(ErrorCode::InvalidArgument, "assemble_six_channel expects an RGB raster");
    if (rgb.width() != mask.width() || rgb.height() != mask.height()) {
        throw Error(ErrorCode::DimensionMismatch, "image and FOV differ in size");
    }
    const int kernel = median_kernel_size(vertical_fov_extent(mask), params.kernel_fraction);

    std::vector<float> samples;
    samples.reserve(rgb.plane_size() * 6);
    samples.insert(samples.end(), rgb.samples().begin(), rgb.samples().end());
    for (int c = 0; c < 3; ++c) {
        Raster2D ch = rgb.channel_raster(c);
        Raster2D norm = illumination_normalize(ch, median_filter(ch, kernel), params, mask);
        samples.insert(samples.end(), norm.samples().begin(), norm.samples().end());
    }
    return Raster2D(rgb.width(), rgb.height(), 6, std::move(samples));
}

} // namespace avlsp
