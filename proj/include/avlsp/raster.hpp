#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "avlsp/error.hpp"

namespace avlsp {

struct Point {
    int x = 0;
    int y = 0;

    friend bool operator==(const Point&, const Point&) = default;
};

/**
 * @brief Dense width x height x channels grid of float samples.
 *
 * Samples are planar: channel-major, row-major within a channel, so that a
 * single channel is one contiguous span.
 */
class Raster2D {
public:
    Raster2D() = default;

    Raster2D(int width, int height, int channels, float fill = 0.0f)
        : Raster2D(width, height, channels,
                   std::vector<float>(checked_size(width, height, channels), fill)) {}

    Raster2D(int width, int height, int channels, std::vector<float> samples)
        : width_(width), height_(height), channels_(channels), samples_(std::move(samples)) {
        if (samples_.size() != checked_size(width, height, channels)) {
            throw Error(ErrorCode::DimensionMismatch, "sample count does not match raster dimensions");
        }
        for (float v : samples_) {
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteSample, "raster sample is not finite");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t plane_size() const noexcept { return std::size_t(width_) * std::size_t(height_); }
    bool empty() const noexcept { return samples_.empty(); }

    float at(int x, int y, int c = 0) const { return samples_[index(x, y, c)]; }
    float& at(int x, int y, int c = 0) { return samples_[index(x, y, c)]; }

    std::span<const float> channel(int c) const {
        return {samples_.data() + std::size_t(c) * plane_size(), plane_size()};
    }
    std::span<float> channel(int c) { return {samples_.data() + std::size_t(c) * plane_size(), plane_size()}; }

    /// Copy of one channel as a single-channel raster.
    Raster2D channel_raster(int c) const {
        auto ch = channel(c);
        return Raster2D(width_, height_, 1, std::vector<float>(ch.begin(), ch.end()));
    }

    const std::vector<float>& samples() const noexcept { return samples_; }

    bool same_shape(const Raster2D& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }

    friend bool operator==(const Raster2D&, const Raster2D&) = default;

private:
    static std::size_t checked_size(int w, int h, int c) {
        if (w < 1 || h < 1 || c < 1) {
            throw Error(ErrorCode::InvalidArgument, "raster dimensions must be >= 1");
        }
        return std::size_t(w) * std::size_t(h) * std::size_t(c);
    }

    std::size_t index(int x, int y, int c) const noexcept {
        return std::size_t(c) * plane_size() + std::size_t(y) * std::size_t(width_) + std::size_t(x);
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> samples_;
};

/// Generic width x height byte grid; base of masks and label maps.
template <typename Tag>
class ByteGrid {
public:
    ByteGrid() = default;
    ByteGrid(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
        if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "grid dimensions must be >= 1");
        data_.assign(std::size_t(width) * std::size_t(height), fill);
    }
    ByteGrid(int width, int height, std::vector<std::uint8_t> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "grid dimensions must be >= 1");
        if (data_.size() != std::size_t(width) * std::size_t(height)) {
            throw Error(ErrorCode::DimensionMismatch, "grid data size does not match dimensions");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    std::uint8_t at(int x, int y) const { return data_[std::size_t(y) * std::size_t(width_) + std::size_t(x)]; }
    std::uint8_t& at(int x, int y) { return data_[std::size_t(y) * std::size_t(width_) + std::size_t(x)]; }
    std::uint8_t operator[](std::size_t i) const { return data_[i]; }
    std::uint8_t& operator[](std::size_t i) { return data_[i]; }

    const std::vector<std::uint8_t>& data() const noexcept { return data_; }

    template <typename Other>
    bool same_shape(const Other& o) const noexcept {
        return width_ == o.width() && height_ == o.height();
    }

    friend bool operator==(const ByteGrid&, const ByteGrid&) = default;

protected:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

struct FovTag {};
struct LabelTag {};
struct BinaryTag {};

/// Field-of-view mask: nonzero = inside.
class FovMask : public ByteGrid<FovTag> {
public:
    FovMask() = default;
    FovMask(int width, int height, std::vector<std::uint8_t> inside) : ByteGrid(width, height, std::move(inside)) {
        std::size_t n = 0;
        for (auto& v : data_) {
            v = v ? 1 : 0;
            n += v;
        }
        if (n == 0) throw Error(ErrorCode::InvalidArgument, "FOV mask has no inside pixel");
    }

    static FovMask full(int width, int height) {
        return FovMask(width, height, std::vector<std::uint8_t>(std::size_t(width) * std::size_t(height), 1));
    }

    bool inside(int x, int y) const { return at(x, y) != 0; }
    bool inside(std::size_t i) const { return data_[i] != 0; }
};

/// Plain binary image (vessel masks, skeletons).
using BinaryImage = ByteGrid<BinaryTag>;

enum Label : std::uint8_t {
    kBackground = 0,
    kArtery = 1,
    kVein = 2,
    kOutside = 255,
};

inline bool is_vessel(std::uint8_t code) noexcept { return code == kArtery || code == kVein; }

class LabelMap : public ByteGrid<LabelTag> {
public:
    using ByteGrid::ByteGrid;

    /// Throws unless every code is valid and 255 appears exactly outside the mask.
    void validate(const FovMask& mask) const {
        if (!same_shape(mask)) throw Error(ErrorCode::DimensionMismatch, "label map and FOV differ in size");
        for (std::size_t i = 0; i < data_.size(); ++i) {
            std::uint8_t v = data_[i];
            if (v != kBackground && v != kArtery && v != kVein && v != kOutside) {
                throw Error(ErrorCode::InvalidArgument, "invalid label code " + std::to_string(v));
            }
            if ((v == kOutside) != !mask.inside(i)) {
                throw Error(ErrorCode::InvalidArgument, "outside-FOV sentinel does not match FOV mask");
            }
        }
    }

    BinaryImage vessel_mask() const {
        BinaryImage out(width_, height_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = is_vessel(data_[i]) ? 1 : 0;
        return out;
    }
};

/**
 * @brief Background / artery / vein probability maps, aligned.
 *
 * Stored as one 3-channel raster in the order [back, artery, vein], which is
 * also the channel order of probability AVPM files.
 */
class ProbabilityTriplet {
public:
    static constexpr double kSimplexTolerance = 1e-3;

    ProbabilityTriplet() = default;

    explicit ProbabilityTriplet(Raster2D maps) : maps_(std::move(maps)) {
        if (maps_.channels() != 3) {
            throw Error(ErrorCode::DimensionMismatch, "probability raster must have exactly 3 channels");
        }
        for (float v : maps_.samples()) {
            if (v < 0.0f || v > 1.0f) throw Error(ErrorCode::InvalidArgument, "probability outside [0,1]");
        }
    }

    int width() const noexcept { return maps_.width(); }
    int height() const noexcept { return maps_.height(); }

    float back(std::size_t i) const { return maps_.channel(0)[i]; }
    float artery(std::size_t i) const { return maps_.channel(1)[i]; }
    float vein(std::size_t i) const { return maps_.channel(2)[i]; }

    const Raster2D& raster() const noexcept { return maps_; }

    /// Throws unless the three probabilities sum to 1 (+-1e-3) at every inside-FOV pixel.
    void validate_simplex(const FovMask& mask) const {
        if (maps_.width() != mask.width() || maps_.height() != mask.height()) {
            throw Error(ErrorCode::DimensionMismatch, "probabilities and FOV differ in size");
        }
        for (std::size_t i = 0; i < maps_.plane_size(); ++i) {
            if (!mask.inside(i)) continue;
            double s = double(back(i)) + double(artery(i)) + double(vein(i));
            if (std::abs(s - 1.0) > kSimplexTolerance) {
                throw Error(ErrorCode::InvalidArgument, "probabilities do not sum to 1 at pixel " + std::to_string(i));
            }
        }
    }

private:
    Raster2D maps_;
};

/// Per-pixel class of highest probability. Ties resolve background > artery > vein.
inline LabelMap argmax_labels(const ProbabilityTriplet& p, const FovMask& mask) {
    if (p.width() != mask.width() || p.height() != mask.height()) {
        throw Error(ErrorCode::DimensionMismatch, "probabilities and FOV differ in size");
    }
    LabelMap out(p.width(), p.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!mask.inside(i)) {
            out[i] = kOutside;
            continue;
        }
        float b = p.back(i), a = p.artery(i), v = p.vein(i);
        if (b >= a && b >= v) {
            out[i] = kBackground;
        } else if (a >= v) {
            out[i] = kArtery;
        } else {
            out[i] = kVein;
        }
    }
    return out;
}

/**
 * @brief Artery likelihood p_artery / (p_artery + p_vein) per pixel.
 *
 * Pixels with no artery or vein mass get 0.5.
 */
inline Raster2D likelihood_map(const ProbabilityTriplet& p) {
    Raster2D out(p.width(), p.height(), 1);
    auto dst = out.channel(0);
    for (std::size_t i = 0; i < dst.size(); ++i) {
        double a = p.artery(i), v = p.vein(i);
        dst[i] = (a + v > 0.0) ? float(a / (a + v)) : 0.5f;
    }
    return out;
}

} // namespace avlsp
