#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "avlsp/avr.hpp"
#include "avlsp/error.hpp"
#include "avlsp/raster.hpp"

namespace avlsp {

struct PhantomSpec {
    std::uint64_t seed = 1;
    int depth = 3;              // bifurcation levels below the root segment
    double length_min = 30.0;   // segment length range, pixels
    double length_max = 60.0;
    double width_min = 2.0;     // vessel width range, pixels
    double width_max = 6.0;
    int width = 256;            // image size
    int height = 256;
    double flip_fraction = 0.0; // share of segments whose A/V probabilities are swapped
    double noise_sigma = 0.0;   // Gaussian noise added to each probability before renormalizing
    double margin = 0.3;        // the true class gets probability 0.5 + margin
    bool allow_crossings = false;

    void validate() const {
        if (depth < 0) throw Error(ErrorCode::InvalidArgument, "depth must be >= 0");
        if (!(length_min > 0.0 && length_max >= length_min)) throw Error(ErrorCode::InvalidArgument, "bad length range");
        if (!(width_min >= 1.0 && width_max >= width_min)) throw Error(ErrorCode::InvalidArgument, "bad width range");
        if (width < 16 || height < 16) throw Error(ErrorCode::InvalidArgument, "phantom image too small");
        if (!(flip_fraction >= 0.0 && flip_fraction <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "flip_fraction must be in [0,1]");
        }
        if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_sigma must be >= 0");
        if (!(margin > 0.0 && margin <= 0.5)) throw Error(ErrorCode::InvalidArgument, "margin must be in (0,0.5]");
    }
};

struct PhantomSegment {
    int id = 0;
    int parent = -1;
    VesselClass vessel_class = VesselClass::Artery;
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    double width = 0.0;
};

struct Phantom {
    LabelMap truth;
    FovMask fov;
    std::vector<PhantomSegment> segments;
    std::vector<std::int32_t> segment_map;  // segment drawn at each pixel, -1 for none
    OpticDiscSpec od;
};

struct CorruptedProbabilities {
    ProbabilityTriplet probs;
    std::vector<int> flipped;  // segment ids with swapped A/V probabilities, ascending
};

/**
 * @brief Seeded generator with explicitly defined transforms.
 *
 * The engine is std::mt19937_64; the uniform and normal transforms are
 * written out here so results do not depend on the standard library's
 * distribution implementations.
 */
class PhantomRng {
public:
    explicit PhantomRng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return std::size_t(uniform() * double(n)) % n; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

namespace detail {

inline double point_segment_distance(double px, double py, const PhantomSegment& s) {
    double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
    double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (s.x0 + t * dx), py - (s.y0 + t * dy));
}

inline bool segments_cross(const PhantomSegment& a, const PhantomSegment& b) {
    auto orient = [](double ax, double ay, double bx, double by, double cx, double cy) {
        return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
    };
    double d1 = orient(b.x0, b.y0, b.x1, b.y1, a.x0, a.y0);
    double d2 = orient(b.x0, b.y0, b.x1, b.y1, a.x1, a.y1);
    double d3 = orient(a.x0, a.y0, a.x1, a.y1, b.x0, b.y0);
    double d4 = orient(a.x0, a.y0, a.x1, a.y1, b.x1, b.y1);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

inline double segment_distance(const PhantomSegment& a, const PhantomSegment& b) {
    if (segments_cross(a, b)) return 0.0;
    return std::min({point_segment_distance(a.x0, a.y0, b), point_segment_distance(a.x1, a.y1, b),
                     point_segment_distance(b.x0, b.y0, a), point_segment_distance(b.x1, b.y1, a)});
}

struct TreeGrower {
    const PhantomSpec& spec;
    PhantomRng& rng;
    double cx, cy, radius;
    std::vector<PhantomSegment>& segments;

    bool fits(double x, double y, double w) const { return std::hypot(x - cx, y - cy) <= radius - w / 2.0 - 2.0; }

    bool clear_of_others(const PhantomSegment& s) const {
        for (const auto& o : segments) {
            if (o.id == s.parent) continue;
            bool sibling = o.parent == s.parent && o.vessel_class == s.vessel_class && s.parent >= 0;
            if (sibling) continue;
            double gap = segment_distance(s, o) - (s.width + o.width) / 2.0;
            if (o.vessel_class != s.vessel_class) {
                if (!spec.allow_crossings && gap < 6.0) return false;
            } else if (gap < 3.0) {
                return false;
            }
        }
        return true;
    }

    // Tries a few headings; shortens the segment to stay in the FOV.
    std::optional<PhantomSegment> place(double x0, double y0, double heading, double spread, double w, int parent,
                                        VesselClass cls) {
        for (int attempt = 0; attempt < 8; ++attempt) {
            double a = heading + (attempt == 0 ? 0.0 : rng.uniform(-spread, spread));
            double len = rng.uniform(spec.length_min, spec.length_max);
            while (len >= spec.length_min / 2.0) {
                PhantomSegment s;
                s.parent = parent;
                s.vessel_class = cls;
                s.x0 = x0;
                s.y0 = y0;
                s.x1 = x0 + len * std::cos(a);
                s.y1 = y0 + len * std::sin(a);
                s.width = w;
                s.id = int(segments.size());
                if (fits(s.x1, s.y1, w)) {
                    if (clear_of_others(s)) return s;
                    break;
                }
                len *= 0.85;
            }
        }
        return std::nullopt;
    }

    void grow(const PhantomSegment& from, double heading, int levels_left) {
        if (levels_left <= 0) return;
        double w = std::max(spec.width_min, from.width * rng.uniform(0.75, 0.9));
        constexpr double deg = std::numbers::pi / 180.0;
        std::array<double, 2> headings{heading - rng.uniform(20.0, 40.0) * deg, heading + rng.uniform(20.0, 40.0) * deg};
        for (double h : headings) {
            auto child = place(from.x1, from.y1, h, 10.0 * deg, w, from.id, from.vessel_class);
            if (!child) continue;
            segments.push_back(*child);
            PhantomSegment placed = *child;
            grow(placed, std::atan2(placed.y1 - placed.y0, placed.x1 - placed.x0), levels_left - 1);
        }
    }
};

} // namespace detail

/**
 * @brief Render one artery tree and one vein tree with per-pixel truth.
 *
 * Both trees start next to an optic disc at the image center; the artery
 * tree grows upward and the vein tree downward as random binary trees of
 * straight segments. Without allow_crossings, segments of different class
 * keep a clearance so the truth never has A/V crossings.
 */
inline Phantom generate(const PhantomSpec& spec) {
    spec.validate();
    PhantomRng rng(spec.seed);
    const int w = spec.width, h = spec.height;
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    const double radius = std::min(w, h) / 2.0 - 2.0;

    Phantom ph;
    std::vector<std::uint8_t> inside(std::size_t(w) * h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) inside[std::size_t(y) * w + x] = std::hypot(x - cx, y - cy) <= radius;
    }
    ph.fov = FovMask(w, h, std::move(inside));
    ph.od = OpticDiscSpec{cx, cy, std::max(8.0, 0.4 * radius)};

    detail::TreeGrower grower{spec, rng, cx, cy, radius, ph.segments};
    constexpr double deg = std::numbers::pi / 180.0;
    const double offset = 0.25 * ph.od.dd;
    for (VesselClass cls : {VesselClass::Artery, VesselClass::Vein}) {
        double dir = cls == VesselClass::Artery ? -1.0 : 1.0;
        double heading = dir * std::numbers::pi / 2.0 + rng.uniform(-15.0, 15.0) * deg;
        auto root = grower.place(cx, cy + dir * offset, heading, 10.0 * deg, spec.width_max, -1, cls);
        if (!root) throw Error(ErrorCode::SpecInfeasible, "root segment does not fit in the image");
        ph.segments.push_back(*root);
        PhantomSegment placed = *root;
        grower.grow(placed, heading, spec.depth);
    }

    ph.truth = LabelMap(w, h, std::uint8_t(kBackground));
    ph.segment_map.assign(std::size_t(w) * h, -1);
    for (const auto& s : ph.segments) {
        double r = s.width / 2.0;
        int x_lo = std::max(0, int(std::floor(std::min(s.x0, s.x1) - r)));
        int x_hi = std::min(w - 1, int(std::ceil(std::max(s.x0, s.x1) + r)));
        int y_lo = std::max(0, int(std::floor(std::min(s.y0, s.y1) - r)));
        int y_hi = std::min(h - 1, int(std::ceil(std::max(s.y0, s.y1) + r)));
        for (int y = y_lo; y <= y_hi; ++y) {
            for (int x = x_lo; x <= x_hi; ++x) {
                if (!ph.fov.inside(x, y) || detail::point_segment_distance(x, y, s) > r) continue;
                auto i = std::size_t(y) * w + x;
                ph.truth[i] = s.vessel_class == VesselClass::Artery ? kArtery : kVein;
                ph.segment_map[i] = s.id;
            }
        }
    }
    for (std::size_t i = 0; i < ph.truth.size(); ++i) {
        if (!ph.fov.inside(i)) ph.truth[i] = kOutside;
    }
    return ph;
}

/**
 * @brief CNN-like probabilities for a phantom.
 *
 * The true class gets 0.5 + margin and the other two share the rest. A
 * ceil(flip_fraction * n) subset of the n segments has its artery and vein
 * probabilities swapped. Gaussian noise is then added per class, negatives
 * are clipped, and each inside pixel is renormalized to sum to one.
 */
inline CorruptedProbabilities corrupt(const Phantom& ph, const PhantomSpec& spec) {
    spec.validate();
    PhantomRng rng(spec.seed ^ 0x9E3779B97F4A7C15ull);
    const std::size_t n = ph.segments.size();
    std::size_t n_flip = std::size_t(std::ceil(spec.flip_fraction * double(n) - 1e-9));
    n_flip = std::min(n_flip, n);

    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = int(i);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::vector<int> flipped(order.begin(), order.begin() + std::ptrdiff_t(n_flip));
    std::sort(flipped.begin(), flipped.end());
    std::vector<char> is_flipped(n, 0);
    for (int f : flipped) is_flipped[std::size_t(f)] = 1;

    const int w = ph.truth.width(), h = ph.truth.height();
    const std::size_t plane = std::size_t(w) * h;
    std::vector<float> samples(plane * 3, 0.0f);
    const double hi = 0.5 + spec.margin, lo = (0.5 - spec.margin) / 2.0;
    for (std::size_t i = 0; i < plane; ++i) {
        std::array<double, 3> p{1.0, 0.0, 0.0};
        if (ph.fov.inside(i)) {
            std::uint8_t cls = ph.truth[i];
            if (is_vessel(cls) && ph.segment_map[i] >= 0 && is_flipped[std::size_t(ph.segment_map[i])]) {
                cls = cls == kArtery ? kVein : kArtery;
            }
            p = {lo, lo, lo};
            p[cls == kArtery ? 1 : (cls == kVein ? 2 : 0)] = hi;
            if (spec.noise_sigma > 0.0) {
                double sum = 0.0;
                for (auto& v : p) {
                    v = std::max(0.0, v + spec.noise_sigma * rng.normal());
                    sum += v;
                }
                if (sum > 0.0) {
                    for (auto& v : p) v /= sum;
                } else {
                    p = {1.0, 0.0, 0.0};
                }
            }
        }
        for (int c = 0; c < 3; ++c) samples[std::size_t(c) * plane + i] = float(p[std::size_t(c)]);
    }
    return {ProbabilityTriplet(Raster2D(w, h, 3, std::move(samples))), std::move(flipped)};
}

/// Gray RGB rendering: bright retina, dark vessels (veins darker), black surround.
inline Raster2D render_image(const Phantom& ph, std::uint64_t seed) {
    PhantomRng rng(seed ^ 0xD1B54A32D192ED03ull);
    const int w = ph.truth.width(), h = ph.truth.height();
    Raster2D img(w, h, 3);
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = 0.0;
            std::uint8_t cls = ph.truth.at(x, y);
            if (cls != kOutside) {
                double shade = 170.0 - 40.0 * std::hypot(x - cx, y - cy) / double(std::min(w, h));
                v = cls == kArtery ? shade - 45.0 : (cls == kVein ? shade - 75.0 : shade);
                v = std::clamp(std::round(v + 4.0 * rng.normal()), 0.0, 255.0);
            }
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = float(v);
        }
    }
    return img;
}

} // namespace avlsp
