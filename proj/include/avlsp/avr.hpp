#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "avlsp/distance.hpp"
#include "avlsp/error.hpp"
#include "avlsp/raster.hpp"
#include "avlsp/skeleton.hpp"

namespace avlsp {

struct OpticDiscSpec {
    double cx = 0.0;
    double cy = 0.0;
    double dd = 0.0;  // disc diameter, pixels

    void validate(const FovMask& mask) const {
        if (!(dd > 0.0)) throw Error(ErrorCode::InvalidArgument, "optic disc diameter must be > 0");
        int x = int(std::lround(cx)), y = int(std::lround(cy));
        if (!mask.contains(x, y) || !mask.inside(x, y)) {
            throw Error(ErrorCode::InvalidArgument, "optic disc center lies outside the FOV");
        }
    }
};

// Revised CRAE/CRVE branching coefficients.
struct KnudtsonConstants {
    double c_artery = 0.88;
    double c_vein = 0.95;

    void validate() const {
        if (!(c_artery > 0.0 && c_artery <= 1.0) || !(c_vein > 0.0 && c_vein <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "Knudtson constants must lie in (0,1]");
        }
    }
};

enum class VesselClass { Artery, Vein };

struct VesselSegmentMeasure {
    int branch_id = 0;
    VesselClass vessel_class = VesselClass::Artery;
    double diameter = 0.0;      // mean over the measured centerline pixels
    std::size_t pixels = 0;     // centerline pixels measured
    Point representative{};
};

/**
 * @brief Vessel diameter 2 * EDT - 1 at every skeleton pixel, 0 elsewhere.
 *
 * EDT is the distance to the nearest non-vessel pixel; the area beyond the
 * image border is non-vessel.
 */
inline std::vector<double> diameter_map(const BinaryImage& vessel_mask, const Skeleton& skeleton) {
    if (!vessel_mask.same_shape(skeleton)) throw Error(ErrorCode::DimensionMismatch, "mask and skeleton differ in size");
    for (std::size_t i = 0; i < skeleton.size(); ++i) {
        if (skeleton[i] && !vessel_mask[i]) {
            throw Error(ErrorCode::SkeletonOutsideMask, "skeleton pixel " + std::to_string(i) + " is not a vessel pixel");
        }
    }
    auto edt = distance_to_background(vessel_mask);
    std::vector<double> out(skeleton.size(), 0.0);
    for (std::size_t i = 0; i < skeleton.size(); ++i) {
        if (skeleton[i]) out[i] = 2.0 * edt[i] - 1.0;
    }
    return out;
}

/// Diameter of every vessel pixel, taken from its nearest centerline pixel.
inline std::vector<double> vessel_diameter_field(const BinaryImage& vessel_mask) {
    auto skeleton = skeletonize(vessel_mask);
    auto centerline = diameter_map(vessel_mask, skeleton);
    auto ft = feature_transform(skeleton);
    std::vector<double> out(vessel_mask.size(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (vessel_mask[i] && ft.nearest[i] >= 0) out[i] = centerline[std::size_t(ft.nearest[i])];
    }
    return out;
}

/**
 * @brief Per-branch class and mean diameter.
 *
 * `keep` optionally clips each branch to a pixel subset; only the kept
 * pixels are measured and the representative point is the middle kept
 * pixel. Branches with fewer than `min_pixels` kept pixels are skipped.
 */
template <typename Keep>
std::vector<VesselSegmentMeasure> measure_segments(const std::vector<Branch>& branches,
                                                   const std::vector<double>& final_scores,
                                                   const std::vector<double>& diameters, int width,
                                                   std::size_t min_pixels, Keep keep) {
    if (final_scores.size() != branches.size()) {
        throw Error(ErrorCode::DimensionMismatch, "score count differs from branch count");
    }
    std::vector<VesselSegmentMeasure> out;
    for (std::size_t k = 0; k < branches.size(); ++k) {
        std::vector<Point> kept;
        for (auto p : branches[k].pixels) {
            if (keep(p)) kept.push_back(p);
        }
        if (kept.empty() || kept.size() < min_pixels) continue;
        double sum = 0.0;
        for (auto p : kept) sum += diameters[std::size_t(p.y) * width + p.x];
        VesselSegmentMeasure m;
        m.branch_id = branches[k].id;
        m.vessel_class = final_scores[k] > 0.0 ? VesselClass::Artery : VesselClass::Vein;
        m.pixels = kept.size();
        m.diameter = sum / double(kept.size());
        m.representative = kept[kept.size() / 2];
        if (m.diameter > 0.0) out.push_back(m);
    }
    return out;
}

inline std::vector<VesselSegmentMeasure> measure_segments(const std::vector<Branch>& branches,
                                                          const std::vector<double>& final_scores,
                                                          const std::vector<double>& diameters, int width,
                                                          std::size_t min_pixels = 1) {
    return measure_segments(branches, final_scores, diameters, width, min_pixels, [](Point) { return true; });
}

inline double distance_in_disc_diameters(Point p, const OpticDiscSpec& od) {
    return std::hypot(double(p.x) - od.cx, double(p.y) - od.cy) / od.dd;
}

inline bool in_measurement_annulus(Point p, const OpticDiscSpec& od) {
    double r = distance_in_disc_diameters(p, od);
    return r >= 0.5 && r <= 2.0;
}

struct AnnulusSelection {
    std::vector<VesselSegmentMeasure> arteries;  // widest first, at most 6
    std::vector<VesselSegmentMeasure> veins;
};

inline constexpr std::size_t kWidestRetained = 6;

/// Segments whose representative point lies 0.5-2 DD from the disc center; six widest per class.
inline AnnulusSelection annulus_select(const std::vector<VesselSegmentMeasure>& measures, const OpticDiscSpec& od) {
    AnnulusSelection sel;
    for (const auto& m : measures) {
        if (!in_measurement_annulus(m.representative, od)) continue;
        (m.vessel_class == VesselClass::Artery ? sel.arteries : sel.veins).push_back(m);
    }
    auto widest_first = [](const VesselSegmentMeasure& a, const VesselSegmentMeasure& b) {
        return a.diameter != b.diameter ? a.diameter > b.diameter : a.branch_id < b.branch_id;
    };
    for (auto* v : {&sel.arteries, &sel.veins}) {
        std::sort(v->begin(), v->end(), widest_first);
        if (v->size() > kWidestRetained) v->resize(kWidestRetained);
    }
    return sel;
}

/**
 * @brief Central retinal vessel equivalent by iterative pairing.
 *
 * Each round sorts the widths and combines widest with narrowest as
 * c * sqrt(w_max^2 + w_min^2); an odd middle width is carried unpaired.
 */
inline double knudtson_equivalent(std::vector<double> widths, double c) {
    if (widths.empty()) throw Error(ErrorCode::EmptyList, "no widths to combine");
    while (widths.size() > 1) {
        std::sort(widths.begin(), widths.end());
        std::vector<double> next;
        std::size_t lo = 0, hi = widths.size() - 1;
        for (; lo < hi; ++lo, --hi) next.push_back(c * std::sqrt(widths[hi] * widths[hi] + widths[lo] * widths[lo]));
        if (lo == hi) next.push_back(widths[lo]);
        widths = std::move(next);
    }
    return widths.front();
}

inline std::vector<double> diameters_of(const std::vector<VesselSegmentMeasure>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& m : v) out.push_back(m.diameter);
    return out;
}

/// CRAE / CRVE from an annulus selection.
inline double local_avr(const AnnulusSelection& sel, const KnudtsonConstants& k) {
    k.validate();
    if (sel.arteries.empty() || sel.veins.empty()) {
        throw Error(ErrorCode::MissingClassInAnnulus, "annulus lacks measured arteries or veins");
    }
    return knudtson_equivalent(diameters_of(sel.arteries), k.c_artery) /
           knudtson_equivalent(diameters_of(sel.veins), k.c_vein);
}

/**
 * @brief Mean artery diameter over mean vein diameter across the FOV.
 *
 * Means are weighted by centerline pixel count; segments whose
 * representative point is outside the FOV are ignored.
 */
inline double global_avr(const std::vector<VesselSegmentMeasure>& measures, const FovMask& mask) {
    double a_sum = 0.0, v_sum = 0.0;
    double a_n = 0.0, v_n = 0.0;
    for (const auto& m : measures) {
        auto p = m.representative;
        if (!mask.contains(p.x, p.y) || !mask.inside(p.x, p.y)) continue;
        if (m.vessel_class == VesselClass::Artery) {
            a_sum += m.diameter * double(m.pixels);
            a_n += double(m.pixels);
        } else {
            v_sum += m.diameter * double(m.pixels);
            v_n += double(m.pixels);
        }
    }
    if (a_n == 0.0 || v_n == 0.0) throw Error(ErrorCode::MissingClass, "global AVR needs arteries and veins");
    return (a_sum / a_n) / (v_sum / v_n);
}

} // namespace avlsp
