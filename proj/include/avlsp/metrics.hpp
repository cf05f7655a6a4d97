#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "avlsp/error.hpp"
#include "avlsp/raster.hpp"
#include "avlsp/skeleton.hpp"

namespace avlsp {

inline constexpr double kVesselDivisionGuard = 1e-6;

/// max(p_artery, p_vein) / max(p_back, 1e-6). A score, not a probability: may exceed 1.
inline std::vector<double> vessel_probability(const ProbabilityTriplet& p) {
    std::vector<double> out(std::size_t(p.width()) * p.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::max(double(p.artery(i)), double(p.vein(i))) /
                 std::max(double(p.back(i)), kVesselDivisionGuard);
    }
    return out;
}

/**
 * @brief ROC curve over all distinct score values.
 *
 * thresholds is ascending and bracketed by -inf and +inf; at threshold z a
 * sample is called positive when its score is >= z.
 */
struct RocCurve {
    std::vector<double> thresholds;
    std::vector<double> tpr;
    std::vector<double> tnr;
};

struct RocResult {
    RocCurve curve;
    double auc = 0.0;
};

/**
 * @brief ROC sweep and trapezoidal AUC over the inside-FOV pixels.
 *
 * The area is accumulated in integer counts, so separable data gives exactly
 * 1 and constant scores exactly 0.5.
 */
inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& positives,
                         const std::vector<std::uint8_t>& include) {
    if (scores.size() != positives.size() || scores.size() != include.size()) {
        throw Error(ErrorCode::DimensionMismatch, "scores, labels and mask differ in length");
    }
    std::vector<std::size_t> idx;
    std::uint64_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!include[i]) continue;
        idx.push_back(i);
        if (positives[i]) {
            ++n_pos;
        } else {
            ++n_neg;
        }
    }
    if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::DegenerateClass, "ROC needs positives and negatives");
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    constexpr double inf = std::numeric_limits<double>::infinity();
    // descending sweep, reversed at the end
    std::vector<double> thr{inf};
    std::vector<std::uint64_t> tp{0}, fp{0};
    long double twice_area = 0.0L;
    std::uint64_t cur_tp = 0, cur_fp = 0;
    for (std::size_t k = 0; k < idx.size();) {
        double z = scores[idx[k]];
        std::uint64_t prev_tp = cur_tp, prev_fp = cur_fp;
        for (; k < idx.size() && scores[idx[k]] == z; ++k) {
            if (positives[idx[k]]) {
                ++cur_tp;
            } else {
                ++cur_fp;
            }
        }
        twice_area += static_cast<long double>(cur_fp - prev_fp) * static_cast<long double>(cur_tp + prev_tp);
        thr.push_back(z);
        tp.push_back(cur_tp);
        fp.push_back(cur_fp);
    }
    thr.push_back(-inf);
    tp.push_back(n_pos);
    fp.push_back(n_neg);

    RocResult res;
    const std::size_t m = thr.size();
    res.curve.thresholds.resize(m);
    res.curve.tpr.resize(m);
    res.curve.tnr.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t src = m - 1 - k;
        res.curve.thresholds[k] = thr[src];
        res.curve.tpr[k] = double(tp[src]) / double(n_pos);
        res.curve.tnr[k] = 1.0 - double(fp[src]) / double(n_neg);
    }
    res.auc = double(twice_area / (2.0L * static_cast<long double>(n_pos) * static_cast<long double>(n_neg)));
    return res;
}

inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& positives,
                         const FovMask& mask) {
    return roc_auc(scores, positives, mask.data());
}

/// Fraction of inside-FOV pixels whose predicted code equals the truth.
inline double three_class_accuracy(const LabelMap& pred, const LabelMap& truth, const FovMask& mask) {
    if (!pred.same_shape(truth) || !pred.same_shape(mask)) {
        throw Error(ErrorCode::DimensionMismatch, "prediction, truth and FOV differ in size");
    }
    std::size_t inside = 0, correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask.inside(i)) continue;
        ++inside;
        correct += pred[i] == truth[i];
    }
    return double(correct) / double(inside);
}

struct SensSpec {
    double sensitivity = 0.0;  // arteries found among truth arteries
    double specificity = 0.0;  // veins found among truth veins
    std::size_t arteries = 0;
    std::size_t veins = 0;
};

namespace detail {

inline SensSpec av_counts(const LabelMap& pred, const LabelMap& truth, const FovMask& mask,
                          const std::vector<std::uint8_t>* subset) {
    SensSpec r;
    std::size_t tp = 0, tn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!mask.inside(i) || (subset && !(*subset)[i])) continue;
        if (truth[i] == kArtery) {
            ++r.arteries;
            tp += pred[i] == kArtery;
        } else if (truth[i] == kVein) {
            ++r.veins;
            tn += pred[i] == kVein;
        }
    }
    if (r.arteries == 0 || r.veins == 0) {
        throw Error(ErrorCode::DegenerateClass, "A/V evaluation needs truth arteries and veins");
    }
    r.sensitivity = double(tp) / double(r.arteries);
    r.specificity = double(tn) / double(r.veins);
    return r;
}

} // namespace detail

/**
 * @brief Artery sensitivity and vein specificity over truth vessel pixels.
 *
 * Arteries are the positive class, veins the negative one. Pixels the
 * prediction calls background count as misses for their truth class. With
 * centerline_only, only the thinned truth vessel mask is scored.
 */
inline SensSpec av_sensitivity_specificity(const LabelMap& pred, const LabelMap& truth, const FovMask& mask,
                                           bool centerline_only) {
    if (!pred.same_shape(truth) || !pred.same_shape(mask)) {
        throw Error(ErrorCode::DimensionMismatch, "prediction, truth and FOV differ in size");
    }
    if (!centerline_only) return detail::av_counts(pred, truth, mask, nullptr);
    auto skel = zhang_suen_thin(truth.vessel_mask());
    return detail::av_counts(pred, truth, mask, &skel.data());
}

enum class Stratum { All, Thin, Medium, Wide };

inline std::string_view to_string(Stratum s) {
    switch (s) {
    case Stratum::All: return "all";
    case Stratum::Thin: return "lt2";
    case Stratum::Medium: return "2to4";
    case Stratum::Wide: return "ge4";
    }
    return "?";
}

/// <2 px, [2,4) px, >=4 px.
inline Stratum stratum_of(double diameter) {
    if (diameter < 2.0) return Stratum::Thin;
    if (diameter < 4.0) return Stratum::Medium;
    return Stratum::Wide;
}

struct StratumMetrics {
    Stratum stratum = Stratum::All;
    std::size_t pixels = 0;     // truth vessel pixels in the stratum
    double fraction = 0.0;      // share of all truth vessel pixels
    bool empty = true;
    std::optional<double> accuracy;     // prediction == truth on the stratum's pixels
    std::optional<SensSpec> av;         // absent if the stratum lacks one class
};

/**
 * @brief Per-diameter-stratum evaluation on the truth vessel pixels.
 *
 * Empty strata are reported with empty = true rather than failing.
 */
inline std::vector<StratumMetrics> stratify_by_diameter(const std::vector<double>& truth_diameters,
                                                        const LabelMap& pred, const LabelMap& truth,
                                                        const FovMask& mask) {
    if (truth_diameters.size() != truth.size() || !pred.same_shape(truth) || !pred.same_shape(mask)) {
        throw Error(ErrorCode::DimensionMismatch, "diameter map, labels and FOV differ in size");
    }
    std::size_t total = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) total += mask.inside(i) && is_vessel(truth[i]);

    std::vector<StratumMetrics> out;
    for (Stratum s : {Stratum::Thin, Stratum::Medium, Stratum::Wide}) {
        StratumMetrics m;
        m.stratum = s;
        std::vector<std::uint8_t> subset(truth.size(), 0);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (!mask.inside(i) || !is_vessel(truth[i]) || stratum_of(truth_diameters[i]) != s) continue;
            subset[i] = 1;
            ++m.pixels;
            correct += pred[i] == truth[i];
        }
        m.empty = m.pixels == 0;
        m.fraction = total ? double(m.pixels) / double(total) : 0.0;
        if (!m.empty) {
            m.accuracy = double(correct) / double(m.pixels);
            try {
                m.av = detail::av_counts(pred, truth, mask, &subset);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DegenerateClass) throw;
            }
        }
        out.push_back(m);
    }
    return out;
}

} // namespace avlsp
