#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "avlsp/distance.hpp"
#include "avlsp/error.hpp"
#include "avlsp/raster.hpp"
#include "avlsp/skeleton.hpp"
#include "avlsp/vessel_graph.hpp"

namespace avlsp {

/// Weight a score keeps when it crosses an edge of position cost `cost_pos`.
inline double attenuation(double cost_pos, double sigma_prop) { return std::exp(-cost_pos / sigma_prop); }

/// Post-order pass: every node accumulates the attenuated sums of its subtrees.
inline std::vector<double> upward_pass(const SpanningTree& t, const std::vector<double>& s_init, const GraphParams& p) {
    if (s_init.size() != t.size()) throw Error(ErrorCode::DimensionMismatch, "score count differs from tree size");
    std::vector<double> up = s_init;
    auto order = t.preorder();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        auto j = *it;
        if (j == t.root) continue;
        up[t.parent[j]] += attenuation(t.edge_pos_cost[j], p.sigma_prop) * up[j];
    }
    return up;
}

/// Pre-order pass: each child receives its parent's total minus what it sent up.
inline std::vector<double> downward_pass(const SpanningTree& t, const std::vector<double>& s_up, const GraphParams& p) {
    if (s_up.size() != t.size()) throw Error(ErrorCode::DimensionMismatch, "score count differs from tree size");
    std::vector<double> fin = s_up;
    for (auto j : t.preorder()) {
        if (j == t.root) continue;
        double a = attenuation(t.edge_pos_cost[j], p.sigma_prop);
        fin[j] = s_up[j] + a * (fin[t.parent[j]] - a * s_up[j]);
    }
    return fin;
}

struct PropagationIteration {
    std::vector<double> s_init;
    std::vector<double> s_up;
    std::vector<double> s_fin;
    SpanningTree tree;
};

struct PropagationResult {
    std::vector<double> initial;  // scores before propagation
    std::vector<double> scores;   // final scores, clamped to [-0.5, 0.5]
    std::vector<PropagationIteration> iterations;
};

inline double clamp_score(double s) { return std::clamp(s, -0.5, 0.5); }

/**
 * @brief Iterated likelihood score propagation.
 *
 * Each iteration rebuilds the graph from the current scores (the label cost
 * depends on them), takes its minimum spanning tree, runs the upward and
 * downward passes and clamps the result back to [-0.5, 0.5].
 */
inline PropagationResult propagate(const std::vector<ScoredBranch>& branches, const GraphParams& p, int iterations = 2) {
    if (branches.empty()) throw Error(ErrorCode::InvalidArgument, "propagate needs at least one branch");
    if (iterations < 0) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 0");
    p.validate();

    PropagationResult res;
    std::vector<ScoredBranch> current = branches;
    res.initial.reserve(branches.size());
    for (const auto& b : branches) res.initial.push_back(b.score);
    res.scores = res.initial;

    for (int it = 0; it < iterations; ++it) {
        PropagationIteration step;
        step.s_init = res.scores;
        step.tree = prim_mst(build_graph(current, p));
        step.s_up = upward_pass(step.tree, step.s_init, p);
        step.s_fin = downward_pass(step.tree, step.s_up, p);
        for (std::size_t i = 0; i < current.size(); ++i) {
            res.scores[i] = clamp_score(step.s_fin[i]);
            current[i].score = res.scores[i];
        }
        res.iterations.push_back(std::move(step));
    }
    return res;
}

/// Initial branch scores from the per-pixel artery likelihood.
inline std::vector<ScoredBranch> score_branches(const std::vector<Branch>& branches, const Raster2D& likelihood) {
    std::vector<ScoredBranch> out;
    out.reserve(branches.size());
    for (const auto& b : branches) out.push_back({b, branch_score(b, likelihood)});
    return out;
}

/// Per-pixel branch index; -1 where no branch applies.
struct BranchAssignment {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> branch;
};

/**
 * @brief Assign every vessel pixel to the branch owning its nearest branch pixel.
 *
 * Distances are Euclidean. Junction pixels and off-centerline vessel pixels
 * are covered the same way. Non-vessel pixels stay at -1.
 */
inline BranchAssignment assign_pixels_to_branches(const BinaryImage& vessels, const std::vector<Branch>& branches) {
    const int w = vessels.width(), h = vessels.height();
    BranchAssignment out{w, h, std::vector<std::int32_t>(std::size_t(w) * h, -1)};
    if (branches.empty()) return out;

    std::vector<std::int32_t> owner(std::size_t(w) * h, -1);
    BinaryImage centerline(w, h);
    for (std::size_t k = 0; k < branches.size(); ++k) {
        for (auto px : branches[k].pixels) {
            owner[std::size_t(px.y) * w + px.x] = std::int32_t(k);
            centerline.at(px.x, px.y) = 1;
        }
    }
    auto ft = feature_transform(centerline);
    for (std::size_t i = 0; i < out.branch.size(); ++i) {
        if (!vessels[i]) continue;
        auto nearest = ft.nearest[i];
        if (nearest >= 0) out.branch[i] = owner[std::size_t(nearest)];
    }
    return out;
}

/**
 * @brief Relabel vessel pixels from their branch's final score.
 *
 * Positive scores become artery, zero or negative become vein. Background
 * and outside-FOV codes are untouched.
 */
inline LabelMap relabel(const LabelMap& labels, const std::vector<double>& final_scores,
                        const BranchAssignment& assignment) {
    if (labels.width() != assignment.width || labels.height() != assignment.height) {
        throw Error(ErrorCode::DimensionMismatch, "labels and branch assignment differ in size");
    }
    LabelMap out = labels;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!is_vessel(out[i])) continue;
        auto b = assignment.branch[i];
        if (b < 0 || std::size_t(b) >= final_scores.size()) {
            throw Error(ErrorCode::UnassignedVesselPixel, "vessel pixel " + std::to_string(i) + " has no branch");
        }
        out[i] = final_scores[std::size_t(b)] > 0.0 ? kArtery : kVein;
    }
    return out;
}

} // namespace avlsp
