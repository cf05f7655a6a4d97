#pragma once

// Independent reference implementations used by the unit and acceptance tests.
// Each one is deliberately brute force and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "avlsp/avlsp.hpp"

namespace oracle {

struct TreeEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    double cost = 0.0;
};

/// Random labeled tree: node k > 0 attaches to a uniformly chosen earlier node, then ids are shuffled.
inline std::vector<TreeEdge> random_tree(std::size_t n, std::mt19937_64& rng, double cost_lo = 0.01,
                                         double cost_hi = 5.0) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::uniform_real_distribution<double> cost(cost_lo, cost_hi);
    std::vector<TreeEdge> edges;
    for (std::size_t k = 1; k < n; ++k) {
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        edges.push_back({perm[k], perm[pick(rng)], cost(rng)});
    }
    return edges;
}

inline std::vector<avlsp::WeightedEdge> as_weighted(const std::vector<TreeEdge>& edges) {
    std::vector<avlsp::WeightedEdge> out;
    for (const auto& e : edges) out.push_back({e.a, e.b, e.cost, 0.0, e.cost});
    return out;
}

/// s_fin[j] = sum over k of s[k] times the product of exp(-c/sigma) along the tree path j..k.
inline std::vector<double> path_product_aggregate(std::size_t n, const std::vector<TreeEdge>& edges,
                                                  const std::vector<double>& s, double sigma_prop) {
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (const auto& e : edges) {
        double w = std::exp(-e.cost / sigma_prop);
        adj[e.a].push_back({e.b, w});
        adj[e.b].push_back({e.a, w});
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        // depth-first walk from j carrying the running product
        std::vector<double> weight(n, -1.0);
        std::vector<std::size_t> stack{j};
        weight[j] = 1.0;
        while (!stack.empty()) {
            auto u = stack.back();
            stack.pop_back();
            for (auto [v, w] : adj[u]) {
                if (weight[v] >= 0.0) continue;
                weight[v] = weight[u] * w;
                stack.push_back(v);
            }
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) sum += s[k] * weight[k];
        out[j] = sum;
    }
    return out;
}

/// Kruskal with a plain array union-find; returns the total weight.
inline double kruskal_weight(std::size_t n, std::vector<avlsp::WeightedEdge> edges) {
    std::sort(edges.begin(), edges.end(),
              [](const auto& a, const auto& b) { return a.cost_total < b.cost_total; });
    std::vector<std::size_t> root(n);
    std::iota(root.begin(), root.end(), std::size_t{0});
    auto find = [&](std::size_t a) {
        while (root[a] != a) a = root[a];
        return a;
    };
    double total = 0.0;
    std::size_t used = 0;
    for (const auto& e : edges) {
        auto a = find(e.i), b = find(e.j);
        if (a == b) continue;
        root[a] = b;
        total += e.cost_total;
        ++used;
    }
    return used + 1 == n ? total : std::numeric_limits<double>::quiet_NaN();
}

/// P(score_pos > score_neg) + 0.5 P(tie), over all positive/negative pairs.
inline double mann_whitney(const std::vector<double>& scores, const std::vector<std::uint8_t>& positive) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!positive[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (positive[j]) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

/// Distance from each pixel to the nearest background pixel; the outside of the image is background.
inline std::vector<double> brute_edt(const avlsp::BinaryImage& mask) {
    const int w = mask.width(), h = mask.height();
    std::vector<double> out(mask.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            double best = std::min({x + 1, y + 1, w - x, h - y});
            for (int v = 0; v < h; ++v) {
                for (int u = 0; u < w; ++u) {
                    if (mask.at(u, v)) continue;
                    best = std::min(best, std::hypot(double(u - x), double(v - y)));
                }
            }
            out[std::size_t(y) * w + x] = best;
        }
    }
    return out;
}

/// Median of each k x k window with clamped (replicated) borders, by full sort.
inline std::vector<float> sorted_window_median(const avlsp::Raster2D& ch, int k) {
    const int w = ch.width(), h = ch.height(), r = k / 2;
    std::vector<float> out(std::size_t(w) * h);
    std::vector<float> win;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            win.clear();
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    int xx = std::clamp(x + dx, 0, w - 1), yy = std::clamp(y + dy, 0, h - 1);
                    win.push_back(ch.at(xx, yy));
                }
            }
            std::sort(win.begin(), win.end());
            out[std::size_t(y) * w + x] = win[win.size() / 2];
        }
    }
    return out;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Two-pass population mean and standard deviation over inside-FOV pixels.
inline MeanStd fov_mean_std(std::span<const float> v, const avlsp::FovMask& mask) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask.inside(i)) {
            sum += v[i];
            ++n;
        }
    }
    double mean = sum / double(n), ss = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask.inside(i)) ss += (v[i] - mean) * (v[i] - mean);
    }
    return {mean, std::sqrt(ss / double(n))};
}

/// Textbook Zhang-Suen thinning (two sub-iterations per pass, until no change).
inline avlsp::BinaryImage reference_zhang_suen(const avlsp::BinaryImage& in) {
    const int w = in.width(), h = in.height();
    std::vector<int> img(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) img[i] = in[i] ? 1 : 0;
    auto px = [&](int x, int y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0 : img[std::size_t(y) * w + x]; };
    bool changed = true;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<std::size_t> del;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (!px(x, y)) continue;
                    int p2 = px(x, y - 1), p3 = px(x + 1, y - 1), p4 = px(x + 1, y), p5 = px(x + 1, y + 1);
                    int p6 = px(x, y + 1), p7 = px(x - 1, y + 1), p8 = px(x - 1, y), p9 = px(x - 1, y - 1);
                    int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
                    int seq[9] = {p2, p3, p4, p5, p6, p7, p8, p9, p2};
                    int a = 0;
                    for (int k = 0; k < 8; ++k) a += seq[k] == 0 && seq[k + 1] == 1;
                    bool c = pass == 0 ? (p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0)
                                       : (p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0);
                    if (b >= 2 && b <= 6 && a == 1 && c) del.push_back(std::size_t(y) * w + x);
                }
            }
            for (auto i : del) img[i] = 0;
            changed = changed || !del.empty();
        }
    }
    avlsp::BinaryImage out(w, h);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::uint8_t(img[i]);
    return out;
}

/// 8-connected component count by flood fill.
inline int flood_components(const avlsp::BinaryImage& img) {
    const int w = img.width(), h = img.height();
    std::vector<char> seen(img.size(), 0);
    int count = 0;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            std::size_t i0 = std::size_t(y0) * w + x0;
            if (!img[i0] || seen[i0]) continue;
            ++count;
            std::vector<std::pair<int, int>> stack{{x0, y0}};
            seen[i0] = 1;
            while (!stack.empty()) {
                auto [x, y] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        int u = x + dx, v = y + dy;
                        if (u < 0 || v < 0 || u >= w || v >= h) continue;
                        std::size_t j = std::size_t(v) * w + u;
                        if (img[j] && !seen[j]) {
                            seen[j] = 1;
                            stack.push_back({u, v});
                        }
                    }
                }
            }
        }
    }
    return count;
}

/// Union of random discs and thick strokes.
inline avlsp::BinaryImage random_blobs(int w, int h, std::mt19937_64& rng) {
    avlsp::BinaryImage img(w, h);
    std::uniform_int_distribution<int> count(1, 6), xs(0, w - 1), ys(0, h - 1), radius(1, 8);
    int n = count(rng);
    for (int k = 0; k < n; ++k) {
        int cx = xs(rng), cy = ys(rng), r = radius(rng);
        int ex = xs(rng), ey = ys(rng);
        bool stroke = rng() % 2 == 0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double d;
                if (stroke) {
                    double vx = ex - cx, vy = ey - cy, len2 = vx * vx + vy * vy;
                    double t = len2 > 0 ? std::clamp(((x - cx) * vx + (y - cy) * vy) / len2, 0.0, 1.0) : 0.0;
                    d = std::hypot(x - cx - t * vx, y - cy - t * vy);
                    if (d <= r / 2.0) img.at(x, y) = 1;
                } else {
                    d = std::hypot(x - cx, y - cy);
                    if (d <= r) img.at(x, y) = 1;
                }
            }
        }
    }
    return img;
}

/// Majority label of the truth map over a branch's pixels (artery on ties).
inline std::uint8_t majority(const avlsp::LabelMap& labels, const avlsp::Branch& b) {
    long a = 0, v = 0;
    for (auto p : b.pixels) {
        a += labels.at(p.x, p.y) == avlsp::kArtery;
        v += labels.at(p.x, p.y) == avlsp::kVein;
    }
    return a >= v ? avlsp::kArtery : avlsp::kVein;
}

} // namespace oracle
