#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "avlsp/raster.hpp"

namespace avlsp {

/// One-pixel-wide centerline image (nonzero = on).
using Skeleton = BinaryImage;

namespace detail {

// 8-neighbourhood in Zhang-Suen order P2..P9: N, NE, E, SE, S, SW, W, NW.
inline constexpr std::array<int, 8> kNbrDx{0, 1, 1, 1, 0, -1, -1, -1};
inline constexpr std::array<int, 8> kNbrDy{-1, -1, 0, 1, 1, 1, 0, -1};

inline std::uint8_t get_or_zero(const BinaryImage& img, int x, int y) {
    return img.contains(x, y) ? (img.at(x, y) ? 1 : 0) : 0;
}

inline int count_neighbors(const BinaryImage& img, int x, int y) {
    int n = 0;
    for (int k = 0; k < 8; ++k) n += get_or_zero(img, x + kNbrDx[k], y + kNbrDy[k]);
    return n;
}

/// Union-find with path halving; used by component labeling and graph code.
class DisjointSets {
public:
    explicit DisjointSets(std::size_t n = 0) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t add() {
        parent_.push_back(parent_.size());
        return parent_.size() - 1;
    }

    std::size_t find(std::size_t a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
        return true;
    }

    std::size_t size() const noexcept { return parent_.size(); }

private:
    std::vector<std::size_t> parent_;
};

inline bool zhang_suen_deletable(const BinaryImage& img, int x, int y, bool first_pass) {
    std::array<std::uint8_t, 8> p{};
    int b = 0;
    for (int k = 0; k < 8; ++k) {
        p[std::size_t(k)] = get_or_zero(img, x + kNbrDx[k], y + kNbrDy[k]);
        b += p[std::size_t(k)];
    }
    if (b < 2 || b > 6) return false;
    int a = 0;
    for (int k = 0; k < 8; ++k) a += (p[std::size_t(k)] == 0 && p[std::size_t((k + 1) % 8)] == 1);
    if (a != 1) return false;
    // p[0]=P2 (N), p[2]=P4 (E), p[4]=P6 (S), p[6]=P8 (W)
    if (first_pass) return (p[0] * p[2] * p[4]) == 0 && (p[2] * p[4] * p[6]) == 0;
    return (p[0] * p[2] * p[6]) == 0 && (p[0] * p[4] * p[6]) == 0;
}

} // namespace detail

/**
 * @brief Two-pass 8-connected component labeling.
 *
 * Returns per-pixel labels (0 = off, components numbered from 1 in raster
 * order of their first pixel) and writes the component count.
 */
inline std::vector<int> label_components(const BinaryImage& img, int& count) {
    const int w = img.width(), h = img.height();
    std::vector<int> labels(img.size(), 0);
    detail::DisjointSets sets(1);  // slot 0 unused
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!img.at(x, y)) continue;
            // already-visited neighbours: W, NW, N, NE
            const std::array<std::array<int, 2>, 4> prev{{{-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
            int assigned = 0;
            for (auto [dx, dy] : prev) {
                int xx = x + dx, yy = y + dy;
                if (!img.contains(xx, yy)) continue;
                int l = labels[std::size_t(yy) * w + xx];
                if (l == 0) continue;
                if (assigned == 0) {
                    assigned = l;
                } else {
                    sets.unite(std::size_t(assigned), std::size_t(l));
                }
            }
            if (assigned == 0) assigned = int(sets.add());
            labels[std::size_t(y) * w + x] = assigned;
        }
    }
    std::vector<int> remap(sets.size(), 0);
    count = 0;
    for (auto& l : labels) {
        if (l == 0) continue;
        auto root = sets.find(std::size_t(l));
        if (remap[root] == 0) remap[root] = ++count;
        l = remap[root];
    }
    return labels;
}

inline int count_components(const BinaryImage& img) {
    int n = 0;
    label_components(img, n);
    return n;
}

/**
 * @brief Zhang-Suen thinning run to a fixpoint.
 *
 * The two parallel sub-iterations can erase a component outright (a 2x2
 * block is the classic case). Any input component left without a pixel gets
 * its first raster-order pixel back, so the component count is preserved; an
 * isolated pixel is never deletable, so the result stays a fixpoint.
 */
inline Skeleton zhang_suen_thin(const BinaryImage& mask) {
    const int w = mask.width(), h = mask.height();
    Skeleton s(w, h);
    for (std::size_t i = 0; i < mask.size(); ++i) s[i] = mask[i] ? 1 : 0;

    std::vector<std::size_t> to_delete;
    bool changed = true;
    while (changed) {
        changed = false;
        for (bool first : {true, false}) {
            to_delete.clear();
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (s.at(x, y) && detail::zhang_suen_deletable(s, x, y, first)) {
                        to_delete.push_back(std::size_t(y) * w + x);
                    }
                }
            }
            for (auto i : to_delete) s[i] = 0;
            changed = changed || !to_delete.empty();
        }
    }

    int n_in = 0;
    auto comp = label_components(mask, n_in);
    std::vector<char> survived(std::size_t(n_in) + 1, 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i]) survived[std::size_t(comp[i])] = 1;
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto c = std::size_t(comp[i]);
        if (c != 0 && !survived[c]) {
            s[i] = 1;
            survived[c] = 1;
        }
    }
    return s;
}

namespace detail {

// True if the on-neighbours of (x, y) form a single 8-connected group inside the 3x3 ring.
inline bool ring_neighbors_connected(const BinaryImage& img, int x, int y) {
    std::array<std::uint8_t, 8> on{};
    int total = 0;
    for (int k = 0; k < 8; ++k) {
        on[std::size_t(k)] = get_or_zero(img, x + kNbrDx[k], y + kNbrDy[k]);
        total += on[std::size_t(k)];
    }
    if (total == 0) return false;
    std::array<char, 8> seen{};
    std::array<int, 8> stack{};
    int top = 0, reached = 0;
    for (int k = 0; k < 8; ++k) {
        if (on[std::size_t(k)]) {
            stack[std::size_t(top++)] = k;
            seen[std::size_t(k)] = 1;
            break;
        }
    }
    while (top > 0) {
        int k = stack[std::size_t(--top)];
        ++reached;
        for (int m = 0; m < 8; ++m) {
            if (!on[std::size_t(m)] || seen[std::size_t(m)]) continue;
            if (std::abs(kNbrDx[k] - kNbrDx[m]) <= 1 && std::abs(kNbrDy[k] - kNbrDy[m]) <= 1) {
                seen[std::size_t(m)] = 1;
                stack[std::size_t(top++)] = m;
            }
        }
    }
    return reached == total;
}

} // namespace detail

/**
 * @brief Delete the corner pixels of 4-connected staircases.
 *
 * Zhang-Suen output can step diagonally through an extra corner pixel,
 * which then has three neighbours and would be read as a junction. A pixel
 * is removed when two perpendicular 4-neighbours are on and its other
 * neighbours stay 8-connected without it. Pixels are visited sequentially in
 * raster order until nothing changes, so connectivity is kept.
 */
inline Skeleton remove_staircases(const Skeleton& thin) {
    Skeleton s = thin;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int y = 0; y < s.height(); ++y) {
            for (int x = 0; x < s.width(); ++x) {
                if (!s.at(x, y) || detail::count_neighbors(s, x, y) < 2) continue;
                bool n = detail::get_or_zero(s, x, y - 1), e = detail::get_or_zero(s, x + 1, y);
                bool so = detail::get_or_zero(s, x, y + 1), w = detail::get_or_zero(s, x - 1, y);
                bool corner = (n && e) || (e && so) || (so && w) || (w && n);
                if (corner && detail::ring_neighbors_connected(s, x, y)) {
                    s.at(x, y) = 0;
                    changed = true;
                }
            }
        }
    }
    return s;
}

/// Zhang-Suen thinning followed by staircase removal.
inline Skeleton skeletonize(const BinaryImage& mask) { return remove_staircases(zhang_suen_thin(mask)); }

/// Skeleton pixels with three or more 8-neighbours (bifurcations and crossings), raster order.
inline std::vector<Point> detect_junctions(const Skeleton& s) {
    std::vector<Point> out;
    for (int y = 0; y < s.height(); ++y) {
        for (int x = 0; x < s.width(); ++x) {
            if (s.at(x, y) && detail::count_neighbors(s, x, y) >= 3) out.push_back({x, y});
        }
    }
    return out;
}

struct Branch {
    int id = 0;
    std::vector<Point> pixels;  // 8-connected, in path order
    double alpha1 = 0.0;        // orientation at pixels.front(), [0, pi)
    double alpha2 = 0.0;        // orientation at pixels.back(), [0, pi)
    bool degenerate = false;    // single pixel: orientation undefined, set to 0

    std::size_t size() const noexcept { return pixels.size(); }
    Point front() const { return pixels.front(); }
    Point back() const { return pixels.back(); }
};

inline double fold_angle(double a) {
    constexpr double pi = std::numbers::pi;
    a = std::fmod(a, pi);
    if (a < 0.0) a += pi;
    if (a >= pi) a -= pi;
    return a;
}

/// Orientation of the total-least-squares line through the points, folded into [0, pi).
inline double fit_orientation(std::span<const Point> pts) {
    if (pts.size() < 2) return 0.0;
    if (pts.size() == 2) {
        return fold_angle(std::atan2(double(pts[1].y - pts[0].y), double(pts[1].x - pts[0].x)));
    }
    double mx = 0.0, my = 0.0;
    for (auto p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= double(pts.size());
    my /= double(pts.size());
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (auto p : pts) {
        double dx = p.x - mx, dy = p.y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    return fold_angle(0.5 * std::atan2(2.0 * sxy, sxx - syy));
}

namespace detail {

inline bool is_4_adjacent(Point a, Point b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y) == 1; }

inline bool yx_less(Point a, Point b) { return a.y != b.y ? a.y < b.y : a.x < b.x; }

// Orders the pixels of one junction-free component into a path. Every pixel
// has at most two neighbours inside the component, so the component is a
// simple path or a cycle.
inline std::vector<Point> trace_component(std::vector<Point> pixels, const std::vector<int>& labels, int label, int width) {
    auto in_comp = [&](int x, int y, int h) {
        return x >= 0 && y >= 0 && x < width && y < h && labels[std::size_t(y) * width + x] == label;
    };
    const int height = int(labels.size() / std::size_t(width));
    std::sort(pixels.begin(), pixels.end(), yx_less);

    auto degree = [&](Point p) {
        int n = 0;
        for (int k = 0; k < 8; ++k) n += in_comp(p.x + kNbrDx[k], p.y + kNbrDy[k], height);
        return n;
    };
    Point start = pixels.front();
    for (auto p : pixels) {
        if (degree(p) <= 1) {
            start = p;
            break;
        }
    }

    std::vector<Point> path;
    path.reserve(pixels.size());
    std::vector<char> seen(labels.size(), 0);
    Point cur = start;
    while (true) {
        path.push_back(cur);
        seen[std::size_t(cur.y) * width + cur.x] = 1;
        bool found = false;
        Point next{};
        for (int pass = 0; pass < 2 && !found; ++pass) {
            for (int k = 0; k < 8; ++k) {
                Point q{cur.x + kNbrDx[k], cur.y + kNbrDy[k]};
                if (!in_comp(q.x, q.y, height) || seen[std::size_t(q.y) * width + q.x]) continue;
                if (pass == 0 && !is_4_adjacent(cur, q)) continue;
                next = q;
                found = true;
                break;
            }
        }
        if (!found) break;
        cur = next;
    }
    // A path started mid-way cannot happen for paths or cycles, but keep the
    // partition intact if the walk strands a pixel.
    if (path.size() != pixels.size()) {
        for (auto p : pixels) {
            if (!seen[std::size_t(p.y) * width + p.x]) path.push_back(p);
        }
    }
    return path;
}

} // namespace detail

/**
 * @brief Cut the skeleton into junction-free branches.
 *
 * Junction pixels are removed, the rest is labeled with the two-pass
 * algorithm, and every component is traced into an ordered pixel list
 * starting from the end with the smaller (y, x). Endpoint orientations come
 * from a line fit through up to five pixels next to each end.
 */
inline std::vector<Branch> extract_branches(const Skeleton& s) {
    Skeleton pruned = s;
    for (auto j : detect_junctions(s)) pruned.at(j.x, j.y) = 0;

    int count = 0;
    auto labels = label_components(pruned, count);
    std::vector<std::vector<Point>> members(static_cast<std::size_t>(count));
    for (int y = 0; y < s.height(); ++y) {
        for (int x = 0; x < s.width(); ++x) {
            int l = labels[std::size_t(y) * s.width() + x];
            if (l > 0) members[std::size_t(l - 1)].push_back({x, y});
        }
    }

    std::vector<Branch> branches;
    branches.reserve(std::size_t(count));
    for (int c = 0; c < count; ++c) {
        Branch b;
        b.id = c;
        b.pixels = detail::trace_component(std::move(members[std::size_t(c)]), labels, c + 1, s.width());
        if (b.pixels.size() > 1 && detail::yx_less(b.pixels.back(), b.pixels.front())) {
            std::reverse(b.pixels.begin(), b.pixels.end());
        }
        const std::size_t k = std::min<std::size_t>(5, b.pixels.size());
        std::span<const Point> all(b.pixels);
        b.alpha1 = fit_orientation(all.first(k));
        b.alpha2 = fit_orientation(all.last(k));
        b.degenerate = b.pixels.size() == 1;
        branches.push_back(std::move(b));
    }
    return branches;
}

} // namespace avlsp
