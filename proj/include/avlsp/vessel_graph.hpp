#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

#include "avlsp/error.hpp"
#include "avlsp/raster.hpp"
#include "avlsp/skeleton.hpp"

namespace avlsp {

/**
 * @brief Parameters of the branch graph and of score propagation.
 *
 * Distances are in pixels and angles in radians. The position cost of a
 * link is d / sigma_pos + lambda_angle * dtheta; it is attenuated during
 * propagation as exp(-c_pos / sigma_prop).
 */
struct GraphParams {
    double sigma_pos = 1.0;
    double sigma_lab = 0.1;
    double lambda_angle = 1.0;
    double sigma_prop = 10.0;
    double max_link_distance = 50.0;

    void validate() const {
        if (!(sigma_pos > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_pos must be > 0");
        if (!(sigma_lab > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_lab must be > 0");
        if (!(lambda_angle >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda_angle must be >= 0");
        if (!(sigma_prop > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_prop must be > 0");
        if (!(max_link_distance >= 0.0)) throw Error(ErrorCode::InvalidArgument, "max_link_distance must be >= 0");
    }
};

struct ScoredBranch {
    Branch branch;
    double score = 0.0;  // mean artery likelihood - 0.5, in [-0.5, 0.5]
};

struct WeightedEdge {
    std::size_t i = 0;
    std::size_t j = 0;
    double cost_pos = 0.0;
    double cost_lab = 0.0;
    double cost_total = 0.0;
};

struct VesselGraph {
    std::vector<std::size_t> node_pixels;  // branch length per node, used for root choice
    std::vector<WeightedEdge> edges;

    std::size_t node_count() const noexcept { return node_pixels.size(); }
};

struct SpanningTree {
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    std::size_t root = 0;
    std::vector<std::size_t> parent;               // kNone for the root
    std::vector<std::vector<std::size_t>> children;
    std::vector<double> edge_pos_cost;             // c_pos of the edge to the parent, 0 at the root
    std::vector<WeightedEdge> edges;

    std::size_t size() const noexcept { return parent.size(); }

    /// Nodes in breadth-first order from the root; parents precede children.
    std::vector<std::size_t> preorder() const {
        std::vector<std::size_t> order;
        order.reserve(size());
        order.push_back(root);
        for (std::size_t k = 0; k < order.size(); ++k) {
            for (auto c : children[order[k]]) order.push_back(c);
        }
        return order;
    }
};

/// Mean of the likelihood map over the branch pixels, re-centered to [-0.5, 0.5].
inline double branch_score(const Branch& b, const Raster2D& likelihood) {
    if (b.pixels.empty()) throw Error(ErrorCode::EmptyBranch, "branch " + std::to_string(b.id) + " has no pixels");
    double sum = 0.0;
    for (auto p : b.pixels) {
        if (p.x < 0 || p.y < 0 || p.x >= likelihood.width() || p.y >= likelihood.height()) {
            throw Error(ErrorCode::DimensionMismatch, "branch pixel outside likelihood raster");
        }
        sum += likelihood.at(p.x, p.y);
    }
    return sum / double(b.pixels.size()) - 0.5;
}

/// Undirected difference between two orientations in [0, pi): lies in [0, pi/2].
inline double angle_difference(double a, double b) {
    double d = std::abs(a - b);
    return std::min(d, std::numbers::pi - d);
}

inline double endpoint_distance(Point a, Point b) { return std::hypot(double(a.x - b.x), double(a.y - b.y)); }

/// Smallest Euclidean distance between an endpoint of a and an endpoint of b.
inline double min_endpoint_distance(const Branch& a, const Branch& b) {
    return std::min({endpoint_distance(a.front(), b.front()), endpoint_distance(a.front(), b.back()),
                     endpoint_distance(a.back(), b.front()), endpoint_distance(a.back(), b.back())});
}

/// Min over the four endpoint pairings of distance / sigma_pos + lambda_angle * angle difference.
inline double position_cost(const Branch& a, const Branch& b, const GraphParams& p) {
    const std::array<std::pair<Point, double>, 2> ea{{{a.front(), a.alpha1}, {a.back(), a.alpha2}}};
    const std::array<std::pair<Point, double>, 2> eb{{{b.front(), b.alpha1}, {b.back(), b.alpha2}}};
    double best = std::numeric_limits<double>::infinity();
    for (auto [pa, aa] : ea) {
        for (auto [pb, ab] : eb) {
            best = std::min(best, endpoint_distance(pa, pb) / p.sigma_pos + p.lambda_angle * angle_difference(aa, ab));
        }
    }
    return best;
}

inline double label_cost(double score_a, double score_b, const GraphParams& p) {
    return std::abs(score_a - score_b) / p.sigma_lab;
}

inline double label_cost(const ScoredBranch& a, const ScoredBranch& b, const GraphParams& p) {
    return label_cost(a.score, b.score, p);
}

inline WeightedEdge make_edge(std::size_t i, std::size_t j, const ScoredBranch& a, const ScoredBranch& b,
                              const GraphParams& p) {
    WeightedEdge e;
    e.i = i;
    e.j = j;
    e.cost_pos = position_cost(a.branch, b.branch, p);
    e.cost_lab = label_cost(a, b, p);
    e.cost_total = e.cost_pos + e.cost_lab;
    return e;
}

namespace detail {

inline bool edge_less(const WeightedEdge& a, const WeightedEdge& b) {
    return std::tie(a.cost_total, a.i, a.j) < std::tie(b.cost_total, b.i, b.j);
}

} // namespace detail

/**
 * @brief Branch graph with local links plus the edges needed for connectivity.
 *
 * Branch pairs whose nearest endpoints are within max_link_distance are
 * linked. If that leaves several components, the cheapest edges between
 * components (by total cost, over all remaining pairs) are added until the
 * graph is connected.
 */
inline VesselGraph build_graph(const std::vector<ScoredBranch>& branches, const GraphParams& p) {
    p.validate();
    VesselGraph g;
    const std::size_t n = branches.size();
    g.node_pixels.reserve(n);
    for (const auto& b : branches) g.node_pixels.push_back(b.branch.size());

    detail::DisjointSets sets(n);
    std::size_t components = n;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (min_endpoint_distance(branches[i].branch, branches[j].branch) > p.max_link_distance) continue;
            g.edges.push_back(make_edge(i, j, branches[i], branches[j], p));
            if (sets.unite(i, j)) --components;
        }
    }
    if (components <= 1) return g;

    // Boruvka rounds over the contracted graph: each component adds its
    // cheapest outgoing edge. With the strict edge order this selects the
    // same edges as Kruskal over all cross-component pairs.
    while (components > 1) {
        std::vector<std::optional<WeightedEdge>> cheapest(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                auto ci = sets.find(i), cj = sets.find(j);
                if (ci == cj) continue;
                auto e = make_edge(i, j, branches[i], branches[j], p);
                for (auto c : {ci, cj}) {
                    if (!cheapest[c] || detail::edge_less(e, *cheapest[c])) cheapest[c] = e;
                }
            }
        }
        for (const auto& e : cheapest) {
            if (e && sets.unite(e->i, e->j)) {
                g.edges.push_back(*e);
                --components;
            }
        }
    }
    return g;
}

/// Roots the given tree edges at `root`. Throws if they do not span all n nodes.
inline SpanningTree rooted_tree(std::size_t n, const std::vector<WeightedEdge>& tree_edges, std::size_t root) {
    if (n == 0 || root >= n) throw Error(ErrorCode::InvalidArgument, "invalid tree root");
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (const auto& e : tree_edges) {
        adj[e.i].push_back({e.j, e.cost_pos});
        adj[e.j].push_back({e.i, e.cost_pos});
    }
    SpanningTree t;
    t.root = root;
    t.parent.assign(n, SpanningTree::kNone);
    t.children.assign(n, {});
    t.edge_pos_cost.assign(n, 0.0);
    t.edges = tree_edges;
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> queue{root};
    seen[root] = 1;
    for (std::size_t k = 0; k < queue.size(); ++k) {
        auto u = queue[k];
        for (auto [v, c] : adj[u]) {
            if (seen[v]) continue;
            seen[v] = 1;
            t.parent[v] = u;
            t.edge_pos_cost[v] = c;
            t.children[u].push_back(v);
            queue.push_back(v);
        }
    }
    if (queue.size() != n || tree_edges.size() != n - 1) {
        throw Error(ErrorCode::DisconnectedGraph, "edges do not form a spanning tree");
    }
    return t;
}

/// Node with the most pixels; ties go to the smaller index.
inline std::size_t default_root(const VesselGraph& g) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.node_count(); ++i) {
        if (g.node_pixels[i] > g.node_pixels[best]) best = i;
    }
    return best;
}

/**
 * @brief Prim's algorithm keyed on cost_total, grown from `root`.
 *
 * Equal keys are resolved by the smaller node index, then the smaller parent
 * index, so the tree is deterministic.
 */
inline SpanningTree prim_mst(const VesselGraph& g, std::size_t root) {
    const std::size_t n = g.node_count();
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "graph has no nodes");
    if (root >= n) throw Error(ErrorCode::InvalidArgument, "root out of range");

    std::vector<std::vector<std::size_t>> incident(n);
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
        incident[g.edges[k].i].push_back(k);
        incident[g.edges[k].j].push_back(k);
    }

    using Entry = std::tuple<double, std::size_t, std::size_t, std::size_t>;  // cost, node, from, edge
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    std::vector<char> in_tree(n, 0);
    std::vector<WeightedEdge> chosen;
    chosen.reserve(n - 1);

    auto relax = [&](std::size_t u) {
        for (auto k : incident[u]) {
            const auto& e = g.edges[k];
            std::size_t v = e.i == u ? e.j : e.i;
            if (!in_tree[v]) heap.push({e.cost_total, v, u, k});
        }
    };
    in_tree[root] = 1;
    relax(root);
    std::size_t reached = 1;
    while (!heap.empty() && reached < n) {
        auto [cost, v, from, k] = heap.top();
        heap.pop();
        if (in_tree[v]) continue;
        in_tree[v] = 1;
        ++reached;
        chosen.push_back(g.edges[k]);
        relax(v);
    }
    if (reached != n) {
        throw Error(ErrorCode::DisconnectedGraph,
                    "graph is disconnected: reached " + std::to_string(reached) + " of " + std::to_string(n) + " nodes");
    }
    return rooted_tree(n, chosen, root);
}

inline SpanningTree prim_mst(const VesselGraph& g) { return prim_mst(g, default_root(g)); }

/// Sum of cost_total over the tree edges, added in ascending order so equal edge sets give equal sums.
inline double tree_weight(const SpanningTree& t) {
    std::vector<double> costs;
    costs.reserve(t.edges.size());
    for (const auto& e : t.edges) costs.push_back(e.cost_total);
    std::sort(costs.begin(), costs.end());
    double total = 0.0;
    for (double c : costs) total += c;
    return total;
}

} // namespace avlsp
