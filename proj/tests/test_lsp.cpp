#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "avlsp/lsp.hpp"
#include "avlsp/phantom.hpp"
#include "oracles.hpp"

using namespace avlsp;

namespace {

SpanningTree tree_from(std::size_t n, const std::vector<oracle::TreeEdge>& edges, std::size_t root) {
    return rooted_tree(n, oracle::as_weighted(edges), root);
}

std::vector<double> random_scores(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<double> s(n);
    for (auto& v : s) v = u(rng);
    return s;
}

Branch horizontal(int id, int x, int y, int len) {
    Branch b;
    b.id = id;
    for (int k = 0; k < len; ++k) b.pixels.push_back({x + k, y});
    return b;
}

} // namespace

TEST(Attenuation, Examples) {
    EXPECT_DOUBLE_EQ(attenuation(0.0, 10.0), 1.0);
    EXPECT_NEAR(attenuation(10.0, 10.0), 0.36787944117144233, 1e-15);
    EXPECT_GT(attenuation(1.0, 2.0), attenuation(1.5, 2.0));
}

TEST(Passes, SingleNode) {
    GraphParams p;
    auto t = rooted_tree(1, {}, 0);
    EXPECT_EQ(upward_pass(t, {0.3}, p), std::vector<double>{0.3});
    EXPECT_EQ(downward_pass(t, {0.3}, p), std::vector<double>{0.3});
}

TEST(Passes, ParentChildByHand) {
    GraphParams p;
    p.sigma_prop = 2.0;
    auto t = tree_from(2, {{0, 1, 2.0}}, 0);
    auto up = upward_pass(t, {0.2, 0.4}, p);
    double a = std::exp(-1.0);
    EXPECT_NEAR(up[0], 0.2 + a * 0.4, 1e-15);
    EXPECT_DOUBLE_EQ(up[1], 0.4);
    auto fin = downward_pass(t, up, p);
    EXPECT_NEAR(fin[0], 0.2 + a * 0.4, 1e-15);
    EXPECT_NEAR(fin[1], 0.4 + a * 0.2, 1e-15);
}

TEST(Passes, MatchPathProductOracle) {
    std::mt19937_64 rng(51);
    GraphParams p;
    for (int k = 0; k < 20; ++k) {
        std::size_t n = 1 + rng() % 120;
        auto edges = oracle::random_tree(n, rng);
        auto s = random_scores(n, rng);
        auto t = tree_from(n, edges, rng() % n);
        auto up = upward_pass(t, s, p);
        auto fin = downward_pass(t, up, p);
        auto want = oracle::path_product_aggregate(n, edges, s, p.sigma_prop);
        EXPECT_NEAR(up[t.root], want[t.root], 1e-9 * std::max(1.0, std::abs(want[t.root])));
        for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(fin[i], want[i], 1e-9 * std::max(1e-12, std::abs(want[i])));
    }
}

TEST(Propagate, EqualPositiveScoresStayPositive) {
    std::vector<ScoredBranch> bs;
    for (int k = 0; k < 6; ++k) bs.push_back({horizontal(k, k * 8, 0, 5), 0.2});
    auto r = propagate(bs, GraphParams{}, 2);
    ASSERT_EQ(r.scores.size(), 6u);
    for (double s : r.scores) {
        EXPECT_GT(s, 0.0);
        EXPECT_LE(s, 0.5);
    }
    EXPECT_EQ(r.iterations.size(), 2u);
}

TEST(Propagate, SecondIterationAggregatesClampedFirst) {
    // identical scores keep the label costs at zero, so both iterations see the same tree
    std::vector<ScoredBranch> bs;
    for (int k = 0; k < 5; ++k) bs.push_back({horizontal(k, k * 7, 3, 5), -0.1});
    GraphParams p;
    auto r = propagate(bs, p, 2);
    const auto& t = r.iterations[0].tree;
    std::vector<oracle::TreeEdge> edges;
    for (const auto& e : t.edges) edges.push_back({e.i, e.j, e.cost_pos});
    auto once = oracle::path_product_aggregate(5, edges, r.initial, p.sigma_prop);
    for (auto& v : once) v = std::clamp(v, -0.5, 0.5);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(r.iterations[0].s_fin[i], oracle::path_product_aggregate(5, edges, r.initial, p.sigma_prop)[i], 1e-12);
    auto twice = oracle::path_product_aggregate(5, edges, once, p.sigma_prop);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(r.iterations[1].s_init[i], once[i], 1e-12);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(r.scores[i], std::clamp(twice[i], -0.5, 0.5), 1e-12);
}

TEST(Propagate, ZeroIterationsKeepsScores) {
    std::vector<ScoredBranch> bs{{horizontal(0, 0, 0, 3), 0.3}, {horizontal(1, 5, 0, 3), -0.2}};
    auto r = propagate(bs, GraphParams{}, 0);
    EXPECT_EQ(r.scores, r.initial);
    EXPECT_THROW(propagate({}, GraphParams{}, 1), Error);
}

TEST(Propagate, FlippedBranchAmongStrongNeighbors) {
    // a chain of collinear branches, all artery except one weakly flipped in the middle
    std::vector<ScoredBranch> bs;
    for (int k = 0; k < 7; ++k) bs.push_back({horizontal(k, k * 6, 10, 5), k == 3 ? -0.2 : 0.4});
    GraphParams p;
    auto r = propagate(bs, p, 2);
    EXPECT_GT(r.scores[3], 0.0);
    // brute-force single aggregation over the first tree already fixes the sign
    const auto& t = r.iterations[0].tree;
    std::vector<oracle::TreeEdge> edges;
    for (const auto& e : t.edges) edges.push_back({e.i, e.j, e.cost_pos});
    EXPECT_GT(oracle::path_product_aggregate(7, edges, r.initial, p.sigma_prop)[3], 0.0);
}

TEST(Relabel, SignRule) {
    LabelMap labels(4, 1, {kArtery, kVein, kBackground, kOutside});
    BranchAssignment a{4, 1, {0, 1, -1, -1}};
    auto out = relabel(labels, {0.3, 0.0}, a);
    EXPECT_EQ(out[0], kArtery);
    EXPECT_EQ(out[1], kVein);
    EXPECT_EQ(out[2], kBackground);
    EXPECT_EQ(out[3], kOutside);
    auto flipped = relabel(labels, {-0.3, 0.2}, a);
    EXPECT_EQ(flipped[0], kVein);
    EXPECT_EQ(flipped[1], kArtery);
    BranchAssignment missing{4, 1, {0, -1, -1, -1}};
    EXPECT_THROW(relabel(labels, {0.3}, missing), Error);
}

TEST(Relabel, NearestBranchAssignment) {
    BinaryImage vessels(9, 5);
    for (int y = 1; y <= 3; ++y) {
        for (int x = 0; x < 9; ++x) vessels.at(x, y) = 1;
    }
    std::vector<Branch> bs{horizontal(0, 0, 2, 4), horizontal(1, 5, 2, 4)};
    auto a = assign_pixels_to_branches(vessels, bs);
    for (int y = 1; y <= 3; ++y) {
        for (int x = 0; x < 9; ++x) {
            int want = x <= 3 ? 0 : (x >= 5 ? 1 : -2);
            int got = a.branch[std::size_t(y) * 9 + x];
            if (want >= 0) EXPECT_EQ(got, want) << x << ',' << y;
            else EXPECT_GE(got, 0);
        }
    }
    EXPECT_EQ(a.branch[0], -1);
}

TEST(Relabel, PhantomSignOracle) {
    PhantomSpec spec;
    spec.seed = 3;
    auto ph = generate(spec);
    auto vessels = ph.truth.vessel_mask();
    auto branches = extract_branches(zhang_suen_thin(vessels));
    std::vector<double> s(branches.size());
    for (std::size_t b = 0; b < s.size(); ++b) s[b] = b % 2 ? 0.25 : -0.25;
    auto a = assign_pixels_to_branches(vessels, branches);
    auto out = relabel(ph.truth, s, a);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!vessels[i]) {
            EXPECT_EQ(out[i], ph.truth[i]);
            continue;
        }
        ASSERT_GE(a.branch[i], 0);
        EXPECT_EQ(out[i], s[std::size_t(a.branch[i])] > 0 ? kArtery : kVein);
    }
}
