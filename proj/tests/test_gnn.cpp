#include <doctest.h>

#include <cmath>
#include <vector>

#include "stgt/errors.hpp"
#include "stgt/gnn.hpp"

using namespace stgt;

namespace {

Matrix random_matrix(RngState& rng, int rows, int cols, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (auto& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

// h rows: node 0 = [1,1] with neighbors 1 and 2; nodes 1,2 carry the
// worked aggregate example values.
Matrix example_h() {
    Matrix h(3, 2);
    h.at(0, 0) = 1.0;
    h.at(0, 1) = 1.0;
    h.at(1, 0) = 1.0;
    h.at(1, 1) = 0.0;
    h.at(2, 0) = 3.0;
    h.at(2, 1) = 2.0;
    return h;
}

const std::vector<std::vector<int>> kExampleAdj{{1, 2}, {0}, {0}};

} // namespace

TEST_CASE("aggregation names parse") {
    CHECK(parse_aggr("mean") == AggrKind::mean);
    CHECK(parse_aggr("sum") == AggrKind::sum);
    CHECK_THROWS_AS(parse_aggr("max"), ConfigError);
}

TEST_CASE("initial embedding of zero features is zero") {
    Matrix x(4, 3);
    Matrix w1(3, 2, 0.5);
    Matrix h0 = initial_embed(x, w1);
    for (double v : h0.data) CHECK(v == 0.0);
}

TEST_CASE("initial embedding matches scalar tanh") {
    Matrix x(1, 1, 1.0);
    Matrix w1(1, 1, 1.0);
    Matrix h0 = initial_embed(x, w1);
    CHECK(h0.at(0, 0) == doctest::Approx(0.761594).epsilon(1e-6));
    CHECK(h0.at(0, 0) == std::tanh(1.0));
}

TEST_CASE("initial embedding is a row-wise map") {
    RngState rng(3);
    Matrix x = random_matrix(rng, 5, 3);
    Matrix w1 = random_matrix(rng, 3, 2);
    Matrix h0 = initial_embed(x, w1);

    // Swap two feature rows; the embedding rows swap identically.
    Matrix x_swapped = x;
    for (int c = 0; c < 3; ++c) std::swap(x_swapped.at(1, c), x_swapped.at(4, c));
    Matrix h0_swapped = initial_embed(x_swapped, w1);
    for (int c = 0; c < 2; ++c) {
        CHECK(h0_swapped.at(1, c) == h0.at(4, c));
        CHECK(h0_swapped.at(4, c) == h0.at(1, c));
        CHECK(h0_swapped.at(0, c) == h0.at(0, c));
    }
}

TEST_CASE("mean aggregates match the worked example") {
    auto agg = neighbor_aggregates(example_h(), kExampleAdj, AggrKind::mean);
    // Node 0: neighbors [1,0] and [3,2] -> mean [2,1]; diff mean [1,1]-[2,1].
    CHECK(agg.neighbor.at(0, 0) == 2.0);
    CHECK(agg.neighbor.at(0, 1) == 1.0);
    CHECK(agg.difference.at(0, 0) == -1.0);
    CHECK(agg.difference.at(0, 1) == 0.0);
}

TEST_CASE("sum aggregates scale with degree") {
    auto agg = neighbor_aggregates(example_h(), kExampleAdj, AggrKind::sum);
    CHECK(agg.neighbor.at(0, 0) == 4.0);
    CHECK(agg.neighbor.at(0, 1) == 2.0);
    // sum_j (h_0 - h_j) = 2*[1,1] - [4,2]
    CHECK(agg.difference.at(0, 0) == -2.0);
    CHECK(agg.difference.at(0, 1) == 0.0);
}

TEST_CASE("a sole neighbor equal to the node zeroes the difference") {
    Matrix h(2, 2, 0.5);
    std::vector<std::vector<int>> adj{{1}, {0}};
    auto agg = neighbor_aggregates(h, adj, AggrKind::mean);
    CHECK(agg.difference.at(0, 0) == 0.0);
    CHECK(agg.difference.at(0, 1) == 0.0);
    CHECK(agg.neighbor.at(0, 0) == 0.5);
}

TEST_CASE("isolated nodes aggregate to zero and embed to zero") {
    Matrix h(3, 2, 0.7);
    std::vector<std::vector<int>> adj{{}, {}, {}};
    auto agg = neighbor_aggregates(h, adj, AggrKind::mean);
    for (double v : agg.neighbor.data) CHECK(v == 0.0);
    for (double v : agg.difference.data) CHECK(v == 0.0);

    RngState rng(7);
    Matrix w = random_matrix(rng, 4, 2);
    Matrix out = intra_relation(h, adj, w, AggrKind::mean);
    for (double v : out.data) CHECK(v == 0.0); // tanh(0 * W) = 0
}

TEST_CASE("relation convolution matches a scalar oracle") {
    RngState rng(11);
    Matrix h = random_matrix(rng, 3, 2);
    Matrix w = random_matrix(rng, 4, 2);
    std::vector<std::vector<int>> adj{{1, 2}, {0, 2}, {0, 1}};
    Matrix out = intra_relation(h, adj, w, AggrKind::mean);
    auto agg = neighbor_aggregates(h, adj, AggrKind::mean);
    for (int i = 0; i < 3; ++i) {
        for (int c = 0; c < 2; ++c) {
            double pre = 0.0;
            for (int k = 0; k < 2; ++k) pre += agg.neighbor.at(i, k) * w.at(k, c);
            for (int k = 0; k < 2; ++k) pre += agg.difference.at(i, k) * w.at(2 + k, c);
            CHECK(out.at(i, c) == doctest::Approx(std::tanh(pre)).epsilon(1e-12));
        }
    }
}

TEST_CASE("relation convolution validates projection shape") {
    Matrix h(2, 3);
    std::vector<std::vector<int>> adj{{1}, {0}};
    Matrix bad(3, 3);
    CHECK_THROWS_AS(intra_relation(h, adj, bad, AggrKind::mean), ConfigError);
    CHECK_THROWS_AS(neighbor_aggregates(h, {{1}}, AggrKind::mean), ConfigError);
}

TEST_CASE("relation aggregation is permutation-equivariant bitwise") {
    RngState rng(17);
    const int n = 12;
    Matrix h = random_matrix(rng, n, 3);
    Matrix w = random_matrix(rng, 6, 3);
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.bernoulli(0.3)) {
                adj[static_cast<size_t>(i)].push_back(j);
                adj[static_cast<size_t>(j)].push_back(i);
            }
        }
    }
    Matrix out = intra_relation(h, adj, w, AggrKind::mean, SumMode::exact);

    // Apply a node permutation to embeddings and adjacency.
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = (i * 5 + 3) % n;
    Matrix hp(n, 3);
    std::vector<std::vector<int>> adjp(n);
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) hp.at(perm[static_cast<size_t>(i)], c) = h.at(i, c);
        for (int j : adj[static_cast<size_t>(i)]) {
            adjp[static_cast<size_t>(perm[static_cast<size_t>(i)])].push_back(
                perm[static_cast<size_t>(j)]);
        }
    }
    for (auto& nbrs : adjp) std::sort(nbrs.begin(), nbrs.end());
    Matrix outp = intra_relation(hp, adjp, w, AggrKind::mean, SumMode::exact);
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) {
            CHECK(outp.at(perm[static_cast<size_t>(i)], c) == out.at(i, c));
        }
    }
}

TEST_CASE("zero relation-score vector gives uniform attention") {
    RngState rng(23);
    std::vector<Matrix> hs{random_matrix(rng, 4, 3), random_matrix(rng, 4, 3),
                           random_matrix(rng, 4, 3)};
    Matrix q(1, 3); // zero scorer
    Matrix w2 = random_matrix(rng, 3, 3);
    Matrix b = random_matrix(rng, 1, 3);
    auto fusion = relation_attention(hs, q, w2, b);
    REQUIRE(fusion.alpha.size() == 3);
    for (double a : fusion.alpha) CHECK(a == 1.0 / 3.0);
    for (int i = 0; i < 4; ++i) {
        for (int c = 0; c < 3; ++c) {
            double mean = (hs[0].at(i, c) + hs[1].at(i, c) + hs[2].at(i, c)) / 3.0;
            CHECK(fusion.fused.at(i, c) == doctest::Approx(mean).epsilon(1e-12));
        }
    }
}

TEST_CASE("a single relation passes through unchanged") {
    RngState rng(29);
    std::vector<Matrix> hs{random_matrix(rng, 5, 2)};
    Matrix q = random_matrix(rng, 1, 2);
    Matrix w2 = random_matrix(rng, 2, 2);
    Matrix b = random_matrix(rng, 1, 2);
    auto fusion = relation_attention(hs, q, w2, b);
    REQUIRE(fusion.alpha.size() == 1);
    CHECK(fusion.alpha[0] == 1.0);
    CHECK(fusion.fused.data == hs[0].data);
}

TEST_CASE("relation scores of 0 and ln2 normalize to thirds") {
    // With one node, d=1, q=1, W2=1, b=0 the score of relation r is
    // tanh(h_r), so h = 0 and h = atanh(ln 2) force w = [0, ln 2].
    std::vector<Matrix> hs{Matrix(1, 1, 0.0), Matrix(1, 1, std::atanh(std::log(2.0)))};
    Matrix q(1, 1, 1.0);
    Matrix w2(1, 1, 1.0);
    Matrix b(1, 1, 0.0);
    auto fusion = relation_attention(hs, q, w2, b);
    CHECK(fusion.scores[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fusion.scores[1] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(fusion.alpha[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(fusion.alpha[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("relation weights live on the simplex") {
    RngState rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        int R = 1 + static_cast<int>(rng.uniform_u64(4));
        std::vector<Matrix> hs;
        for (int r = 0; r < R; ++r) hs.push_back(random_matrix(rng, 6, 3, -2.0, 2.0));
        Matrix q = random_matrix(rng, 1, 3);
        Matrix w2 = random_matrix(rng, 3, 3);
        Matrix b = random_matrix(rng, 1, 3);
        auto fusion = relation_attention(hs, q, w2, b);
        double total = 0.0;
        for (double a : fusion.alpha) {
            CHECK(a >= 0.0);
            total += a;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("relation attention validates inputs") {
    Matrix q(1, 2), w2(2, 2), b(1, 2);
    CHECK_THROWS_AS(relation_attention({}, q, w2, b), ConfigError);
    std::vector<Matrix> mismatched{Matrix(2, 2), Matrix(3, 2)};
    CHECK_THROWS_AS(relation_attention(mismatched, q, w2, b), ConfigError);
}

TEST_CASE("layer fusion concatenates in layer order") {
    Matrix one(1, 2);
    one.at(0, 0) = 1.0;
    one.at(0, 1) = 2.0;
    Matrix two(1, 2);
    two.at(0, 0) = 3.0;
    two.at(0, 1) = 4.0;

    Matrix single = fuse_layers({one});
    CHECK(single.data == one.data);

    Matrix both = fuse_layers({one, two});
    REQUIRE(both.cols == 4);
    CHECK(both.data == std::vector<double>{1.0, 2.0, 3.0, 4.0});

    // Column c of layer l lands at (l-1)*d + c.
    CHECK(both.at(0, 1 * 2 + 0) == two.at(0, 0));

    CHECK_THROWS_AS(fuse_layers({one, Matrix(1, 3)}), ConfigError);
    CHECK_THROWS_AS(fuse_layers({}), ConfigError);
}

TEST_CASE("layer parameter construction is shaped and seeded") {
    RngState a(41), b(41);
    auto p1 = make_gnn_layer(2, 3, a);
    auto p2 = make_gnn_layer(2, 3, b);
    REQUIRE(p1.W_self_diff.size() == 2);
    CHECK(p1.W_self_diff[0].rows == 6);
    CHECK(p1.W_self_diff[0].cols == 3);
    CHECK(p1.q.cols == 3);
    CHECK(p1.W2.rows == 3);
    for (double v : p1.b.data) CHECK(v == 0.0);
    CHECK(p1.W_self_diff[1].data == p2.W_self_diff[1].data);
    CHECK(p1.q.data == p2.q.data);

    RngState c(1);
    CHECK_THROWS_AS(make_gnn_layer(0, 3, c), ConfigError);
    CHECK_THROWS_AS(make_gnn_layer(2, 0, c), ConfigError);
}
