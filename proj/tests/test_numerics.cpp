#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "stgt/errors.hpp"
#include "stgt/matrix.hpp"
#include "stgt/rng.hpp"

using namespace stgt;

namespace {

Matrix random_matrix(RngState& rng, int rows, int cols, double lo = -5.0, double hi = 5.0) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols &&
           std::memcmp(a.data.data(), b.data.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("softmax_rows: uniform input gives uniform output") {
    Matrix m = Matrix::row_vector({1.0, 1.0, 1.0});
    Matrix s = softmax_rows(m);
    for (int j = 0; j < 3; ++j) CHECK(s.at(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("softmax_rows: [0, ln2] -> [1/3, 2/3]") {
    Matrix m = Matrix::row_vector({0.0, std::log(2.0)});
    Matrix s = softmax_rows(m);
    CHECK(s.at(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(s.at(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("softmax_rows: large equal logits do not overflow") {
    Matrix m = Matrix::row_vector({1000.0, 1000.0});
    Matrix s = softmax_rows(m);
    CHECK(s.at(0, 0) == 0.5);
    CHECK(s.at(0, 1) == 0.5);
}

TEST_CASE("softmax_rows: rows sum to 1 within 1e-12 (property)") {
    RngState rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        int r = 1 + static_cast<int>(rng.uniform_u64(8));
        int c = 1 + static_cast<int>(rng.uniform_u64(12));
        Matrix m = random_matrix(rng, r, c, -50.0, 50.0);
        Matrix s = softmax_rows(m);
        for (int i = 0; i < r; ++i) {
            double sum = 0.0;
            for (int j = 0; j < c; ++j) {
                CHECK(s.at(i, j) >= 0.0);
                sum += s.at(i, j);
            }
            CHECK(std::fabs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("softmax_rows: shift invariance within 1e-12") {
    RngState rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m = random_matrix(rng, 3, 6);
        double c = rng.uniform(-100.0, 100.0);
        Matrix shifted = m;
        for (double& v : shifted.data) v += c;
        Matrix a = softmax_rows(m);
        Matrix b = softmax_rows(shifted);
        for (size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a.data[i] - b.data[i]) <= 1e-12);
    }
}

TEST_CASE("layer_norm_rows: constant row maps to bias") {
    Matrix m = Matrix::row_vector({1.0, 1.0});
    Matrix gain(1, 2, 1.0);
    Matrix bias(1, 2, 0.0);
    Matrix out = layer_norm_rows(m, gain, bias, 1e-5);
    CHECK(out.at(0, 0) == 0.0);
    CHECK(out.at(0, 1) == 0.0);
}

TEST_CASE("layer_norm_rows: already standardized row passes through as eps -> 0") {
    Matrix m = Matrix::row_vector({-1.0, 1.0});
    Matrix gain(1, 2, 1.0);
    Matrix bias(1, 2, 0.0);
    Matrix out = layer_norm_rows(m, gain, bias, 1e-15);
    CHECK(out.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(out.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("layer_norm_rows: matches direct scalar evaluation") {
    Matrix m = Matrix::row_vector({2.0, 4.0, 6.0});
    Matrix gain(1, 3, 1.0);
    Matrix bias(1, 3, 0.0);
    double eps = 1e-5;
    Matrix out = layer_norm_rows(m, gain, bias, eps);
    // direct evaluation: mean 4, population variance 8/3
    double mean = (2.0 + 4.0 + 6.0) / 3.0;
    double var = ((2 - mean) * (2 - mean) + (4 - mean) * (4 - mean) + (6 - mean) * (6 - mean)) / 3.0;
    double inv = 1.0 / std::sqrt(var + eps);
    CHECK(out.at(0, 0) == doctest::Approx((2.0 - mean) * inv).epsilon(1e-14));
    CHECK(out.at(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(out.at(0, 2) == doctest::Approx((6.0 - mean) * inv).epsilon(1e-14));
}

TEST_CASE("layer_norm_rows: per-row mean is 0 within 1e-10 when bias = 0") {
    RngState rng(43);
    Matrix m = random_matrix(rng, 6, 9);
    Matrix gain(1, 9);
    for (double& v : gain.data) v = rng.uniform(0.5, 2.0);
    Matrix bias(1, 9, 0.0);
    Matrix out = layer_norm_rows(m, Matrix(1, 9, 1.0), bias, 1e-5);
    for (int i = 0; i < out.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < out.cols; ++j) s += out.at(i, j);
        CHECK(std::fabs(s / out.cols) <= 1e-10);
    }
}

TEST_CASE("glorot_init: deterministic under the same seed") {
    RngState a(7);
    RngState b(7);
    Matrix ma = glorot_init(a, 13, 7);
    Matrix mb = glorot_init(b, 13, 7);
    CHECK(bitwise_equal(ma, mb));
}

TEST_CASE("glorot_init: 1x1 draw lies inside [-sqrt(3), sqrt(3)]") {
    RngState rng(11);
    for (int i = 0; i < 100; ++i) {
        Matrix m = glorot_init(rng, 1, 1);
        CHECK(std::fabs(m.at(0, 0)) <= std::sqrt(3.0));
    }
}

TEST_CASE("glorot_init: sample mean of 1e6 draws is 0 within 3 standard errors") {
    RngState rng(12);
    Matrix m = glorot_init(rng, 1000, 1000);
    double limit = std::sqrt(6.0 / 2000.0);
    double sd = 2.0 * limit / std::sqrt(12.0);
    double se = sd / 1000.0;
    double mean = 0.0;
    for (double v : m.data) mean += v;
    mean /= static_cast<double>(m.size());
    CHECK(std::fabs(mean) <= 3.0 * se);
}

TEST_CASE("matmul agrees with direct scalar evaluation") {
    Matrix a(2, 3);
    a.data = {1, 2, 3, 4, 5, 6};
    Matrix b(3, 2);
    b.data = {7, 8, 9, 10, 11, 12};
    Matrix c = matmul(a, b);
    CHECK(c.at(0, 0) == 1 * 7 + 2 * 9 + 3 * 11);
    CHECK(c.at(0, 1) == 1 * 8 + 2 * 10 + 3 * 12);
    CHECK(c.at(1, 0) == 4 * 7 + 5 * 9 + 6 * 11);
    CHECK(c.at(1, 1) == 4 * 8 + 5 * 10 + 6 * 12);
    CHECK_THROWS_AS(matmul(a, a), ConfigError);
}

TEST_CASE("matmul_nt(a, b) equals matmul(a, transpose(b))") {
    RngState rng(44);
    Matrix a = random_matrix(rng, 4, 5);
    Matrix b = random_matrix(rng, 3, 5);
    CHECK(bitwise_equal(matmul_nt(a, b), matmul(a, transpose(b))));
}

TEST_CASE("elementwise kernels match scalar evaluation") {
    Matrix a = Matrix::row_vector({1.0, -2.0});
    Matrix b = Matrix::row_vector({0.5, 4.0});
    CHECK(add(a, b).at(0, 1) == 2.0);
    CHECK(sub(a, b).at(0, 0) == 0.5);
    CHECK(hadamard(a, b).at(0, 1) == -8.0);
    CHECK(scale(a, -3.0).at(0, 0) == -3.0);
    CHECK(map_tanh(a).at(0, 0) == std::tanh(1.0));
    CHECK(map_sigmoid(a).at(0, 1) == 1.0 / (1.0 + std::exp(2.0)));
}

TEST_CASE("concat_cols lays parts out in order") {
    Matrix a(2, 2);
    a.data = {1, 2, 3, 4};
    Matrix b(2, 1);
    b.data = {5, 6};
    Matrix c = concat_cols({&a, &b});
    CHECK(c.rows == 2);
    CHECK(c.cols == 3);
    CHECK(c.at(0, 2) == 5);
    CHECK(c.at(1, 0) == 3);
}

TEST_CASE("col_means and row_means") {
    Matrix m(2, 3);
    m.data = {1, 2, 3, 5, 6, 7};
    Matrix cm = col_means(m);
    CHECK(cm.at(0, 0) == 3.0);
    CHECK(cm.at(0, 2) == 5.0);
    Matrix rm = row_means(m);
    CHECK(rm.at(0, 0) == 2.0);
    CHECK(rm.at(1, 0) == 6.0);
}

TEST_CASE("kernels are pure: same inputs give bit-identical outputs") {
    RngState rng(45);
    Matrix a = random_matrix(rng, 5, 4);
    Matrix b = random_matrix(rng, 4, 6);
    CHECK(bitwise_equal(matmul(a, b), matmul(a, b)));
    CHECK(bitwise_equal(softmax_rows(a), softmax_rows(a)));
    Matrix g(1, 4, 1.0), z(1, 4, 0.0);
    CHECK(bitwise_equal(layer_norm_rows(a, g, z, 1e-5), layer_norm_rows(a, g, z, 1e-5)));
}

TEST_CASE("ExactSum: value is independent of addition order") {
    RngState rng(46);
    std::vector<double> xs(500);
    for (double& x : xs) x = rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-12.0, 12.0));
    ExactSum fwd;
    for (double x : xs) fwd.add(x);
    double ref = fwd.value();

    for (int trial = 0; trial < 10; ++trial) {
        // deterministic shuffle
        for (size_t i = xs.size(); i > 1; --i)
            std::swap(xs[i - 1], xs[rng.uniform_u64(i)]);
        ExactSum acc;
        for (double x : xs) acc.add(x);
        CHECK(acc.value() == ref);
    }
}

TEST_CASE("ExactSum: cancellation that plain summation gets wrong") {
    ExactSum acc;
    acc.add(1e100);
    acc.add(1.0);
    acc.add(-1e100);
    CHECK(acc.value() == 1.0);
}

TEST_CASE("ExactSum: empty sum is zero, nonfinite input propagates") {
    ExactSum acc;
    CHECK(acc.value() == 0.0);
    acc.add(std::numeric_limits<double>::infinity());
    acc.add(1.0);
    CHECK(std::isinf(acc.value()));
}

TEST_CASE("col_means exact mode is invariant to row permutation") {
    RngState rng(47);
    Matrix m = random_matrix(rng, 40, 3, -1e8, 1e8);
    Matrix perm(40, 3);
    std::vector<int> order(40);
    for (int i = 0; i < 40; ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_u64(i)]);
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 3; ++j) perm.at(i, j) = m.at(order[i], j);
    CHECK(bitwise_equal(col_means(m, SumMode::exact), col_means(perm, SumMode::exact)));
}

TEST_CASE("RngState: same seed gives identical sequences, forks are stable") {
    RngState a(99);
    RngState b(99);
    for (int i = 0; i < 20; ++i) CHECK(a.next_u64() == b.next_u64());

    // fork does not depend on how far the parent has advanced
    RngState p1(5);
    RngState p2(5);
    p2.next_u64();
    p2.next_u64();
    RngState f1 = p1.fork("stream");
    RngState f2 = p2.fork("stream");
    for (int i = 0; i < 10; ++i) CHECK(f1.next_u64() == f2.next_u64());

    // distinct labels give distinct streams
    RngState g1 = p1.fork("a");
    RngState g2 = p1.fork("b");
    CHECK(g1.next_u64() != g2.next_u64());
}

TEST_CASE("RngState: uniform stays in [0,1) and uniform_u64 in range") {
    RngState rng(3);
    for (int i = 0; i < 1000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(rng.uniform_u64(7) < 7);
    }
}

TEST_CASE("check_finite names the failing stage") {
    Matrix m = Matrix::row_vector({1.0, std::nan("")});
    CHECK_THROWS_WITH_AS(check_finite(m, "embed"), doctest::Contains("embed"), NumericError);
    Matrix ok = Matrix::row_vector({1.0, 2.0});
    CHECK_NOTHROW(check_finite(ok, "embed"));
}
