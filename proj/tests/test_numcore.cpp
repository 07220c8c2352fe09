#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sdgam/numcore.hpp"

using namespace sdgam;

TEST(Matvec, IdentityReturnsInput) {
    EXPECT_EQ(matvec(Matrix::identity(3), Vector{1, 2, 3}), (Vector{1, 2, 3}));
}

TEST(Matvec, ZeroMatrix) {
    EXPECT_EQ(matvec(Matrix(2, 3), Vector{4, -5, 6}), (Vector{0, 0}));
}

TEST(Matvec, HandArithmetic) {
    Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
    EXPECT_EQ(matvec(m, Vector{1, 1}), (Vector{3, 7}));
    EXPECT_EQ(matvec_transposed(m, Vector{1, 1}), (Vector{4, 6}));
}

TEST(Matvec, DimensionMismatchThrows) {
    EXPECT_THROW(matvec(Matrix(2, 3), Vector{1, 2}), ContractError);
    EXPECT_THROW(matvec_transposed(Matrix(2, 3), Vector{1, 2, 3}), ContractError);
}

TEST(Softmax, Uniform) {
    for (double p : softmax(Vector{0, 0, 0})) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(Softmax, SingleElement) {
    EXPECT_EQ(softmax(Vector{-42.5}), (Vector{1.0}));
}

TEST(Softmax, TwoElementValue) {
    const Vector p = softmax(Vector{0.7071, 0});
    const double e = std::exp(0.7071);
    EXPECT_NEAR(p[0], e / (e + 1), 1e-15);
    EXPECT_NEAR(p[0], 0.6698, 1e-4);
    EXPECT_NEAR(p[1], 0.3302, 1e-4);
}

TEST(Softmax, EmptyThrows) {
    EXPECT_THROW(softmax(Vector{}), ContractError);
}

TEST(Softmax, StaysOnSimplexForLargeInputs) {
    RngStream rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        Vector s(1 + rng.below(12));
        for (double& v : s) v = (rng.uniform() * 2 - 1) * 700;
        const Vector p = softmax(s);
        double sum = 0;
        for (double v : p) {
            EXPECT_GE(v, 0.0);
            sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(CrossEntropy, UniformLogits) {
    EXPECT_NEAR(cross_entropy(Vector{0, 0}, Vector{0.5, 0.5}), std::log(2.0), 1e-15);
}

TEST(CrossEntropy, ConfidentCorrect) {
    EXPECT_NEAR(cross_entropy(Vector{50, -50}, Vector{1, 0}), 0.0, 1e-30);
}

TEST(CrossEntropy, SigmoidValue) {
    const double expect = -std::log(1.0 / (1.0 + std::exp(0.2)));
    EXPECT_NEAR(cross_entropy(Vector{-0.1, 0.1}, Vector{1, 0}), expect, 1e-15);
    EXPECT_NEAR(expect, 0.7981, 1e-4);
}

TEST(CrossEntropy, Errors) {
    EXPECT_THROW(cross_entropy(Vector{0, 0}, Vector{1, 0, 0}), ContractError);
    EXPECT_THROW(cross_entropy(Vector{0, 0}, Vector{0.7, 0.7}), ContractError);
    EXPECT_THROW(cross_entropy(Vector{0, 0}, Vector{1.5, -0.5}), ContractError);
}

TEST(CrossEntropy, GibbsInequality) {
    RngStream rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below(5);
        Vector logits(n), raw(n);
        for (auto& v : logits) v = rng.normal() * 5;
        for (auto& v : raw) v = rng.uniform();
        const Vector target = softmax(raw);
        EXPECT_GE(cross_entropy(logits, target), entropy(target) - 1e-9);
    }
}

TEST(Entropy, Values) {
    EXPECT_EQ(entropy(Vector{1, 0, 0}), 0.0);
    EXPECT_NEAR(entropy(Vector{0.25, 0.25, 0.25, 0.25}), std::log(4.0), 1e-15);
    EXPECT_NEAR(entropy(Vector{0.75, 0.25}), -(0.75 * std::log(0.75) + 0.25 * std::log(0.25)), 1e-15);
    EXPECT_NEAR(entropy(Vector{0.75, 0.25}), 0.5623, 1e-4);
    EXPECT_THROW(entropy(Vector{0.5, 0.6}), ContractError);
}

TEST(FiniteDiff, Quadratic) {
    auto f = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; };
    const Vector g = finite_diff_grad(f, Vector{1, 2}, 1e-5);
    EXPECT_NEAR(g[0], 2.0, 1e-6);
    EXPECT_NEAR(g[1], 4.0, 1e-6);
}

TEST(FiniteDiff, Constant) {
    auto f = [](std::span<const double>) { return 3.5; };
    EXPECT_EQ(finite_diff_grad(f, Vector{1, 2, 3}, 1e-3), (Vector{0, 0, 0}));
}

TEST(FiniteDiff, MatchesCrossEntropyGradient) {
    RngStream rng(5);
    Matrix u(3, 4);
    for (double& v : u.values()) v = rng.normal();
    const Vector y{0.2, 0.5, 0.3};
    Vector x(4);
    for (double& v : x) v = rng.normal();
    auto f = [&](std::span<const double> p) { return cross_entropy(matvec(u, p), y); };
    Vector diff = softmax(matvec(u, x));
    for (std::size_t i = 0; i < 3; ++i) diff[i] -= y[i];
    const Vector analytic = matvec_transposed(u, diff);
    const Vector numeric = finite_diff_grad(f, x, 1e-5);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_LE(std::abs(analytic[i] - numeric[i]), 1e-5 * std::max(1.0, std::abs(analytic[i])));
    }
}

TEST(FiniteDiff, Errors) {
    auto bad = [](std::span<const double> x) { return x[0] > 1 ? std::numeric_limits<double>::quiet_NaN() : 0.0; };
    EXPECT_THROW(finite_diff_grad(bad, Vector{1}, 0.1), ContractError);
    EXPECT_THROW(finite_diff_grad(bad, Vector{0}, 0.0), ContractError);
}

TEST(Rng, SameSeedSameSequence) {
    RngStream a(99), b(99);
    EXPECT_EQ(gaussian(a, 50), gaussian(b, 50));
    EXPECT_EQ(a, b);
}

TEST(Rng, DocumentedAlgorithm) {
    // SplitMix64 reference output for seed 0 with the standard increment.
    RngStream rng(0);
    EXPECT_EQ(rng.next_u64(), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(rng.next_u64(), 0x6e789e6aa1b965f4ULL);
    EXPECT_EQ(rng.counter(), 2u);
}

TEST(Rng, CounterResume) {
    RngStream a(12);
    for (int i = 0; i < 7; ++i) a.next_u64();
    RngStream b(12, 7);
    EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, ForksDiffer) {
    RngStream root(1);
    RngStream a = root.fork(1), b = root.fork(2);
    EXPECT_NE(a.next_u64(), b.next_u64());
    EXPECT_EQ(root.counter(), 0u);
}

TEST(Rng, GaussianMoments) {
    RngStream rng(2024);
    const Vector v = gaussian(rng, 100000);
    double mean = 0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= v.size() - 1;
    EXPECT_NEAR(mean, 0.0, 0.02);
    EXPECT_NEAR(var, 1.0, 0.03);
}

TEST(Rng, BelowIsInRangeAndCoversAll) {
    RngStream rng(8);
    std::vector<int> seen(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const std::size_t k = rng.below(7);
        ASSERT_LT(k, 7u);
        ++seen[k];
    }
    for (int c : seen) EXPECT_GT(c, 850);
}

TEST(Rng, SampleWithoutReplacementIsDistinct) {
    RngStream rng(4);
    auto idx = sample_without_replacement(20, 20, rng);
    std::sort(idx.begin(), idx.end());
    for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(idx[i], i);
    EXPECT_THROW(sample_without_replacement(3, 4, rng), ContractError);
}

TEST(Argmax, TiesGoToLowestIndex) {
    EXPECT_EQ(argmax(Vector{1, 3, 3, 2}), 1u);
    EXPECT_EQ(argmax(Vector{0, 0}), 0u);
}

TEST(Linalg, AddOuterAndAxpy) {
    Matrix m(2, 2);
    add_outer(m, Vector{1, 2}, Vector{3, 4}, 0.5);
    EXPECT_EQ(m, Matrix::from_rows({{1.5, 2}, {3, 4}}));
    Vector y{1, 1};
    axpy(2.0, Vector{1, -1}, y);
    EXPECT_EQ(y, (Vector{3, -1}));
    EXPECT_DOUBLE_EQ(dot(Vector{1, 2}, Vector{3, 4}), 11.0);
    EXPECT_DOUBLE_EQ(norm(Vector{3, 4}), 5.0);
}
