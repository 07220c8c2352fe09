#pragma once

// Dense binary64 linear algebra, probability primitives, and the
// deterministic random source shared by the whole library.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdgam {

using Vector = std::vector<double>;

/// Raised when a caller breaks an operation's precondition (shapes, simplex
/// membership, ranges).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Raised when a computation produces NaN or Inf.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<Vector>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Vector matvec(const Matrix& m, std::span<const double> v);
/// mᵀ·v without materializing the transpose.
Vector matvec_transposed(const Matrix& m, std::span<const double> v);
/// m += scale · a bᵀ
void add_outer(Matrix& m, std::span<const double> a, std::span<const double> b, double scale = 1.0);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
/// y += scale · x
void axpy(double scale, std::span<const double> x, std::span<double> y);

Vector softmax(std::span<const double> scores);
Vector log_softmax(std::span<const double> scores);

/// −Σ target·log softmax(logits). Accepts soft targets.
double cross_entropy(std::span<const double> logits, std::span<const double> target);

/// Shannon entropy in nats with 0·log 0 = 0.
double entropy(std::span<const double> p);

/// Throws ContractError unless p is a probability vector (entries ≥ 0,
/// sum within tol of 1).
void require_simplex(std::span<const double> p, const char* what, double tol = 1e-9);
bool on_simplex(std::span<const double> p, double tol);

bool all_finite(std::span<const double> v);
void require_finite(std::span<const double> v, const std::string& what);

Vector one_hot(std::size_t index, std::size_t n);
std::size_t argmax(std::span<const double> v);

/// Central-difference gradient of f at x with step h.
Vector finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                        std::span<const double> x, double h);

/// Counter-based SplitMix64 stream. Draw k returns
/// mix64(seed + k·0x9E3779B97F4A7C15), so the state is fully described by
/// (seed, counter) and identical seeds give identical sequences everywhere.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0, std::uint64_t counter = 0)
        : seed_(seed), counter_(counter) {}

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::size_t below(std::size_t n);
    /// Standard normal via Box-Muller (cosine branch, two uniforms per draw).
    double normal();

    /// Independent child stream derived from this stream's seed and a tag.
    RngStream fork(std::uint64_t tag) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    bool operator==(const RngStream&) const = default;

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

std::uint64_t mix64(std::uint64_t x);

/// len i.i.d. standard normal draws.
Vector gaussian(RngStream& rng, std::size_t len);

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& items, RngStream& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = rng.below(i);
        std::swap(items[i - 1], items[j]);
    }
}

/// k distinct indices from [0, n), uniformly, in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, RngStream& rng);

}  // namespace sdgam
