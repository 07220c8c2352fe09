#include "sdgam/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sdgam {

namespace {

constexpr double kLogFloor = 1e-300;

void require_same_len(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        std::ostringstream msg;
        msg << what << ": length mismatch (" << a << " vs " << b << ")";
        throw ContractError(msg.str());
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ContractError("Matrix: data length does not equal rows*cols");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        require_same_len(rows[r].size(), m.cols(), "Matrix::from_rows");
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

Vector matvec(const Matrix& m, std::span<const double> v) {
    require_same_len(m.cols(), v.size(), "matvec");
    Vector out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), v);
    return out;
}

Vector matvec_transposed(const Matrix& m, std::span<const double> v) {
    require_same_len(m.rows(), v.size(), "matvec_transposed");
    Vector out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) axpy(v[i], m.row(i), out);
    return out;
}

void add_outer(Matrix& m, std::span<const double> a, std::span<const double> b, double scale) {
    require_same_len(m.rows(), a.size(), "add_outer rows");
    require_same_len(m.cols(), b.size(), "add_outer cols");
    for (std::size_t i = 0; i < m.rows(); ++i) axpy(scale * a[i], b, m.row(i));
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_len(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void axpy(double scale, std::span<const double> x, std::span<double> y) {
    require_same_len(x.size(), y.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += scale * x[i];
}

Vector softmax(std::span<const double> scores) {
    if (scores.empty()) throw ContractError("softmax: empty input");
    const double mx = *std::max_element(scores.begin(), scores.end());
    Vector out(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - mx);
        total += out[i];
    }
    for (double& p : out) p /= total;
    return out;
}

Vector log_softmax(std::span<const double> scores) {
    if (scores.empty()) throw ContractError("log_softmax: empty input");
    const double mx = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double s : scores) total += std::exp(s - mx);
    const double log_z = mx + std::log(total);
    const double floor = std::log(kLogFloor);
    Vector out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = std::max(scores[i] - log_z, floor);
    return out;
}

double cross_entropy(std::span<const double> logits, std::span<const double> target) {
    require_same_len(logits.size(), target.size(), "cross_entropy");
    require_simplex(target, "cross_entropy target");
    const Vector logp = log_softmax(logits);
    double loss = 0.0;
    for (std::size_t c = 0; c < logp.size(); ++c) loss -= target[c] * logp[c];
    return std::max(loss, 0.0);
}

double entropy(std::span<const double> p) {
    require_simplex(p, "entropy");
    double h = 0.0;
    for (double pi : p) {
        if (pi > 0.0) h -= pi * std::log(std::max(pi, kLogFloor));
    }
    return std::max(h, 0.0);
}

bool on_simplex(std::span<const double> p, double tol) {
    if (p.empty()) return false;
    double total = 0.0;
    for (double pi : p) {
        if (!(pi >= 0.0) || !std::isfinite(pi)) return false;
        total += pi;
    }
    return std::abs(total - 1.0) <= tol;
}

void require_simplex(std::span<const double> p, const char* what, double tol) {
    if (!on_simplex(p, tol)) {
        throw ContractError(std::string(what) + ": not a probability vector");
    }
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require_finite(std::span<const double> v, const std::string& what) {
    if (!all_finite(v)) throw NumericError(what + ": non-finite value");
}

Vector one_hot(std::size_t index, std::size_t n) {
    if (index >= n) throw ContractError("one_hot: index out of range");
    Vector v(n, 0.0);
    v[index] = 1.0;
    return v;
}

std::size_t argmax(std::span<const double> v) {
    if (v.empty()) throw ContractError("argmax: empty input");
    // max_element returns the first maximum, so ties go to the lowest index.
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

Vector finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                        std::span<const double> x, double h) {
    if (!(h > 0.0)) throw ContractError("finite_diff_grad: step must be positive");
    Vector probe(x.begin(), x.end());
    Vector grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw ContractError("finite_diff_grad: non-finite evaluation");
        }
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::size_t RngStream::below(std::size_t n) {
    if (n == 0) throw ContractError("RngStream::below: empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

double RngStream::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::fork(std::uint64_t tag) const {
    return RngStream(mix64(seed_ ^ mix64(tag + 0x632BE59BD9B4E019ULL)));
}

Vector gaussian(RngStream& rng, std::size_t len) {
    Vector v(len);
    for (double& x : v) x = rng.normal();
    return v;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, RngStream& rng) {
    if (k > n) throw ContractError("sample_without_replacement: k exceeds population");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + rng.below(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace sdgam
