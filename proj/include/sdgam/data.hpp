#pragma once

// Single-training-domain / multi-testing-domain datasets: a synthetic
// domain-shift generator and CSV ingestion.

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdgam/numcore.hpp"

namespace sdgam {

struct LabeledDataset {
    std::string name;
    Matrix inputs;  // n × d_x
    Matrix labels;  // n × N_c, one-hot rows

    std::size_t size() const { return inputs.rows(); }
    std::size_t input_dim() const { return inputs.cols(); }
    std::size_t classes() const { return labels.cols(); }
    std::size_t label_of(std::size_t i) const { return argmax(labels.row(i)); }

    bool operator==(const LabeledDataset&) const = default;
};

/// Throws ContractError unless rows agree, n ≥ 1, and every label row is one-hot.
void validate_dataset(const LabeledDataset& data);

/// A transformation of the canonical 2-D class geometry. Applied before the
/// lift into d_x dimensions, so labels are preserved by construction.
struct DomainSpec {
    std::string name;
    double rotation = 0.0;  // radians, about the origin
    std::array<double, 2> translation{0.0, 0.0};
    std::array<double, 2> scale{1.0, 1.0};
    double noise_std = 0.0;  // extra isotropic noise in the lifted space
    double warp = 0.0;       // u += w·sin(v), v += w·sin(u)
};

void validate(const DomainSpec& spec);

enum class Geometry { two_moons, gaussian_blobs };

struct BenchmarkConfig {
    std::uint64_t seed = 7;
    std::size_t n_train = 1000;
    std::size_t n_test_per_domain = 1000;
    Geometry geometry = Geometry::two_moons;
    std::size_t input_dim = 10;  // d_x
    std::size_t classes = 2;     // two_moons requires 2
    double lift_noise = 0.1;     // isotropic noise added after the lift, every domain
    double moon_noise = 0.1;     // jitter of canonical 2-D points
    double blob_radius = 2.0;    // gaussian_blobs: class centers on this circle
    double blob_spread = 0.5;
    std::vector<DomainSpec> test_domains;
};

/// One identity training domain and four test domains rotated 15°, 30°,
/// 45°, 60°.
BenchmarkConfig default_benchmark();

struct Benchmark {
    LabeledDataset train;
    std::vector<LabeledDataset> tests;
};

/// Deterministic in cfg. Class counts are balanced to within one.
Benchmark make_benchmark(const BenchmarkConfig& cfg);

/// Canonical 2-D points and labels before any domain transform or lift.
/// Exposed for tests.
struct CanonicalSample {
    std::vector<std::array<double, 2>> points;
    std::vector<std::size_t> labels;
};
CanonicalSample sample_canonical(const BenchmarkConfig& cfg, std::size_t n, RngStream& rng);
std::array<double, 2> apply_domain(const DomainSpec& spec, std::array<double, 2> p);

/// Raised for unreadable or malformed data files.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CsvSchema {
    std::vector<std::string> feature_columns;  // empty: every column except the label
    std::string label_column = "label";
    std::size_t classes = 0;  // 0: infer as max label + 1
};

/// Reads `f0,...,label` rows. Row order is preserved; labels are one-hot
/// encoded. Errors name the offending line.
LabeledDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
/// Writes the header `f0,...,f{d-1},label` and 17-significant-digit reals.
void save_csv(const LabeledDataset& data, const std::filesystem::path& path);
std::string to_csv(const LabeledDataset& data);

std::string to_string(Geometry g);
Geometry geometry_from_string(const std::string& s);

}  // namespace sdgam
