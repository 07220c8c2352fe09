#include "sdgam/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sdgam {

namespace {

constexpr std::uint64_t kEmbeddingTag = 1;
constexpr std::uint64_t kTrainTag = 2;
constexpr std::uint64_t kTestTagBase = 100;

double degrees(double d) { return d * std::numbers::pi / 180.0; }

Matrix make_embedding(const BenchmarkConfig& cfg) {
    RngStream rng = RngStream(cfg.seed).fork(kEmbeddingTag);
    Matrix e(cfg.input_dim, 2);
    // Columns have unit expected norm so lift_noise is comparable across d_x.
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.input_dim));
    for (double& v : e.values()) v = rng.normal() * scale * std::sqrt(2.0);
    return e;
}

LabeledDataset lift(const BenchmarkConfig& cfg, const Matrix& embedding, const CanonicalSample& s,
                    const DomainSpec& spec, RngStream& rng) {
    LabeledDataset out;
    out.name = spec.name;
    out.inputs = Matrix(s.points.size(), cfg.input_dim);
    out.labels = Matrix(s.points.size(), cfg.classes);
    const double noise = std::sqrt(cfg.lift_noise * cfg.lift_noise + spec.noise_std * spec.noise_std);
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        const auto p = apply_domain(spec, s.points[i]);
        auto row = out.inputs.row(i);
        for (std::size_t j = 0; j < cfg.input_dim; ++j) {
            row[j] = embedding(j, 0) * p[0] + embedding(j, 1) * p[1] + noise * rng.normal();
        }
        out.labels(i, s.labels[i]) = 1.0;
    }
    return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void validate_dataset(const LabeledDataset& data) {
    if (data.inputs.rows() == 0) throw ContractError("dataset '" + data.name + "' is empty");
    if (data.inputs.rows() != data.labels.rows()) {
        throw ContractError("dataset '" + data.name + "': input and label row counts differ");
    }
    for (std::size_t i = 0; i < data.labels.rows(); ++i) {
        std::size_t ones = 0;
        for (double v : data.labels.row(i)) {
            if (v == 1.0) ++ones;
            else if (v != 0.0) ones = 2;
        }
        if (ones != 1) throw ContractError("dataset '" + data.name + "': label row " + std::to_string(i) + " is not one-hot");
    }
    if (!all_finite(data.inputs.values())) throw ContractError("dataset '" + data.name + "' has non-finite inputs");
}

void validate(const DomainSpec& spec) {
    if (!(spec.scale[0] > 0.0 && spec.scale[1] > 0.0)) throw ContractError("domain '" + spec.name + "': scale must be positive");
    if (!(spec.noise_std >= 0.0)) throw ContractError("domain '" + spec.name + "': noise_std must be non-negative");
    if (!std::isfinite(spec.rotation) || !std::isfinite(spec.warp) || !std::isfinite(spec.translation[0]) ||
        !std::isfinite(spec.translation[1])) {
        throw ContractError("domain '" + spec.name + "': non-finite parameter");
    }
}

BenchmarkConfig default_benchmark() {
    BenchmarkConfig cfg;
    for (int deg : {15, 30, 45, 60}) {
        DomainSpec d;
        d.name = "rot" + std::to_string(deg);
        d.rotation = degrees(deg);
        cfg.test_domains.push_back(d);
    }
    return cfg;
}

std::array<double, 2> apply_domain(const DomainSpec& spec, std::array<double, 2> p) {
    double u = p[0], v = p[1];
    if (spec.warp != 0.0) {
        const double u0 = u;
        u += spec.warp * std::sin(v);
        v += spec.warp * std::sin(u0);
    }
    u *= spec.scale[0];
    v *= spec.scale[1];
    const double c = std::cos(spec.rotation), s = std::sin(spec.rotation);
    return {c * u - s * v + spec.translation[0], s * u + c * v + spec.translation[1]};
}

CanonicalSample sample_canonical(const BenchmarkConfig& cfg, std::size_t n, RngStream& rng) {
    CanonicalSample s;
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i % cfg.classes;
    shuffle(labels, rng);
    for (std::size_t label : labels) {
        std::array<double, 2> p{};
        if (cfg.geometry == Geometry::two_moons) {
            const double t = std::numbers::pi * rng.uniform();
            // Moons centered so the pair's bounding box sits on the origin.
            if (label == 0) p = {std::cos(t) - 0.5, std::sin(t) - 0.25};
            else p = {0.5 - std::cos(t), 0.25 - std::sin(t)};
            p[0] += cfg.moon_noise * rng.normal();
            p[1] += cfg.moon_noise * rng.normal();
        } else {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(label) /
                                 static_cast<double>(cfg.classes);
            p = {cfg.blob_radius * std::cos(angle) + cfg.blob_spread * rng.normal(),
                 cfg.blob_radius * std::sin(angle) + cfg.blob_spread * rng.normal()};
        }
        s.points.push_back(p);
        s.labels.push_back(label);
    }
    return s;
}

Benchmark make_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.classes < 2) throw ContractError("benchmark: at least two classes required");
    if (cfg.geometry == Geometry::two_moons && cfg.classes != 2) {
        throw ContractError("benchmark: two_moons geometry has exactly two classes");
    }
    if (cfg.n_train < cfg.classes || cfg.n_test_per_domain < cfg.classes) {
        throw ContractError("benchmark: every split needs at least one point per class");
    }
    if (cfg.test_domains.empty()) throw ContractError("benchmark: at least one test domain required");
    if (cfg.input_dim < 2) throw ContractError("benchmark: input_dim must be at least 2");
    if (!(cfg.lift_noise >= 0.0) || !(cfg.moon_noise >= 0.0) || !(cfg.blob_spread >= 0.0) ||
        !(cfg.blob_radius > 0.0)) {
        throw ContractError("benchmark: degenerate geometry parameters");
    }
    for (const auto& d : cfg.test_domains) validate(d);

    const Matrix embedding = make_embedding(cfg);
    Benchmark b;
    {
        RngStream rng = RngStream(cfg.seed).fork(kTrainTag);
        const auto canon = sample_canonical(cfg, cfg.n_train, rng);
        DomainSpec identity;
        identity.name = "train";
        b.train = lift(cfg, embedding, canon, identity, rng);
    }
    for (std::size_t j = 0; j < cfg.test_domains.size(); ++j) {
        RngStream rng = RngStream(cfg.seed).fork(kTestTagBase + j);
        const auto canon = sample_canonical(cfg, cfg.n_test_per_domain, rng);
        b.tests.push_back(lift(cfg, embedding, canon, cfg.test_domains[j], rng));
    }
    return b;
}

LabeledDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split(trim(line), ',');
            break;
        }
    }
    if (header.empty()) throw DataError(path.string() + ": no data rows");
    for (auto& h : header) h = trim(h);

    std::size_t label_col = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == schema.label_column) label_col = c;
    }
    if (label_col == header.size()) {
        throw DataError(path.string() + ": missing label column '" + schema.label_column + "'");
    }
    std::vector<std::size_t> feature_cols;
    if (schema.feature_columns.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c != label_col) feature_cols.push_back(c);
        }
    } else {
        for (const auto& name : schema.feature_columns) {
            std::size_t found = header.size();
            for (std::size_t c = 0; c < header.size(); ++c) {
                if (header[c] == name) found = c;
            }
            if (found == header.size()) throw DataError(path.string() + ": missing feature column '" + name + "'");
            feature_cols.push_back(found);
        }
    }
    if (feature_cols.empty()) throw DataError(path.string() + ": no feature columns");

    std::vector<double> values;
    std::vector<long long> classes;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) continue;
        const auto fields = split(row, ',');
        const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
        if (fields.size() != header.size()) {
            throw DataError(where + "expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
        }
        for (std::size_t c : feature_cols) {
            const std::string f = trim(fields[c]);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
                throw DataError(where + "malformed real '" + f + "' in column '" + header[c] + "'");
            }
            values.push_back(v);
        }
        const std::string lf = trim(fields[label_col]);
        long long cls = 0;
        const auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), cls);
        if (ec != std::errc() || ptr != lf.data() + lf.size()) {
            throw DataError(where + "malformed class id '" + lf + "'");
        }
        if (cls < 0 || (schema.classes != 0 && cls >= static_cast<long long>(schema.classes))) {
            throw DataError(where + "unknown class id " + lf);
        }
        classes.push_back(cls);
    }
    if (classes.empty()) throw DataError(path.string() + ": no data rows");

    std::size_t n_classes = schema.classes;
    if (n_classes == 0) {
        for (long long c : classes) n_classes = std::max(n_classes, static_cast<std::size_t>(c) + 1);
        n_classes = std::max<std::size_t>(n_classes, 2);
    }
    LabeledDataset out;
    out.name = path.stem().string();
    out.inputs = Matrix(classes.size(), feature_cols.size(), std::move(values));
    out.labels = Matrix(classes.size(), n_classes);
    for (std::size_t i = 0; i < classes.size(); ++i) out.labels(i, static_cast<std::size_t>(classes[i])) = 1.0;
    return out;
}

std::string to_csv(const LabeledDataset& data) {
    std::string out;
    for (std::size_t j = 0; j < data.input_dim(); ++j) out += "f" + std::to_string(j) + ",";
    out += "label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.inputs.row(i)) out += format_real(v) + ",";
        out += std::to_string(data.label_of(i)) + "\n";
    }
    return out;
}

void save_csv(const LabeledDataset& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << to_csv(data);
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string to_string(Geometry g) { return g == Geometry::two_moons ? "two_moons" : "gaussian_blobs"; }

Geometry geometry_from_string(const std::string& s) {
    if (s == "two_moons") return Geometry::two_moons;
    if (s == "gaussian_blobs") return Geometry::gaussian_blobs;
    throw ContractError("unknown geometry '" + s + "'");
}

}  // namespace sdgam
