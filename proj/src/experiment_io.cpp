#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "sdgam/experiment.hpp"

namespace sdgam {

namespace fs = std::filesystem;

namespace {

// Reads typed fields out of one JSON object and rejects unknown keys, so
// typos in a config surface as errors naming the field.
class Fields {
public:
    Fields(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
    }

    ~Fields() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, _] : obj_.items()) {
            if (!seen_.count(key)) throw ConfigError("config: unknown field '" + name(key) + "'");
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key) && !obj_.at(key).is_null();
    }

    const Json& raw(const std::string& key) {
        seen_.insert(key);
        return obj_.at(key);
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    template <typename T>
    void read(const std::string& key, T& out) {
        if (!has(key)) return;
        const Json& v = obj_.at(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError("");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) throw ConfigError("");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
                    throw ConfigError("");
                }
            } else {
                if (!v.is_string()) throw ConfigError("");
            }
            out = v.get<T>();
        } catch (const std::exception&) {
            throw ConfigError("config: field '" + name(key) + "' has the wrong type");
        }
    }

private:
    const Json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

Json domain_to_json(const DomainSpec& d) {
    return {{"name", d.name},
            {"rotation", d.rotation},
            {"translation", {d.translation[0], d.translation[1]}},
            {"scale", {d.scale[0], d.scale[1]}},
            {"noise_std", d.noise_std},
            {"warp", d.warp}};
}

std::array<double, 2> read_pair(Fields& f, const std::string& key, std::array<double, 2> fallback) {
    if (!f.has(key)) return fallback;
    const Json& v = f.raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError("config: field '" + f.name(key) + "' must be an array of two numbers");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

DomainSpec domain_from_json(const Json& j, const std::string& path) {
    Fields f(j, path);
    DomainSpec d;
    f.read("name", d.name);
    f.read("rotation", d.rotation);
    if (f.has("rotation_deg")) {
        double deg = 0.0;
        f.read("rotation_deg", deg);
        d.rotation = deg * std::numbers::pi / 180.0;
    }
    d.translation = read_pair(f, "translation", d.translation);
    d.scale = read_pair(f, "scale", d.scale);
    f.read("noise_std", d.noise_std);
    f.read("warp", d.warp);
    if (d.name.empty()) throw ConfigError("config: field '" + path + ".name' is required");
    return d;
}

Json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

std::vector<double> doubles(const Json& j, const std::string& what) {
    if (!j.is_array()) throw ConfigError("checkpoint: '" + what + "' must be an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError("checkpoint: '" + what + "' holds a non-number");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<Vector> rows_json(const Json& j, const std::string& what, std::size_t width) {
    if (!j.is_array()) throw ConfigError("checkpoint: '" + what + "' must be an array");
    std::vector<Vector> out;
    for (const auto& row : j) {
        out.push_back(doubles(row, what));
        if (out.back().size() != width) throw ConfigError("checkpoint: '" + what + "' row has the wrong width");
    }
    return out;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ExperimentConfig config_from_json(const Json& doc, const fs::path& base_dir) {
    ExperimentConfig cfg;
    Fields top(doc, "");
    top.read("seed", cfg.train.seed);
    std::string out_dir = cfg.output_dir.string();
    top.read("output_dir", out_dir);
    cfg.output_dir = out_dir;
    top.read("record_wall_time", cfg.record_wall_time);

    if (top.has("train")) {
        Fields f(top.raw("train"), "train");
        auto& t = cfg.train;
        f.read("lambda_aug", t.lambda_aug);
        f.read("beta", t.beta);
        f.read("gamma", t.gamma);
        f.read("memory_ratio", t.memory_ratio);
        f.read("warmup_epochs", t.warmup_epochs);
        f.read("epochs", t.epochs);
        f.read("batch_size", t.batch_size);
        f.read("kmeans_clusters", t.kmeans_clusters);
        f.read("detach_label_path", t.detach_label_path);
        if (f.has("ablation")) {
            std::string a;
            f.read("ablation", a);
            try {
                t.ablation = ablation_from_string(a);
            } catch (const ContractError&) {
                throw ConfigError("config: field 'train.ablation' has unknown value '" + a + "'");
            }
        }
        if (f.has("langevin")) {
            Fields l(f.raw("langevin"), "train.langevin");
            l.read("steps", t.langevin.steps);
            l.read("eta0", t.langevin.eta0);
            l.read("noise", t.langevin.noise);
        }
    }
    if (top.has("model")) {
        Fields f(top.raw("model"), "model");
        auto& m = cfg.model;
        f.read("input_dim", m.input_dim);
        f.read("classes", m.classes);
        f.read("hidden_width", m.hidden_width);
        f.read("hidden_layers", m.hidden_layers);
        f.read("feature_dim", m.feature_dim);
        f.read("attention_dim", m.attention_dim);
        if (f.has("activation")) {
            std::string a;
            f.read("activation", a);
            try {
                m.activation = activation_from_string(a);
            } catch (const ContractError&) {
                throw ConfigError("config: field 'model.activation' has unknown value '" + a + "'");
            }
        }
    }
    if (top.has("optimizer")) {
        Fields f(top.raw("optimizer"), "optimizer");
        auto& o = cfg.optimizer;
        f.read("learning_rate", o.learning_rate);
        f.read("momentum", o.momentum);
        f.read("step_epoch", o.step_epoch);
        f.read("step_factor", o.step_factor);
        if (f.has("schedule")) {
            std::string s;
            f.read("schedule", s);
            try {
                o.schedule = schedule_from_string(s);
            } catch (const ContractError&) {
                throw ConfigError("config: field 'optimizer.schedule' has unknown value '" + s + "'");
            }
        }
    }
    cfg.optimizer.total_epochs = cfg.train.epochs;

    if (top.has("data")) {
        Fields f(top.raw("data"), "data");
        std::string source = "synthetic";
        f.read("source", source);
        if (source == "synthetic") {
            auto& b = cfg.data.benchmark;
            f.read("seed", b.seed);
            f.read("n_train", b.n_train);
            f.read("n_test_per_domain", b.n_test_per_domain);
            f.read("input_dim", b.input_dim);
            f.read("classes", b.classes);
            f.read("lift_noise", b.lift_noise);
            f.read("moon_noise", b.moon_noise);
            f.read("blob_radius", b.blob_radius);
            f.read("blob_spread", b.blob_spread);
            if (f.has("geometry")) {
                std::string g;
                f.read("geometry", g);
                try {
                    b.geometry = geometry_from_string(g);
                } catch (const ContractError&) {
                    throw ConfigError("config: field 'data.geometry' has unknown value '" + g + "'");
                }
            }
            if (f.has("test_domains")) {
                const Json& arr = f.raw("test_domains");
                if (!arr.is_array()) throw ConfigError("config: field 'data.test_domains' must be an array");
                b.test_domains.clear();
                for (std::size_t i = 0; i < arr.size(); ++i) {
                    b.test_domains.push_back(domain_from_json(arr[i], "data.test_domains[" + std::to_string(i) + "]"));
                }
            }
        } else if (source == "csv") {
            cfg.data.synthetic = false;
            std::string train;
            f.read("train", train);
            if (train.empty()) throw ConfigError("config: field 'data.train' is required for csv data");
            cfg.data.train_csv = base_dir / train;
            f.read("classes", cfg.data.classes);
            if (!f.has("tests")) throw ConfigError("config: field 'data.tests' is required for csv data");
            const Json& arr = f.raw("tests");
            if (!arr.is_array() || arr.empty()) throw ConfigError("config: field 'data.tests' must be a nonempty array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                Fields d(arr[i], "data.tests[" + std::to_string(i) + "]");
                CsvDomain dom;
                std::string path;
                d.read("name", dom.name);
                d.read("path", path);
                if (dom.name.empty() || path.empty()) {
                    throw ConfigError("config: 'data.tests[" + std::to_string(i) + "]' needs name and path");
                }
                dom.path = base_dir / path;
                cfg.data.test_csvs.push_back(dom);
            }
        } else {
            throw ConfigError("config: field 'data.source' must be 'synthetic' or 'csv'");
        }
    }
    validate(cfg);
    return cfg;
}

Json to_json(const ExperimentConfig& cfg) {
    const auto& t = cfg.train;
    const auto& m = cfg.model;
    const auto& o = cfg.optimizer;
    Json data;
    if (cfg.data.synthetic) {
        const auto& b = cfg.data.benchmark;
        Json domains = Json::array();
        for (const auto& d : b.test_domains) domains.push_back(domain_to_json(d));
        data = {{"source", "synthetic"},       {"seed", b.seed},
                {"n_train", b.n_train},        {"n_test_per_domain", b.n_test_per_domain},
                {"geometry", to_string(b.geometry)}, {"input_dim", b.input_dim},
                {"classes", b.classes},        {"lift_noise", b.lift_noise},
                {"moon_noise", b.moon_noise},  {"blob_radius", b.blob_radius},
                {"blob_spread", b.blob_spread}, {"test_domains", domains}};
    } else {
        Json tests = Json::array();
        for (const auto& d : cfg.data.test_csvs) tests.push_back({{"name", d.name}, {"path", d.path.string()}});
        data = {{"source", "csv"}, {"train", cfg.data.train_csv.string()}, {"tests", tests}, {"classes", cfg.data.classes}};
    }
    return {
        {"seed", t.seed},
        {"output_dir", cfg.output_dir.string()},
        {"record_wall_time", cfg.record_wall_time},
        {"train",
         {{"lambda_aug", t.lambda_aug},
          {"beta", t.beta},
          {"gamma", t.gamma},
          {"memory_ratio", t.memory_ratio},
          {"warmup_epochs", t.warmup_epochs},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"ablation", to_string(t.ablation)},
          {"kmeans_clusters", t.kmeans_clusters},
          {"detach_label_path", t.detach_label_path},
          {"langevin", {{"steps", t.langevin.steps}, {"eta0", t.langevin.eta0}, {"noise", t.langevin.noise}}}}},
        {"model",
         {{"input_dim", m.input_dim},
          {"classes", m.classes},
          {"hidden_width", m.hidden_width},
          {"hidden_layers", m.hidden_layers},
          {"feature_dim", m.feature_dim},
          {"attention_dim", m.attention_dim},
          {"activation", to_string(m.activation)}}},
        {"optimizer",
         {{"learning_rate", o.learning_rate},
          {"momentum", o.momentum},
          {"schedule", to_string(o.schedule)},
          {"step_epoch", o.step_epoch},
          {"step_factor", o.step_factor}}},
        {"data", data},
    };
}

void validate(const ExperimentConfig& cfg) {
    try {
        validate(cfg.train);
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    const auto& m = cfg.model;
    if (m.hidden_width == 0) throw ConfigError("config field 'model.hidden_width' must be at least 1");
    if (m.hidden_layers == 0) throw ConfigError("config field 'model.hidden_layers' must be at least 1");
    if (m.feature_dim == 0) throw ConfigError("config field 'model.feature_dim' must be at least 1");
    if (m.attention_dim == 0) throw ConfigError("config field 'model.attention_dim' must be at least 1");
    const auto& o = cfg.optimizer;
    if (!(o.learning_rate > 0.0)) throw ConfigError("config field 'optimizer.learning_rate' must be > 0");
    if (!(o.momentum >= 0.0 && o.momentum < 1.0)) throw ConfigError("config field 'optimizer.momentum' must lie in [0, 1)");
    if (!(o.step_factor > 0.0)) throw ConfigError("config field 'optimizer.step_factor' must be > 0");
    if (cfg.data.synthetic) {
        const auto& b = cfg.data.benchmark;
        if (b.test_domains.empty()) throw ConfigError("config field 'data.test_domains' must not be empty");
        try {
            for (const auto& d : b.test_domains) sdgam::validate(d);
        } catch (const ContractError& e) {
            throw ConfigError(std::string("config field 'data.test_domains': ") + e.what());
        }
        if (b.n_train < b.classes || b.n_test_per_domain < b.classes) {
            throw ConfigError("config field 'data.n_train' / 'data.n_test_per_domain' must be at least the class count");
        }
        if (b.geometry == Geometry::two_moons && b.classes != 2) {
            throw ConfigError("config field 'data.classes' must be 2 for two_moons");
        }
    }
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(cfg).dump())));
    return buf;
}

ExperimentConfig load_config(const fs::path& path) {
    const std::string text = read_file(path);
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(doc, path.parent_path());
}

Benchmark load_data(const DataSource& source) {
    if (source.synthetic) return make_benchmark(source.benchmark);
    Benchmark b;
    CsvSchema schema;
    schema.classes = source.classes;
    b.train = load_csv(source.train_csv, schema);
    b.train.name = "train";
    schema.classes = b.train.classes();
    for (const auto& d : source.test_csvs) {
        b.tests.push_back(load_csv(d.path, schema));
        b.tests.back().name = d.name;
        if (b.tests.back().input_dim() != b.train.input_dim()) {
            throw DataError("test domain '" + d.name + "' has " + std::to_string(b.tests.back().input_dim()) +
                            " features but the training set has " + std::to_string(b.train.input_dim()));
        }
    }
    return b;
}

ModelShape resolve_shape(const ModelShape& shape, const LabeledDataset& train) {
    ModelShape s = shape;
    s.input_dim = train.input_dim();
    s.classes = train.classes();
    return s;
}

// ---------------------------------------------------------------------------
// Checkpoints

Json checkpoint_to_json(const Checkpoint& ckpt) {
    const TrainingState& st = ckpt.state;
    Json tensors = Json::object();
    const ModelParams& model = st.model;
    for (std::size_t l = 0; l < model.encoder.layers.size(); ++l) {
        tensors["encoder." + std::to_string(l) + ".weight"] = matrix_to_json(model.encoder.layers[l].weight);
        tensors["encoder." + std::to_string(l) + ".bias"] = model.encoder.layers[l].bias;
    }
    tensors["head.weight"] = matrix_to_json(model.head.weight);
    tensors["head.bias"] = model.head.bias;
    if (!model.single_head.weight.empty()) {
        tensors["single_head.weight"] = matrix_to_json(model.single_head.weight);
        tensors["single_head.bias"] = model.single_head.bias;
    }
    tensors["proj.query"] = matrix_to_json(model.proj.query);
    tensors["proj.key"] = matrix_to_json(model.proj.key);

    Json bank = nullptr;
    if (st.bank) {
        bank = {{"size", st.bank->size()},
                {"feature_dim", st.bank->feature_dim()},
                {"classes", st.bank->classes()},
                {"features", st.bank->features},
                {"labels", st.bank->labels}};
    }
    Json history = Json::array();
    for (const auto& m : ckpt.history) {
        history.push_back({{"epoch", m.epoch},
                           {"loss_cls", m.loss_cls},
                           {"loss_aug", m.loss_aug},
                           {"train_accuracy", m.train_accuracy},
                           {"test_accuracy", m.test_accuracy},
                           {"bank_size", m.bank_size},
                           {"wall_ms", m.wall_ms}});
    }
    return {{"format", "sdgam-checkpoint"},
            {"version", kCheckpointVersion},
            {"config", to_json(ckpt.config)},
            {"epoch", st.epoch},
            {"rng", {{"seed", st.rng.seed()}, {"counter", st.rng.counter()}}},
            {"model", {{"activation", to_string(model.encoder.activation)}, {"tensors", tensors}}},
            {"optimizer", {{"epoch", st.optimizer.epoch}, {"velocity", st.optimizer.velocity}}},
            {"bank", bank},
            {"history", history}};
}

Checkpoint checkpoint_from_json(const Json& doc) {
    if (!doc.is_object() || doc.value("format", "") != "sdgam-checkpoint") {
        throw ConfigError("checkpoint: not an sdgam checkpoint document");
    }
    const int version = doc.value("version", -1);
    if (version != kCheckpointVersion) {
        throw ConfigError("checkpoint: format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint ckpt;
    try {
        ckpt.config = config_from_json(doc.at("config"));
        TrainingState& st = ckpt.state;
        st.epoch = doc.at("epoch").get<std::size_t>();
        st.rng = RngStream(doc.at("rng").at("seed").get<std::uint64_t>(), doc.at("rng").at("counter").get<std::uint64_t>());

        // Shapes come from the config snapshot; values from the tensors.
        RngStream scratch(0);
        st.model = zeros_like(init_model(effective_shape(ckpt.config.model, ckpt.config.train), scratch));
        const Json& tensors = doc.at("model").at("tensors");
        std::size_t seen = 0;
        for_each_tensor(st.model, [&](std::string_view name, std::span<double> dst) {
            const std::string key(name);
            if (!tensors.contains(key)) throw ConfigError("checkpoint: missing tensor '" + key + "'");
            const Json& t = tensors.at(key);
            const std::vector<double> vals = doubles(t.is_object() ? t.at("data") : t, key);
            if (vals.size() != dst.size()) throw ConfigError("checkpoint: tensor '" + key + "' has the wrong size");
            std::copy(vals.begin(), vals.end(), dst.begin());
            ++seen;
        });
        if (seen != tensors.size()) throw ConfigError("checkpoint: unexpected extra tensors");

        st.optimizer = make_optimizer(ckpt.config.optimizer, st.model);
        st.optimizer.epoch = doc.at("optimizer").at("epoch").get<std::size_t>();
        const Json& vel = doc.at("optimizer").at("velocity");
        if (!vel.is_array() || vel.size() != st.optimizer.velocity.size()) {
            throw ConfigError("checkpoint: optimizer state does not match the model");
        }
        for (std::size_t i = 0; i < vel.size(); ++i) {
            Vector v = doubles(vel[i], "optimizer.velocity");
            if (v.size() != st.optimizer.velocity[i].size()) throw ConfigError("checkpoint: optimizer buffer has the wrong size");
            st.optimizer.velocity[i] = std::move(v);
        }

        const Json& bank = doc.at("bank");
        if (!bank.is_null()) {
            const std::size_t n = bank.at("size").get<std::size_t>();
            const std::size_t d = bank.at("feature_dim").get<std::size_t>();
            const std::size_t c = bank.at("classes").get<std::size_t>();
            MemoryBank b;
            b.features = rows_json(bank.at("features"), "bank.features", d);
            b.labels = rows_json(bank.at("labels"), "bank.labels", c);
            if (b.size() != n || b.labels.size() != n) throw ConfigError("checkpoint: bank size disagrees with its rows");
            if (d != ckpt.config.model.feature_dim || c != ckpt.config.model.classes) {
                throw ConfigError("checkpoint: bank dimensions disagree with the model");
            }
            validate_bank(b);
            st.bank = std::move(b);
        }

        for (const auto& h : doc.at("history")) {
            EpochMetrics m;
            m.epoch = h.at("epoch").get<std::size_t>();
            m.loss_cls = h.at("loss_cls").get<double>();
            m.loss_aug = h.at("loss_aug").get<double>();
            m.train_accuracy = h.at("train_accuracy").get<double>();
            m.test_accuracy = doubles(h.at("test_accuracy"), "history.test_accuracy");
            m.bank_size = h.at("bank_size").get<std::size_t>();
            m.wall_ms = h.at("wall_ms").get<double>();
            ckpt.history.push_back(std::move(m));
        }
        if (ckpt.history.size() != st.epoch) throw ConfigError("checkpoint: history length disagrees with the epoch");
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("checkpoint: malformed document: ") + e.what());
    } catch (const ContractError& e) {
        throw ConfigError(std::string("checkpoint: ") + e.what());
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
    write_file_atomic(path, checkpoint_to_json(ckpt).dump(1) + "\n");
}

Checkpoint load_checkpoint(const fs::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw ConfigError("checkpoint: " + path.string() + " is not valid JSON: " + e.what());
    }
    return checkpoint_from_json(doc);
}

// ---------------------------------------------------------------------------
// Files

void write_file_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out << contents;
        out.flush();
        if (!out) throw DataError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw DataError("cannot move '" + tmp.string() + "' into place: " + ec.message());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string metrics_csv(const std::vector<EpochMetrics>& history, const std::vector<std::string>& domains,
                        bool record_wall_time) {
    std::string out = "epoch,L_cls,L_aug,train_acc";
    for (const auto& d : domains) out += ",acc_" + d;
    out += ",wall_ms\n";
    for (const auto& m : history) {
        out += std::to_string(m.epoch) + "," + format_real(m.loss_cls) + "," + format_real(m.loss_aug) + "," +
               format_real(m.train_accuracy);
        for (double a : m.test_accuracy) out += "," + format_real(a);
        out += "," + (record_wall_time ? format_real(std::round(m.wall_ms)) : std::string("0")) + "\n";
    }
    return out;
}

Json summary_json(const ExperimentConfig& cfg, const TrainingState& state,
                  const std::vector<EpochMetrics>& history, const std::vector<std::string>& domains) {
    Json per_domain = Json::object();
    double mean = 0.0;
    double train_acc = 0.0;
    if (!history.empty()) {
        const auto& last = history.back();
        for (std::size_t i = 0; i < domains.size(); ++i) {
            per_domain[domains[i]] = last.test_accuracy[i];
            mean += last.test_accuracy[i];
        }
        mean /= static_cast<double>(domains.size());
        train_acc = last.train_accuracy;
    }
    return {{"config_hash", config_hash(cfg)},
            {"seed", cfg.train.seed},
            {"ablation", to_string(cfg.train.ablation)},
            {"results",
             {{"epochs_completed", state.epoch},
              {"bank_size", state.bank ? state.bank->size() : 0},
              {"train_accuracy", train_acc},
              {"test_accuracy", per_domain},
              {"mean_test_accuracy", mean}}}};
}

}  // namespace sdgam
