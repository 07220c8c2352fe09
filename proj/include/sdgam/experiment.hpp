#pragma once

// Experiment configuration, checkpoint documents, metrics files, and the
// train / eval / sweep / ablate commands behind the command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdgam/data.hpp"
#include "sdgam/trainer.hpp"

namespace sdgam {

using Json = nlohmann::json;

/// A bad configuration value. The message names the field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum ExitCode : int {
    exit_ok = 0,
    exit_config = 2,
    exit_io = 3,
    exit_numeric = 4,
};

struct CsvDomain {
    std::string name;
    std::filesystem::path path;
};

struct DataSource {
    bool synthetic = true;
    BenchmarkConfig benchmark = default_benchmark();
    std::filesystem::path train_csv;
    std::vector<CsvDomain> test_csvs;
    std::size_t classes = 0;  // csv only; 0 infers from the training file
};

struct ExperimentConfig {
    TrainConfig train;
    ModelShape model;
    OptimizerConfig optimizer;
    DataSource data;
    std::filesystem::path output_dir = "out";
    /// Fill metrics.csv's wall_ms column with measured times. Off by default
    /// so identical runs produce identical files.
    bool record_wall_time = false;
};

/// Reads a config document. Relative data paths resolve against base_dir.
ExperimentConfig config_from_json(const Json& doc, const std::filesystem::path& base_dir = {});
Json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Field-level validation beyond what parsing already enforces.
void validate(const ExperimentConfig& cfg);

/// 64-bit FNV-1a of the canonical config document, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Training and test domains for the configured source.
Benchmark load_data(const DataSource& source);
/// Copies d_x and N_c from the data into the model shape.
ModelShape resolve_shape(const ModelShape& shape, const LabeledDataset& train);

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    ExperimentConfig config;  // model shape resolved against the data
    TrainingState state;
    std::vector<EpochMetrics> history;
};

Json checkpoint_to_json(const Checkpoint& ckpt);
/// Rejects documents whose version differs from kCheckpointVersion.
Checkpoint checkpoint_from_json(const Json& doc);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Files

/// Writes to a sibling temp file and renames it over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// Header epoch,L_cls,L_aug,train_acc,acc_<domain>...,wall_ms.
std::string metrics_csv(const std::vector<EpochMetrics>& history,
                        const std::vector<std::string>& domains, bool record_wall_time);

Json summary_json(const ExperimentConfig& cfg, const TrainingState& state,
                  const std::vector<EpochMetrics>& history, const std::vector<std::string>& domains);

std::string format_real(double v);

// ---------------------------------------------------------------------------
// Commands

struct CommonOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
};

struct TrainOptions {
    std::filesystem::path config;
    CommonOptions common;
    std::optional<std::filesystem::path> resume;
    /// Stop once this many epochs are complete (checkpoint still written).
    std::optional<std::size_t> stop_after;
    bool quiet = false;
};

struct EvalOptions {
    std::filesystem::path checkpoint;
    std::string data;  // a CSV path, or "synthetic" for the checkpoint's benchmark
    bool use_memory = true;
    CommonOptions common;
};

enum class SweepParam { lambda_aug, gamma, beta, memory_ratio };
std::string to_string(SweepParam p);
SweepParam sweep_param_from_string(const std::string& s);
/// Whether v lies in the parameter's legal range.
bool sweep_value_legal(SweepParam p, double v);

struct SweepOptions {
    std::filesystem::path config;
    SweepParam param = SweepParam::gamma;
    std::vector<double> values;
    CommonOptions common;
    bool quiet = true;
};

struct AblateOptions {
    std::filesystem::path config;
    CommonOptions common;
    bool quiet = true;
};

/// Outcome of one training run written to an output directory.
struct RunOutcome {
    TrainingState state;
    std::vector<EpochMetrics> history;
    std::vector<std::string> domains;
};

/// Trains cfg and writes metrics.csv, checkpoint, and summary into
/// cfg.output_dir. Exceptions propagate.
RunOutcome train_and_write(const ExperimentConfig& cfg, bool quiet,
                           const std::optional<Checkpoint>& resume_from = std::nullopt,
                           std::optional<std::size_t> stop_after = std::nullopt);

int cmd_train(const TrainOptions& opts);
int cmd_eval(const EvalOptions& opts);
int cmd_sweep(const SweepOptions& opts);
int cmd_ablate(const AblateOptions& opts);

/// Parses argv and dispatches to a command.
int run_cli(int argc, char** argv);

}  // namespace sdgam
