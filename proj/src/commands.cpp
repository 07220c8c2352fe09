#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "sdgam/experiment.hpp"

namespace sdgam {

namespace fs = std::filesystem;

namespace {

ExperimentConfig with_overrides(ExperimentConfig cfg, const CommonOptions& common) {
    if (common.seed) cfg.train.seed = *common.seed;
    if (common.out) cfg.output_dir = *common.out;
    return cfg;
}

std::vector<std::string> domain_names(const Benchmark& data) {
    std::vector<std::string> names;
    for (const auto& t : data.tests) names.push_back(t.name);
    return names;
}

std::string fixed(double v, int digits = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string value_label(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

ExperimentConfig comparable(ExperimentConfig cfg) {
    cfg.output_dir.clear();
    return cfg;
}

}  // namespace

std::string to_string(SweepParam p) {
    switch (p) {
        case SweepParam::lambda_aug: return "lambda_aug";
        case SweepParam::gamma: return "gamma";
        case SweepParam::beta: return "beta";
        case SweepParam::memory_ratio: return "memory_ratio";
    }
    return "?";
}

SweepParam sweep_param_from_string(const std::string& s) {
    if (s == "lambda_aug" || s == "lambda") return SweepParam::lambda_aug;
    if (s == "gamma") return SweepParam::gamma;
    if (s == "beta") return SweepParam::beta;
    if (s == "memory_ratio" || s == "r_m") return SweepParam::memory_ratio;
    throw ConfigError("unknown sweep parameter '" + s + "' (expected lambda_aug, gamma, beta, or memory_ratio)");
}

bool sweep_value_legal(SweepParam p, double v) {
    if (!std::isfinite(v)) return false;
    switch (p) {
        case SweepParam::lambda_aug: return v >= 0.0;
        case SweepParam::gamma:
        case SweepParam::beta: return v >= 0.0 && v <= 1.0;
        case SweepParam::memory_ratio: return v > 0.0 && v <= 1.0;
    }
    return false;
}

RunOutcome train_and_write(const ExperimentConfig& cfg, bool quiet, const std::optional<Checkpoint>& resume_from,
                           std::optional<std::size_t> stop_after) {
    validate(cfg);
    const Benchmark data = load_data(cfg.data);
    ExperimentConfig resolved = cfg;
    resolved.model = resolve_shape(cfg.model, data.train);
    resolved.optimizer.total_epochs = resolved.train.epochs;
    validate_run(data.train, data.tests, resolved.train, effective_shape(resolved.model, resolved.train));

    RunOutcome run;
    run.domains = domain_names(data);
    if (resume_from) {
        if (config_hash(comparable(resume_from->config)) != config_hash(comparable(resolved))) {
            throw ConfigError("checkpoint was written under a different config; refusing to resume");
        }
        run.state = resume_from->state;
        run.history = resume_from->history;
    } else {
        run.state = init_training(resolved.train, resolved.model, resolved.optimizer);
    }

    std::size_t until = resolved.train.epochs;
    if (stop_after) until = std::min(until, *stop_after);
    if (run.state.epoch > until) {
        throw ConfigError("checkpoint is already at epoch " + std::to_string(run.state.epoch) +
                          ", past the requested stop");
    }

    EpochObserver observer;
    if (!quiet) {
        observer = [&](const TrainingState&, const EpochMetrics& m) {
            std::cerr << "epoch " << m.epoch << "/" << resolved.train.epochs << "  L_cls " << fixed(m.loss_cls)
                      << "  L_aug " << fixed(m.loss_aug) << "  train " << fixed(m.train_accuracy)
                      << "  test " << fixed(mean_of(m.test_accuracy)) << "\n";
        };
    }
    continue_training(run.state, data.train, data.tests, resolved.train, until, run.history, observer);
    if (!resolved.record_wall_time) {
        for (auto& m : run.history) m.wall_ms = 0.0;
    }

    const fs::path& out = resolved.output_dir;
    fs::create_directories(out);
    save_checkpoint(Checkpoint{resolved, run.state, run.history}, out / "checkpoint.json");
    write_file_atomic(out / "metrics.csv", metrics_csv(run.history, run.domains, resolved.record_wall_time));
    write_file_atomic(out / "summary.json",
                      summary_json(resolved, run.state, run.history, run.domains).dump(2) + "\n");
    return run;
}

int cmd_train(const TrainOptions& opts) {
    const ExperimentConfig cfg = with_overrides(load_config(opts.config), opts.common);
    std::optional<Checkpoint> resume;
    if (opts.resume) resume = load_checkpoint(*opts.resume);
    const RunOutcome run = train_and_write(cfg, opts.quiet, resume, opts.stop_after);
    if (!run.history.empty()) {
        const auto& last = run.history.back();
        for (std::size_t i = 0; i < run.domains.size(); ++i) {
            std::cout << run.domains[i] << " " << fixed(last.test_accuracy[i]) << "\n";
        }
        std::cout << "mean " << fixed(mean_of(last.test_accuracy)) << "\n";
    }
    std::cout << "wrote " << cfg.output_dir.string() << "\n";
    return exit_ok;
}

int cmd_eval(const EvalOptions& opts) {
    const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
    const TrainingState& st = ckpt.state;

    std::vector<LabeledDataset> sets;
    if (opts.data == "synthetic") {
        Benchmark b = load_data(ckpt.config.data);
        sets.push_back(std::move(b.train));
        for (auto& t : b.tests) sets.push_back(std::move(t));
    } else {
        CsvSchema schema;
        schema.classes = ckpt.config.model.classes;
        sets.push_back(load_csv(opts.data, schema));
        sets.back().name = fs::path(opts.data).stem().string();
    }
    for (const auto& s : sets) {
        if (s.input_dim() != ckpt.config.model.input_dim) {
            throw DataError("dataset '" + s.name + "' has " + std::to_string(s.input_dim()) +
                            " features but the checkpoint's model expects " +
                            std::to_string(ckpt.config.model.input_dim));
        }
    }

    InferenceMode mode = inference_mode(ckpt.config.train, st.bank.has_value());
    if (!opts.use_memory && mode != InferenceMode::duplicated) mode = InferenceMode::duplicated;
    const MemoryBank* bank = st.bank ? &*st.bank : nullptr;
    if (opts.use_memory && mode != InferenceMode::duplicated && !bank) {
        throw ConfigError("checkpoint has no memory bank; pass --no-memory");
    }

    std::string csv = "domain,accuracy,mode\n";
    const char* mode_name = mode == InferenceMode::memory       ? "memory"
                            : mode == InferenceMode::augmenting ? "augmenting"
                                                                : "duplicated";
    for (const auto& s : sets) {
        const double acc = accuracy(s, st.model, bank, mode);
        std::cout << s.name << " " << fixed(acc) << "\n";
        csv += s.name + "," + format_real(acc) + "," + mode_name + "\n";
    }
    const fs::path out = opts.common.out ? *opts.common.out : opts.checkpoint.parent_path();
    write_file_atomic(out / "eval.csv", csv);
    return exit_ok;
}

int cmd_sweep(const SweepOptions& opts) {
    const ExperimentConfig base = with_overrides(load_config(opts.config), opts.common);
    const std::string pname = to_string(opts.param);
    std::vector<std::string> domains;
    std::vector<std::string> rows;
    for (double v : opts.values) {
        std::string row = pname + "," + format_real(v) + "," + std::to_string(base.train.seed) + ",";
        if (!sweep_value_legal(opts.param, v)) {
            std::cerr << "warning: skipping " << pname << "=" << v << " (out of range)\n";
            rows.push_back(row + "\x01" + "skipped: out of range");
            continue;
        }
        ExperimentConfig cfg = base;
        switch (opts.param) {
            case SweepParam::lambda_aug: cfg.train.lambda_aug = v; break;
            case SweepParam::gamma: cfg.train.gamma = v; break;
            case SweepParam::beta: cfg.train.beta = v; break;
            case SweepParam::memory_ratio: cfg.train.memory_ratio = v; break;
        }
        cfg.output_dir = base.output_dir / ("sweep_" + pname) / (pname + "_" + value_label(v));
        if (!opts.quiet) std::cerr << pname << " = " << v << "\n";
        const RunOutcome run = train_and_write(cfg, true, std::nullopt, std::nullopt);
        domains = run.domains;
        const auto& acc = run.history.back().test_accuracy;
        row += std::to_string(run.state.bank ? run.state.bank->size() : 0);
        for (double a : acc) row += "," + format_real(a);
        row += "," + format_real(mean_of(acc)) + ",";
        rows.push_back(row);
        std::cout << pname << "=" << v << " mean " << fixed(mean_of(acc)) << "\n";
    }
    if (domains.empty()) domains = domain_names(load_data(base.data));

    std::string csv = "parameter,value,seed,bank_size";
    for (const auto& d : domains) csv += ",acc_" + d;
    csv += ",mean,note\n";
    for (auto& row : rows) {
        const auto mark = row.find('\x01');
        if (mark != std::string::npos) {
            // Skipped values keep the column count with empty cells.
            std::string filler = ",,";
            for (std::size_t i = 0; i < domains.size(); ++i) filler += ",";
            row = row.substr(0, mark) + filler + row.substr(mark + 1);
        }
        csv += row + "\n";
    }
    write_file_atomic(base.output_dir / ("sweep_" + pname + ".csv"), csv);
    return exit_ok;
}

int cmd_ablate(const AblateOptions& opts) {
    const ExperimentConfig base = with_overrides(load_config(opts.config), opts.common);
    std::vector<std::string> domains;
    std::vector<std::string> rows;
    for (Ablation a : all_ablations()) {
        ExperimentConfig cfg = base;
        cfg.train.ablation = a;
        cfg.output_dir = base.output_dir / "ablate" / to_string(a);
        if (!opts.quiet) std::cerr << "variant " << to_string(a) << "\n";
        const RunOutcome run = train_and_write(cfg, true, std::nullopt, std::nullopt);
        domains = run.domains;
        const auto& acc = run.history.back().test_accuracy;
        std::string row = to_string(a);
        for (double v : acc) row += "," + format_real(v);
        row += "," + format_real(mean_of(acc));
        rows.push_back(row);
        std::cout << to_string(a) << " " << fixed(mean_of(acc)) << "\n";
    }
    std::string csv = "variant";
    for (const auto& d : domains) csv += ",acc_" + d;
    csv += ",average\n";
    for (const auto& r : rows) csv += r + "\n";
    write_file_atomic(base.output_dir / "ablation.csv", csv);
    return exit_ok;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Single-domain generalization with an adversarial feature memory bank"};
    app.require_subcommand(1);

    TrainOptions train;
    EvalOptions eval;
    SweepOptions sweep;
    AblateOptions ablate;
    std::uint64_t seed = 0;
    std::string out;
    std::string param;
    std::string values;
    std::string resume;
    std::size_t stop_after = 0;
    bool no_memory = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Override the training seed");
        cmd->add_option("--out", out, "Output directory");
    };

    auto* t = app.add_subcommand("train", "Train one model from a config");
    t->add_option("--config", train.config, "Config file")->required();
    t->add_option("--resume", resume, "Continue from a checkpoint");
    t->add_option("--stop-after", stop_after, "Stop once this many epochs are complete");
    t->add_flag("--quiet", train.quiet, "No per-epoch progress");
    add_common(t);

    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
    e->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
    e->add_option("--data", eval.data, "CSV file, or 'synthetic' for the checkpoint's benchmark")->required();
    e->add_flag("--no-memory", no_memory, "Classify from [z; z] without reading the bank");
    e->add_option("--out", out, "Output directory (default: the checkpoint's directory)");

    auto* s = app.add_subcommand("sweep", "Train once per value of one hyperparameter");
    s->add_option("--config", sweep.config, "Config file")->required();
    s->add_option("--param", param, "lambda_aug, gamma, beta, or memory_ratio")->required();
    s->add_option("--values", values, "Comma-separated values")->required();
    add_common(s);

    auto* a = app.add_subcommand("ablate", "Train the full model and its four ablations");
    a->add_option("--config", ablate.config, "Config file")->required();
    add_common(a);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? exit_ok : exit_config;
    }

    auto common = [&](CLI::App* cmd) {
        CommonOptions c;
        if (cmd->count("--seed")) c.seed = seed;
        if (cmd->count("--out")) c.out = out;
        return c;
    };

    try {
        if (t->parsed()) {
            train.common = common(t);
            if (t->count("--resume")) train.resume = resume;
            if (t->count("--stop-after")) train.stop_after = stop_after;
            return cmd_train(train);
        }
        if (e->parsed()) {
            eval.use_memory = !no_memory;
            if (e->count("--out")) eval.common.out = out;
            return cmd_eval(eval);
        }
        if (s->parsed()) {
            sweep.common = common(s);
            sweep.param = sweep_param_from_string(param);
            std::stringstream ss(values);
            std::string item;
            while (std::getline(ss, item, ',')) {
                try {
                    std::size_t used = 0;
                    sweep.values.push_back(std::stod(item, &used));
                    if (used != item.size()) throw std::invalid_argument(item);
                } catch (const std::logic_error&) {
                    throw ConfigError("--values: '" + item + "' is not a number");
                }
            }
            if (sweep.values.empty()) throw ConfigError("--values: no values given");
            return cmd_sweep(sweep);
        }
        ablate.common = common(a);
        return cmd_ablate(ablate);
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return exit_config;
    } catch (const ContractError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return exit_config;
    } catch (const DataError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return exit_io;
    } catch (const fs::filesystem_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return exit_io;
    } catch (const NumericError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return exit_numeric;
    }
}

}  // namespace sdgam
