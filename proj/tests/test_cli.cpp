#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sdgam/experiment.hpp"
#include "support.hpp"

using namespace sdgam;
using namespace sdgam::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "sdgam_cli_tests" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Json small_config_json(const fs::path& out) {
    return Json{{"seed", 2},
                {"output_dir", out.string()},
                {"train", {{"epochs", 6}, {"warmup_epochs", 2}, {"batch_size", 16}}},
                {"model", {{"hidden_width", 12}, {"feature_dim", 6}, {"attention_dim", 4}}},
                {"optimizer", {{"learning_rate", 0.05}, {"step_epoch", 4}}},
                {"data",
                 {{"source", "synthetic"},
                  {"n_train", 200},
                  {"n_test_per_domain", 100},
                  {"test_domains", {{{"name", "rot20"}, {"rotation_deg", 20}}, {{"name", "rot40"}, {"rotation_deg", 40}}}}}}};
}

fs::path write_config(const fs::path& dir, const Json& doc) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << doc.dump(2);
    return p;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "sdgam");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(Predict, SingleEntryBank) {
    const SmallInstance s = small_instance(1);
    MemoryBank bank{{s.bank.features[0]}, {s.bank.labels[0]}};
    const Prediction p = predict(s.x, s.model, &bank, true);
    const Vector z = encode(s.model.encoder, s.x).z;
    EXPECT_EQ(p.logits, head_forward(s.model.head, z, bank.features[0]));
}

TEST(Predict, NoMemoryUsesDuplicatedFeature) {
    const SmallInstance s = small_instance(2);
    const Prediction p = predict(s.x, s.model, nullptr, false);
    EXPECT_EQ(p.logits, head_forward_duplicated(s.model.head, encode(s.model.encoder, s.x).z));
    EXPECT_EQ(p.label, argmax(p.logits));
}

TEST(Predict, BiasShiftKeepsLabel) {
    SmallInstance s = small_instance(3);
    const std::size_t before = predict(s.x, s.model, &s.bank, true).label;
    for (double& b : s.model.head.bias) b += 17.25;
    EXPECT_EQ(predict(s.x, s.model, &s.bank, true).label, before);
}

TEST(Predict, MemoryToggleChangesOnlyRightSlot) {
    const SmallInstance s = small_instance(4);
    const Vector z = encode(s.model.encoder, s.x).z;
    const Vector with = predict(s.x, s.model, &s.bank, true).logits;
    const Vector without = predict(s.x, s.model, &s.bank, false).logits;
    const Vector za = attention_read(z, s.bank, s.model.proj).augmenting;
    const Vector left = head_forward(s.model.head, z, Vector(4, 0.0));
    const Vector right_mem = head_forward(s.model.head, Vector(4, 0.0), za);
    const Vector right_dup = head_forward(s.model.head, Vector(4, 0.0), z);
    for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_NEAR(with[c] - without[c], right_mem[c] - right_dup[c], 1e-12);
        EXPECT_NEAR(with[c], left[c] + right_mem[c] - s.model.head.bias[c], 1e-12);
    }
}

TEST(Predict, MissingBankThrows) {
    const SmallInstance s = small_instance(5);
    EXPECT_THROW(predict(s.x, s.model, nullptr, true), ContractError);
}

TEST(Config, DefaultsAndOverrides) {
    const ExperimentConfig cfg = config_from_json(Json::object());
    EXPECT_EQ(cfg.train.lambda_aug, 1.0);
    EXPECT_EQ(cfg.train.gamma, 0.7);
    EXPECT_EQ(cfg.train.beta, 0.5);
    EXPECT_EQ(cfg.train.memory_ratio, 0.1);
    EXPECT_EQ(cfg.data.benchmark.test_domains.size(), 4u);

    const ExperimentConfig c2 = config_from_json(Json::parse(R"({"train": {"gamma": 0.3, "ablation": "no_concat"},
        "optimizer": {"schedule": "cosine"}, "data": {"test_domains": [{"name": "d", "rotation_deg": 90}]}})"));
    EXPECT_EQ(c2.train.gamma, 0.3);
    EXPECT_EQ(c2.train.ablation, Ablation::no_concat);
    EXPECT_EQ(c2.optimizer.schedule, LrSchedule::cosine);
    EXPECT_NEAR(c2.data.benchmark.test_domains[0].rotation, std::acos(-1.0) / 2, 1e-15);
}

TEST(Config, FieldLevelErrors) {
    auto message = [](const char* text) {
        try {
            config_from_json(Json::parse(text));
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message(R"({"train": {"gama": 0.3}})").find("train.gama"), std::string::npos);
    EXPECT_NE(message(R"({"train": {"gamma": 1.3}})").find("gamma"), std::string::npos);
    EXPECT_NE(message(R"({"train": {"beta": "half"}})").find("train.beta"), std::string::npos);
    EXPECT_NE(message(R"({"train": {"epochs": -3}})").find("train.epochs"), std::string::npos);
    EXPECT_NE(message(R"({"model": {"activation": "relu"}})").find("model.activation"), std::string::npos);
    EXPECT_NE(message(R"({"data": {"source": "images"}})").find("data.source"), std::string::npos);
    EXPECT_NE(message(R"({"optimizer": {"momentum": 1.0}})").find("optimizer.momentum"), std::string::npos);
}

TEST(Config, JsonRoundTripAndHash) {
    ExperimentConfig cfg = config_from_json(small_config_json("x"));
    const ExperimentConfig back = config_from_json(to_json(cfg));
    EXPECT_EQ(config_hash(cfg), config_hash(back));
    EXPECT_EQ(config_hash(cfg).size(), 16u);
    cfg.train.seed = 3;
    EXPECT_NE(config_hash(cfg), config_hash(back));
}

TEST(Checkpoint, RoundTripIsExact) {
    const fs::path dir = scratch_dir("ckpt");
    ExperimentConfig cfg = config_from_json(small_config_json(dir / "run"));
    const RunOutcome run = train_and_write(cfg, true);
    const Checkpoint ck = load_checkpoint(dir / "run" / "checkpoint.json");
    EXPECT_EQ(max_abs_difference(ck.state.model, run.state.model), 0.0);
    EXPECT_EQ(ck.state.bank, run.state.bank);
    EXPECT_EQ(ck.state.rng, run.state.rng);
    EXPECT_EQ(ck.state.epoch, 6u);
    EXPECT_EQ(ck.state.optimizer.velocity, run.state.optimizer.velocity);
    EXPECT_EQ(ck.history.size(), 6u);
    // Save again: the document is a fixed point.
    EXPECT_EQ(checkpoint_to_json(ck).dump(1) + "\n", read_file(dir / "run" / "checkpoint.json"));
}

TEST(Checkpoint, VersionMismatchRejected) {
    const fs::path dir = scratch_dir("version");
    ExperimentConfig cfg = config_from_json(small_config_json(dir / "run"));
    cfg.train.epochs = 2;
    train_and_write(cfg, true);
    Json doc = Json::parse(read_file(dir / "run" / "checkpoint.json"));
    doc["version"] = kCheckpointVersion + 1;
    EXPECT_THROW(checkpoint_from_json(doc), ConfigError);
    doc["version"] = kCheckpointVersion;
    doc["model"]["tensors"].erase("proj.key");
    EXPECT_THROW(checkpoint_from_json(doc), ConfigError);
}

TEST(Train, WritesArtifactsAndIsDeterministic) {
    const fs::path dir = scratch_dir("train");
    Json doc = small_config_json(dir / "a");
    const fs::path cfg = write_config(dir, doc);
    ASSERT_EQ(cli({"train", "--config", cfg.string(), "--quiet"}), 0);
    ASSERT_EQ(cli({"train", "--config", cfg.string(), "--quiet", "--out", (dir / "b").string()}), 0);
    for (const char* f : {"metrics.csv", "checkpoint.json", "summary.json"}) EXPECT_TRUE(fs::exists(dir / "a" / f));
    EXPECT_EQ(read_file(dir / "a" / "metrics.csv"), read_file(dir / "b" / "metrics.csv"));
    const auto rows = lines(dir / "a" / "metrics.csv");
    ASSERT_EQ(rows.size(), 7u);
    EXPECT_EQ(rows[0], "epoch,L_cls,L_aug,train_acc,acc_rot20,acc_rot40,wall_ms");
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i].substr(0, rows[i].find(',')), std::to_string(i));
    const Json summary = Json::parse(read_file(dir / "a" / "summary.json"));
    EXPECT_EQ(summary["seed"], 2);
    EXPECT_TRUE(summary["results"]["test_accuracy"].contains("rot40"));
    EXPECT_EQ(summary["config_hash"].get<std::string>().size(), 16u);
}

TEST(Train, MissingDataFileIsIoErrorWithoutCheckpoint) {
    const fs::path dir = scratch_dir("missing");
    Json doc = small_config_json(dir / "out");
    doc["data"] = {{"source", "csv"}, {"train", "nope.csv"}, {"tests", {{{"name", "t"}, {"path", "nope2.csv"}}}}};
    const fs::path cfg = write_config(dir, doc);
    EXPECT_EQ(cli({"train", "--config", cfg.string(), "--quiet"}), exit_io);
    EXPECT_FALSE(fs::exists(dir / "out" / "checkpoint.json"));
}

TEST(Train, InvalidConfigExitCode) {
    const fs::path dir = scratch_dir("invalid");
    Json doc = small_config_json(dir / "out");
    doc["train"]["beta"] = 2.0;
    EXPECT_EQ(cli({"train", "--config", write_config(dir, doc).string(), "--quiet"}), exit_config);
    EXPECT_EQ(cli({"train"}), exit_config);
    EXPECT_EQ(cli({"frobnicate"}), exit_config);
}

TEST(Train, ZeroLambdaSummaryEqualsNoAugLoss) {
    const fs::path dir = scratch_dir("lambda0");
    Json a = small_config_json(dir / "a");
    a["train"]["lambda_aug"] = 0.0;
    Json b = small_config_json(dir / "b");
    b["train"]["ablation"] = "no_aug_loss";
    train_and_write(config_from_json(a), true);
    train_and_write(config_from_json(b), true);
    const Json sa = Json::parse(read_file(dir / "a" / "summary.json"));
    const Json sb = Json::parse(read_file(dir / "b" / "summary.json"));
    EXPECT_EQ(sa["results"], sb["results"]);
    EXPECT_EQ(read_file(dir / "a" / "metrics.csv"), read_file(dir / "b" / "metrics.csv"));
}

TEST(Train, ResumeMatchesUninterrupted) {
    const fs::path dir = scratch_dir("resume");
    const fs::path cfg = write_config(dir, small_config_json(dir / "full"));
    ASSERT_EQ(cli({"train", "--config", cfg.string(), "--quiet"}), 0);
    ASSERT_EQ(cli({"train", "--config", cfg.string(), "--quiet", "--out", (dir / "part").string(), "--stop-after", "3"}), 0);
    EXPECT_EQ(lines(dir / "part" / "metrics.csv").size(), 4u);
    ASSERT_EQ(cli({"train", "--config", cfg.string(), "--quiet", "--out", (dir / "part").string(), "--resume",
                   (dir / "part" / "checkpoint.json").string()}),
              0);
    EXPECT_EQ(read_file(dir / "full" / "metrics.csv"), read_file(dir / "part" / "metrics.csv"));
    Json full = Json::parse(read_file(dir / "full" / "checkpoint.json"));
    Json part = Json::parse(read_file(dir / "part" / "checkpoint.json"));
    full["config"].erase("output_dir");
    part["config"].erase("output_dir");
    EXPECT_EQ(full, part);

    Json other = small_config_json(dir / "x");
    other["train"]["gamma"] = 0.2;
    const fs::path ocfg = dir / "other.json";
    std::ofstream(ocfg) << other.dump();
    EXPECT_EQ(cli({"train", "--config", ocfg.string(), "--quiet", "--resume", (dir / "part" / "checkpoint.json").string()}),
              exit_config);
}

TEST(Eval, TrainingSetAndToggle) {
    const fs::path dir = scratch_dir("eval");
    Json doc = small_config_json(dir / "run");
    doc["train"]["epochs"] = 20;
    doc["optimizer"]["step_epoch"] = 15;
    train_and_write(config_from_json(doc), true);
    const std::string ck = (dir / "run" / "checkpoint.json").string();
    ASSERT_EQ(cli({"eval", "--checkpoint", ck, "--data", "synthetic"}), 0);
    const auto rows = lines(dir / "run" / "eval.csv");
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[1].substr(0, 6), "train,");
    const double train_acc = std::stod(rows[1].substr(6));
    EXPECT_GE(train_acc, 0.9);

    // Deterministic.
    const std::string first = read_file(dir / "run" / "eval.csv");
    ASSERT_EQ(cli({"eval", "--checkpoint", ck, "--data", "synthetic"}), 0);
    EXPECT_EQ(first, read_file(dir / "run" / "eval.csv"));

    ASSERT_EQ(cli({"eval", "--checkpoint", ck, "--data", "synthetic", "--no-memory", "--out", (dir / "nm").string()}), 0);
    EXPECT_NE(read_file(dir / "nm" / "eval.csv").find("duplicated"), std::string::npos);
}

TEST(Eval, CsvErrors) {
    const fs::path dir = scratch_dir("eval_err");
    Json doc = small_config_json(dir / "run");
    doc["train"]["epochs"] = 3;
    train_and_write(config_from_json(doc), true);
    const std::string ck = (dir / "run" / "checkpoint.json").string();

    std::ofstream(dir / "empty.csv") << "";
    EXPECT_EQ(cli({"eval", "--checkpoint", ck, "--data", (dir / "empty.csv").string(), "--out", (dir / "o1").string()}),
              exit_io);
    EXPECT_FALSE(fs::exists(dir / "o1" / "eval.csv"));

    std::ofstream(dir / "narrow.csv") << "f0,f1,label\n1,2,0\n";
    EXPECT_EQ(cli({"eval", "--checkpoint", ck, "--data", (dir / "narrow.csv").string(), "--out", (dir / "o2").string()}),
              exit_io);
    EXPECT_FALSE(fs::exists(dir / "o2" / "eval.csv"));

    // A correctly shaped CSV evaluates.
    const Benchmark b = load_data(load_checkpoint(ck).config.data);
    save_csv(b.tests[0], dir / "rot.csv");
    EXPECT_EQ(cli({"eval", "--checkpoint", ck, "--data", (dir / "rot.csv").string(), "--out", (dir / "o3").string()}), 0);
    EXPECT_EQ(lines(dir / "o3" / "eval.csv").size(), 2u);
}

TEST(Sweep, RowsAndBankSizes) {
    const fs::path dir = scratch_dir("sweep");
    Json doc = small_config_json(dir / "out");
    doc["train"]["epochs"] = 3;
    const fs::path cfg = write_config(dir, doc);
    ASSERT_EQ(cli({"sweep", "--config", cfg.string(), "--param", "memory_ratio", "--values", "0.05,0.1,1.5,0.2"}), 0);
    const auto rows = lines(dir / "out" / "sweep_memory_ratio.csv");
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0], "parameter,value,seed,bank_size,acc_rot20,acc_rot40,mean,note");
    const std::vector<std::string> expect_bank{"10", "20", "", "40"};
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::vector<std::string> cells;
        std::stringstream ss(rows[i]);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        if (rows[i].back() == ',') cells.push_back("");
        ASSERT_EQ(cells.size(), 8u) << rows[i];
        EXPECT_EQ(cells[0], "memory_ratio");
        EXPECT_EQ(cells[2], "2");
        EXPECT_EQ(cells[3], expect_bank[i - 1]);
    }
    EXPECT_NE(rows[3].find("skipped"), std::string::npos);
    EXPECT_EQ(cli({"sweep", "--config", cfg.string(), "--param", "eta", "--values", "1"}), exit_config);
    EXPECT_EQ(cli({"sweep", "--config", cfg.string(), "--param", "gamma", "--values", "0.1,x"}), exit_config);
}

TEST(Sweep, SingleValueMatchesTrain) {
    const fs::path dir = scratch_dir("sweep1");
    Json doc = small_config_json(dir / "out");
    doc["train"]["epochs"] = 3;
    doc["train"]["gamma"] = 0.4;
    const fs::path cfg = write_config(dir, doc);
    ASSERT_EQ(cli({"sweep", "--config", cfg.string(), "--param", "gamma", "--values", "0.4"}), 0);
    ASSERT_EQ(cli({"train", "--config", cfg.string(), "--quiet", "--out", (dir / "train").string()}), 0);
    EXPECT_EQ(lines(dir / "out" / "sweep_gamma.csv").size(), 2u);
    EXPECT_EQ(read_file(dir / "train" / "metrics.csv"), read_file(dir / "out" / "sweep_gamma" / "gamma_0.4" / "metrics.csv"));
}

TEST(Ablate, FiveRowsAndReplays) {
    const fs::path dir = scratch_dir("ablate");
    Json doc = small_config_json(dir / "out");
    doc["train"]["epochs"] = 4;
    const fs::path cfg = write_config(dir, doc);
    ASSERT_EQ(cli({"ablate", "--config", cfg.string()}), 0);
    const auto rows = lines(dir / "out" / "ablation.csv");
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0], "variant,acc_rot20,acc_rot40,average");
    EXPECT_EQ(rows[1].substr(0, 5), "full,");

    ASSERT_EQ(cli({"train", "--config", cfg.string(), "--quiet", "--out", (dir / "solo").string()}), 0);
    EXPECT_EQ(read_file(dir / "solo" / "metrics.csv"), read_file(dir / "out" / "ablate" / "full" / "metrics.csv"));

    Json zero = doc;
    zero["train"]["lambda_aug"] = 0.0;
    zero["output_dir"] = (dir / "zero").string();
    train_and_write(config_from_json(zero), true);
    EXPECT_EQ(read_file(dir / "zero" / "metrics.csv"), read_file(dir / "out" / "ablate" / "no_aug_loss" / "metrics.csv"));
}

TEST(Files, AtomicWriteLeavesNoTemp) {
    const fs::path dir = scratch_dir("atomic");
    write_file_atomic(dir / "sub" / "f.txt", "hello");
    EXPECT_EQ(read_file(dir / "sub" / "f.txt"), "hello");
    EXPECT_FALSE(fs::exists(dir / "sub" / "f.txt.tmp"));
    EXPECT_EQ(format_real(0.1), "0.10000000000000001");
}
