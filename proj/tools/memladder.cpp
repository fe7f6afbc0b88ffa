// memladder: estimate per-example memorisation of small classifiers across
// a ladder of model sizes, with an exact leave-one-out oracle for tiny
// datasets.
//
// Subcommands:
//   run       execute every training run of an experiment config
//   report    emit CSV/JSON reports from a completed run directory
//   oracle    brute-force leave-one-out scores plus estimator comparison
//   validate  parse a config and print its canonical form
//
// Exit codes: 0 ok, 2 invalid config, 3 resume mismatch, 4 missing
// artifacts, 5 oracle refused dataset size.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

#include <CLI11.hpp>
#include <json.hpp>

#include "memo/artifacts.hpp"
#include "memo/config.hpp"
#include "memo/reports.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, int workers,
            bool resume) {
    memo::config::ExperimentConfig cfg;
    try {
        cfg = memo::config::load_config(config_path);
    } catch (const memo::config::ConfigParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    fs::create_directories(out_dir);
    const fs::path cfg_out = fs::path(out_dir) / "config.json";
    {
        std::ofstream out(cfg_out);
        out << memo::config::canonical_json(cfg).dump(2) << "\n";
    }

    memo::data::LabeledDataset dataset;
    memo::ensemble::ExperimentPlan plan;
    try {
        dataset = memo::config::build_dataset(cfg.dataset);
        plan = memo::config::build_plan(cfg, dataset);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    memo::data::save_csv(dataset, (fs::path(out_dir) / "dataset.csv").string());
    memo::data::save_sidecar(dataset, (fs::path(out_dir) / "dataset_meta.json").string());

    memo::ensemble::ExecuteOptions options;
    options.workers = workers;
    options.resume = resume;
    std::mutex io;
    int done = 0;
    options.progress = [&](const std::string& run_id) {
        std::lock_guard<std::mutex> lock(io);
        ++done;
        if (done % 25 == 0) std::cerr << "  " << done << " runs done (last: " << run_id << ")\n";
    };

    std::vector<memo::ensemble::RunArtifact> artifacts;
    try {
        artifacts = memo::ensemble::execute(plan, out_dir, options);
    } catch (const memo::ensemble::PlanError& e) {
        std::cerr << "resume error: " << e.what() << "\n";
        return 3;
    }

    json summary;
    summary["plan_hash"] = plan.plan_hash;
    int failed = 0, pending = 0;
    json failed_runs = json::array();
    for (const auto& a : artifacts) {
        if (a.status == memo::ensemble::RunStatus::failed) {
            ++failed;
            failed_runs.push_back(a.def.run_id);
        }
        if (a.status == memo::ensemble::RunStatus::pending) ++pending;
    }
    summary["runs"] = artifacts.size();
    summary["failed"] = failed;
    summary["pending"] = pending;
    summary["failed_runs"] = failed_runs;
    json files = json::object();
    for (const char* name : {"config.json", "dataset.csv", "dataset_meta.json", "manifest.json"})
        files[name] = memo::ensemble::content_hash_hex((fs::path(out_dir) / name).string());
    for (const auto& a : artifacts) {
        if (a.status != memo::ensemble::RunStatus::done) continue;
        for (const char* f : {"correctness.bin", "trace.jsonl", "params.bin"})
            files["runs/" + a.def.run_id + "/" + f] =
                memo::ensemble::content_hash_hex((fs::path(a.dir) / f).string());
    }
    summary["files"] = files;
    {
        std::ofstream out(fs::path(out_dir) / "summary.json");
        out << summary.dump(2) << "\n";
    }

    std::cerr << "runs: " << artifacts.size() << ", failed: " << failed
              << ", pending: " << pending << "\n";
    return (failed == 0 && pending == 0) ? 0 : 1;
}

int cmd_report(const std::string& out_dir, const std::string& kind, std::vector<double> alphas,
               double tau, int workers) {
    try {
        const auto ws = memo::report::open_workspace(out_dir);
        if (alphas.empty()) alphas = {0.05, 0.10};
        std::vector<std::string> files;
        if (kind == "mem")
            files = memo::report::report_mem(ws);
        else if (kind == "cprox")
            files = memo::report::report_cprox(ws);
        else if (kind == "depth")
            files = memo::report::report_depth(ws);
        else if (kind == "trajectory")
            files = memo::report::report_trajectory(ws, alphas);
        else if (kind == "distill")
            files = memo::report::report_distill(ws, tau, alphas.back());
        else if (kind == "robustness")
            files = memo::report::report_robustness(ws);
        else if (kind == "oracle")
            files = memo::report::report_oracle(ws, workers);
        else {
            std::cerr << "unknown report kind \"" << kind << "\"\n";
            return 2;
        }
        for (const auto& f : files) std::cout << f << "\n";
        return 0;
    } catch (const memo::report::ReportError& e) {
        std::cerr << "report error: " << e.what() << "\n";
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "report error: " << e.what() << "\n";
        return 4;
    }
}

int cmd_oracle(const std::string& config_path, const std::string& out_dir, int workers) {
    // convenience wrapper: the oracle consumes a completed run directory so
    // it can report estimator-vs-oracle MAE alongside the exact scores
    (void)config_path;
    return cmd_report(out_dir, "oracle", {}, 0.1, workers);
}

int cmd_validate(const std::string& config_path) {
    try {
        const auto cfg = memo::config::load_config(config_path);
        std::cout << memo::config::canonical_json(cfg).dump(2) << "\n";
        std::cerr << "plan hash: " << memo::config::plan_hash(cfg) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"per-example memorisation across a model-size ladder"};
    app.require_subcommand(1);

    std::string config_path, out_dir, kind;
    int workers = 1;
    bool resume = false;
    std::vector<double> alphas;
    double tau = 0.1;

    auto* run = app.add_subcommand("run", "execute an experiment");
    run->add_option("--config", config_path, "experiment config JSON")->required();
    run->add_option("--out", out_dir, "artifact directory")->required();
    run->add_option("--workers", workers, "worker threads");
    run->add_flag("--resume", resume, "continue into an existing artifact directory");

    auto* report = app.add_subcommand("report", "emit reports from a run directory");
    report->add_option("--out", out_dir, "artifact directory")->required();
    report->add_option("--kind", kind, "mem|cprox|depth|trajectory|distill|robustness|oracle")
        ->required();
    report->add_option("--alpha", alphas, "trajectory deadband (repeatable)");
    report->add_option("--tau", tau, "distillation reduction threshold");
    report->add_option("--workers", workers, "worker threads (oracle)");

    auto* oracle = app.add_subcommand("oracle", "exact leave-one-out scores");
    oracle->add_option("--config", config_path, "experiment config JSON");
    oracle->add_option("--out", out_dir, "artifact directory")->required();
    oracle->add_option("--workers", workers, "worker threads");

    auto* validate = app.add_subcommand("validate", "check a config and print canonical form");
    validate->add_option("--config", config_path, "experiment config JSON")->required();

    CLI11_PARSE(app, argc, argv);

    // environment overrides for out dir and worker count only
    if (const char* env = std::getenv("MEMLADDER_OUT")) out_dir = env;
    if (const char* env = std::getenv("MEMLADDER_WORKERS")) workers = std::atoi(env);

    if (run->parsed()) return cmd_run(config_path, out_dir, workers, resume);
    if (report->parsed()) return cmd_report(out_dir, kind, alphas, tau, workers);
    if (oracle->parsed()) return cmd_oracle(config_path, out_dir, workers);
    if (validate->parsed()) return cmd_validate(config_path);
    return 2;
}
