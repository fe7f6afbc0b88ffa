#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "memo/config.hpp"
#include "memo/distill.hpp"
#include "memo/execute.hpp"
#include "memo/memscore.hpp"
#include "memo/proxies.hpp"
#include "memo/trajectory.hpp"

namespace memo::report {

// exit_code follows the CLI contract: 4 = missing artifacts, 5 = oracle
// refused the dataset size.
struct ReportError : std::runtime_error {
    int exit_code;
    ReportError(int code, const std::string& what) : std::runtime_error(what), exit_code(code) {}
};

// An experiment directory produced by `run`: canonical config, dataset
// files, manifest and the run artifacts.
struct Workspace {
    std::string dir;
    config::ExperimentConfig cfg;
    data::LabeledDataset dataset;
    ensemble::ExperimentPlan plan;
    std::vector<ensemble::RunArtifact> artifacts;
};

Workspace open_workspace(const std::string& out_dir);

// Estimator records for one ladder entry / loss kind, assembled from the
// stored correctness bits.
std::vector<memscore::MemRecord> mem_records(const Workspace& ws, int ladder_index,
                                             nn::LossKind kind);

// Per-example mem scores across the one-hot ladder (ladder order).
std::vector<std::vector<double>> mem_score_matrix(const Workspace& ws);

std::vector<analysis::TrajectoryRecord> trajectories(const Workspace& ws, double alpha);

// Full-dataset run helpers for the proxy reports.
nn::TrainedModel load_full_model(const Workspace& ws, int ladder_index);
std::vector<proxies::ProxyRecord> proxy_records(const Workspace& ws, int ladder_index);

// Every report writes versioned files (plan-hash prefix) under
// <dir>/reports and lists them in <dir>/reports/summary.json with content
// hashes. Existing files are never overwritten.
std::vector<std::string> report_mem(const Workspace& ws);
std::vector<std::string> report_cprox(const Workspace& ws);
std::vector<std::string> report_depth(const Workspace& ws);
std::vector<std::string> report_trajectory(const Workspace& ws, const std::vector<double>& alphas);
std::vector<std::string> report_distill(const Workspace& ws, double tau, double breakdown_alpha);
std::vector<std::string> report_robustness(const Workspace& ws);
std::vector<std::string> report_oracle(const Workspace& ws, int workers);

}  // namespace memo::report
