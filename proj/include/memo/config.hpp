#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "memo/data.hpp"
#include "memo/execute.hpp"
#include "memo/nn.hpp"

namespace memo::config {

// Carries the offending field path, e.g. "ladder[2].optimizer.peak_lr".
struct ConfigParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeneratorConfig {
    std::string kind;  // "toy2d" | "two_gaussians" | "csv"
    data::Toy2DParams toy;
    data::TwoGaussiansParams gauss;
    std::string csv_path;
};

struct DatasetConfig {
    GeneratorConfig generator;
    double noise_fraction = 0.0;
    uint64_t noise_seed = 0;
    std::vector<int> duplicate_ids;  // appended after noise injection
};

struct SubsampleConfig {
    int k = 400;               // paper protocol defaults
    double m_fraction = 0.7;
    uint64_t seed = 0;
};

struct LadderConfigEntry {
    int depth = 1;
    int width = 8;
    nn::OptimizerConfig opt;
};

struct DistillConfig {
    int teacher_index = -1;
    std::vector<int> students;  // empty = every entry
    double weight = 1.0;
    double temperature = 1.0;
};

struct OracleBlock {
    int repeats = 20;
    int max_n = 512;
    bool all_targets = true;
    std::vector<int> targets;
    std::vector<int> ladder_indices;  // empty = every entry
};

struct RobustnessBlock {
    int example = -1;          // explicit example id, or
    bool first_outlier = false;  // the first toy2d outlier
    std::vector<double> sigmas;
    int n_per_sigma = 500;
    std::vector<int> ladder_indices;  // empty = smallest and largest
};

struct ExclusionConfig {
    std::string name;
    std::vector<int> ids;
    std::vector<int> ladder_indices;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    SubsampleConfig subsample;
    std::vector<LadderConfigEntry> ladder;
    std::optional<DistillConfig> distill;
    std::vector<std::string> reports;
    std::optional<OracleBlock> oracle;
    std::optional<RobustnessBlock> robustness;
    std::vector<ExclusionConfig> exclusions;
    uint64_t seed = 0;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Canonical form: every field materialised, keys sorted. parse(canonical)
// is a fixed point.
nlohmann::json canonical_json(const ExperimentConfig& cfg);
std::string plan_hash(const ExperimentConfig& cfg);

data::LabeledDataset build_dataset(const DatasetConfig& cfg);
ensemble::ExperimentPlan build_plan(const ExperimentConfig& cfg,
                                    const data::LabeledDataset& dataset);

}  // namespace memo::config
