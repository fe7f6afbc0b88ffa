#include "memo/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "memo/artifacts.hpp"

namespace memo::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigParseError(path + ": " + what);
}

const json& need(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) fail(path + "." + key, "missing");
    return j.at(key);
}

double get_num(const json& j, const std::string& key, const std::string& path, double fallback,
               bool required = false) {
    if (!j.contains(key)) {
        if (required) fail(path + "." + key, "missing");
        return fallback;
    }
    if (!j.at(key).is_number()) fail(path + "." + key, "expected a number");
    return j.at(key).get<double>();
}

int get_int(const json& j, const std::string& key, const std::string& path, int fallback,
            bool required = false) {
    if (!j.contains(key)) {
        if (required) fail(path + "." + key, "missing");
        return fallback;
    }
    if (!j.at(key).is_number_integer()) fail(path + "." + key, "expected an integer");
    return j.at(key).get<int>();
}

uint64_t get_u64(const json& j, const std::string& key, const std::string& path,
                 uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_unsigned() && !j.at(key).is_number_integer())
        fail(path + "." + key, "expected an integer");
    return j.at(key).get<uint64_t>();
}

std::vector<int> get_int_list(const json& j, const std::string& key, const std::string& path) {
    std::vector<int> out;
    if (!j.contains(key)) return out;
    if (!j.at(key).is_array()) fail(path + "." + key, "expected an array");
    for (const auto& v : j.at(key)) {
        if (!v.is_number_integer()) fail(path + "." + key, "expected integers");
        out.push_back(v.get<int>());
    }
    return out;
}

nn::OptimizerConfig parse_optimizer(const json& j, const std::string& path) {
    nn::OptimizerConfig opt;
    opt.peak_lr = get_num(j, "peak_lr", path, 0.1);
    opt.warmup_epochs = get_int(j, "warmup_epochs", path, 0);
    const std::string sched = j.value("schedule", std::string("step"));
    if (sched == "step")
        opt.schedule = nn::Schedule::step;
    else if (sched == "cosine")
        opt.schedule = nn::Schedule::cosine;
    else
        fail(path + ".schedule", "expected \"step\" or \"cosine\"");
    opt.decay_factor = get_num(j, "decay_factor", path, 0.1);
    opt.decay_epochs = get_int_list(j, "decay_epochs", path);
    opt.momentum = get_num(j, "momentum", path, 0.9);
    opt.nesterov = j.value("nesterov", true);
    opt.weight_decay = get_num(j, "weight_decay", path, 0.0);
    opt.batch_size = get_int(j, "batch_size", path, 32);
    opt.epochs = get_int(j, "epochs", path, 0, true);
    try {
        nn::validate(opt);
    } catch (const nn::ConfigError& e) {
        fail(path, e.what());
    }
    return opt;
}

json optimizer_json(const nn::OptimizerConfig& opt) {
    json j;
    j["peak_lr"] = opt.peak_lr;
    j["warmup_epochs"] = opt.warmup_epochs;
    j["schedule"] = opt.schedule == nn::Schedule::step ? "step" : "cosine";
    if (opt.schedule == nn::Schedule::step) {
        j["decay_factor"] = opt.decay_factor;
        j["decay_epochs"] = opt.decay_epochs;
    }
    j["momentum"] = opt.momentum;
    j["nesterov"] = opt.nesterov;
    j["weight_decay"] = opt.weight_decay;
    j["batch_size"] = opt.batch_size;
    j["epochs"] = opt.epochs;
    return j;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    cfg.seed = get_u64(j, "seed", "", 0);

    {
        const json& d = need(j, "dataset", "");
        const json& g = need(d, "generator", "dataset");
        cfg.dataset.generator.kind = need(g, "kind", "dataset.generator").get<std::string>();
        const std::string& kind = cfg.dataset.generator.kind;
        if (kind == "toy2d") {
            auto& t = cfg.dataset.generator.toy;
            t.inner_radius = get_num(g, "inner_radius", "dataset.generator", t.inner_radius);
            t.outer_radius_min =
                get_num(g, "outer_radius_min", "dataset.generator", t.outer_radius_min);
            t.outer_radius_max =
                get_num(g, "outer_radius_max", "dataset.generator", t.outer_radius_max);
            t.n_inner = get_int(g, "n_inner", "dataset.generator", t.n_inner);
            t.n_outer = get_int(g, "n_outer", "dataset.generator", t.n_outer);
            t.n_outliers = get_int(g, "n_outliers", "dataset.generator", t.n_outliers);
            t.outlier_radius_frac =
                get_num(g, "outlier_radius_frac", "dataset.generator", t.outlier_radius_frac);
            t.seed = get_u64(g, "seed", "dataset.generator", 0);
        } else if (kind == "two_gaussians") {
            auto& t = cfg.dataset.generator.gauss;
            t.n = get_int(g, "n", "dataset.generator", t.n);
            t.separation = get_num(g, "separation", "dataset.generator", t.separation);
            t.sigma = get_num(g, "sigma", "dataset.generator", t.sigma);
            t.seed = get_u64(g, "seed", "dataset.generator", 0);
        } else if (kind == "csv") {
            cfg.dataset.generator.csv_path =
                need(g, "path", "dataset.generator").get<std::string>();
        } else {
            fail("dataset.generator.kind", "unknown generator \"" + kind + "\"");
        }
        cfg.dataset.noise_fraction = get_num(d, "noise_fraction", "dataset", 0.0);
        if (cfg.dataset.noise_fraction < 0.0 || cfg.dataset.noise_fraction > 1.0)
            fail("dataset.noise_fraction", "must be in [0,1]");
        cfg.dataset.noise_seed = get_u64(d, "noise_seed", "dataset", 0);
        if (d.contains("duplicates"))
            cfg.dataset.duplicate_ids = get_int_list(d.at("duplicates"), "ids", "dataset.duplicates");
    }

    {
        const json& s = need(j, "subsample", "");
        cfg.subsample.k = get_int(s, "k", "subsample", 400);
        cfg.subsample.m_fraction = get_num(s, "m_fraction", "subsample", 0.7);
        cfg.subsample.seed = get_u64(s, "seed", "subsample", 0);
        if (cfg.subsample.k < 1) fail("subsample.k", "must be >= 1");
        if (cfg.subsample.m_fraction <= 0.0 || cfg.subsample.m_fraction > 1.0)
            fail("subsample.m_fraction", "must be in (0,1]");
    }

    {
        const json& l = need(j, "ladder", "");
        if (!l.is_array() || l.empty()) fail("ladder", "expected a nonempty array");
        for (size_t i = 0; i < l.size(); ++i) {
            const std::string path = "ladder[" + std::to_string(i) + "]";
            LadderConfigEntry entry;
            entry.depth = get_int(l[i], "depth", path, 1);
            entry.width = get_int(l[i], "width", path, 8, true);
            if (entry.depth < 0) fail(path + ".depth", "must be >= 0");
            if (entry.width < 1 && entry.depth > 0) fail(path + ".width", "must be >= 1");
            entry.opt = parse_optimizer(need(l[i], "optimizer", path), path + ".optimizer");
            cfg.ladder.push_back(std::move(entry));
        }
    }

    if (j.contains("distill")) {
        const json& d = j.at("distill");
        DistillConfig dc;
        dc.teacher_index = get_int(d, "teacher_index", "distill", -1, true);
        dc.students = get_int_list(d, "students", "distill");
        dc.weight = get_num(d, "weight", "distill", 1.0);
        dc.temperature = get_num(d, "temperature", "distill", 1.0);
        if (dc.teacher_index < 0 || dc.teacher_index >= int(cfg.ladder.size()))
            fail("distill.teacher_index", "out of range");
        if (dc.weight < 0.0 || dc.weight > 1.0) fail("distill.weight", "must be in [0,1]");
        if (dc.temperature <= 0.0) fail("distill.temperature", "must be positive");
        cfg.distill = dc;
    }

    if (j.contains("reports")) {
        if (!j.at("reports").is_array()) fail("reports", "expected an array");
        for (const auto& r : j.at("reports")) cfg.reports.push_back(r.get<std::string>());
    }

    if (j.contains("oracle")) {
        const json& o = j.at("oracle");
        OracleBlock ob;
        ob.repeats = get_int(o, "repeats", "oracle", 20);
        ob.max_n = get_int(o, "max_n", "oracle", 512);
        if (ob.repeats < 1) fail("oracle.repeats", "must be >= 1");
        if (o.contains("targets") && o.at("targets").is_array()) {
            ob.all_targets = false;
            ob.targets = get_int_list(o, "targets", "oracle");
        }
        ob.ladder_indices = get_int_list(o, "ladder_indices", "oracle");
        cfg.oracle = ob;
    }

    if (j.contains("robustness")) {
        const json& r = j.at("robustness");
        RobustnessBlock rb;
        if (r.contains("example") && r.at("example").is_string()) {
            if (r.at("example").get<std::string>() != "first_outlier")
                fail("robustness.example", "expected an id or \"first_outlier\"");
            rb.first_outlier = true;
        } else {
            rb.example = get_int(r, "example", "robustness", -1, true);
        }
        if (!r.contains("sigmas") || !r.at("sigmas").is_array() || r.at("sigmas").empty())
            fail("robustness.sigmas", "expected a nonempty array");
        for (const auto& s : r.at("sigmas")) rb.sigmas.push_back(s.get<double>());
        rb.n_per_sigma = get_int(r, "n_per_sigma", "robustness", 500);
        if (rb.n_per_sigma < 1) fail("robustness.n_per_sigma", "must be >= 1");
        rb.ladder_indices = get_int_list(r, "ladder_indices", "robustness");
        cfg.robustness = rb;
    }

    if (j.contains("exclusions")) {
        if (!j.at("exclusions").is_array()) fail("exclusions", "expected an array");
        size_t i = 0;
        for (const auto& e : j.at("exclusions")) {
            const std::string path = "exclusions[" + std::to_string(i++) + "]";
            ExclusionConfig ec;
            ec.name = need(e, "name", path).get<std::string>();
            ec.ids = get_int_list(e, "ids", path);
            if (ec.ids.empty()) fail(path + ".ids", "expected a nonempty array");
            ec.ladder_indices = get_int_list(e, "ladder_indices", path);
            cfg.exclusions.push_back(std::move(ec));
        }
    }

    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigParseError("cannot open config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigParseError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

nlohmann::json canonical_json(const ExperimentConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;

    json g;
    g["kind"] = cfg.dataset.generator.kind;
    if (cfg.dataset.generator.kind == "toy2d") {
        const auto& t = cfg.dataset.generator.toy;
        g["inner_radius"] = t.inner_radius;
        g["outer_radius_min"] = t.outer_radius_min;
        g["outer_radius_max"] = t.outer_radius_max;
        g["n_inner"] = t.n_inner;
        g["n_outer"] = t.n_outer;
        g["n_outliers"] = t.n_outliers;
        g["outlier_radius_frac"] = t.outlier_radius_frac;
        g["seed"] = t.seed;
    } else if (cfg.dataset.generator.kind == "two_gaussians") {
        const auto& t = cfg.dataset.generator.gauss;
        g["n"] = t.n;
        g["separation"] = t.separation;
        g["sigma"] = t.sigma;
        g["seed"] = t.seed;
    } else {
        g["path"] = cfg.dataset.generator.csv_path;
    }
    j["dataset"]["generator"] = g;
    j["dataset"]["noise_fraction"] = cfg.dataset.noise_fraction;
    j["dataset"]["noise_seed"] = cfg.dataset.noise_seed;
    if (!cfg.dataset.duplicate_ids.empty())
        j["dataset"]["duplicates"]["ids"] = cfg.dataset.duplicate_ids;

    j["subsample"]["k"] = cfg.subsample.k;
    j["subsample"]["m_fraction"] = cfg.subsample.m_fraction;
    j["subsample"]["seed"] = cfg.subsample.seed;

    json ladder = json::array();
    for (const auto& e : cfg.ladder) {
        json entry;
        entry["depth"] = e.depth;
        entry["width"] = e.width;
        entry["optimizer"] = optimizer_json(e.opt);
        ladder.push_back(entry);
    }
    j["ladder"] = ladder;

    if (cfg.distill) {
        j["distill"]["teacher_index"] = cfg.distill->teacher_index;
        if (!cfg.distill->students.empty()) j["distill"]["students"] = cfg.distill->students;
        j["distill"]["weight"] = cfg.distill->weight;
        j["distill"]["temperature"] = cfg.distill->temperature;
    }
    if (!cfg.reports.empty()) j["reports"] = cfg.reports;
    if (cfg.oracle) {
        j["oracle"]["repeats"] = cfg.oracle->repeats;
        j["oracle"]["max_n"] = cfg.oracle->max_n;
        if (!cfg.oracle->all_targets) j["oracle"]["targets"] = cfg.oracle->targets;
        if (!cfg.oracle->ladder_indices.empty())
            j["oracle"]["ladder_indices"] = cfg.oracle->ladder_indices;
    }
    if (cfg.robustness) {
        if (cfg.robustness->first_outlier)
            j["robustness"]["example"] = "first_outlier";
        else
            j["robustness"]["example"] = cfg.robustness->example;
        j["robustness"]["sigmas"] = cfg.robustness->sigmas;
        j["robustness"]["n_per_sigma"] = cfg.robustness->n_per_sigma;
        if (!cfg.robustness->ladder_indices.empty())
            j["robustness"]["ladder_indices"] = cfg.robustness->ladder_indices;
    }
    if (!cfg.exclusions.empty()) {
        json ex = json::array();
        for (const auto& e : cfg.exclusions) {
            json je;
            je["name"] = e.name;
            je["ids"] = e.ids;
            if (!e.ladder_indices.empty()) je["ladder_indices"] = e.ladder_indices;
            ex.push_back(je);
        }
        j["exclusions"] = ex;
    }
    return j;
}

std::string plan_hash(const ExperimentConfig& cfg) {
    const std::string canon = canonical_json(cfg).dump();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(ensemble::fnv1a64(canon.data(), canon.size())));
    return buf;
}

data::LabeledDataset build_dataset(const DatasetConfig& cfg) {
    data::LabeledDataset d;
    if (cfg.generator.kind == "toy2d")
        d = data::generate_toy2d(cfg.generator.toy);
    else if (cfg.generator.kind == "two_gaussians")
        d = data::generate_two_gaussians(cfg.generator.gauss);
    else
        d = data::load_csv(cfg.generator.csv_path);
    if (cfg.noise_fraction > 0.0) d = data::inject_label_noise(d, cfg.noise_fraction, cfg.noise_seed);
    if (!cfg.duplicate_ids.empty()) {
        for (int id : cfg.duplicate_ids)
            if (id >= 0 && id < d.size() && d.noise_flag[size_t(id)])
                throw ConfigParseError("dataset.duplicates.ids: example " + std::to_string(id) +
                                       " was flipped by label noise; duplicates must be clean");
        d = data::append_duplicates(d, cfg.duplicate_ids);
    }
    return d;
}

ensemble::ExperimentPlan build_plan(const ExperimentConfig& cfg,
                                    const data::LabeledDataset& dataset) {
    ensemble::ExperimentPlan plan;
    plan.dataset = dataset;
    plan.seed = cfg.seed;
    plan.plan_hash = plan_hash(cfg);

    const int n = dataset.size();
    const int m = int(std::ceil(cfg.subsample.m_fraction * n));
    if (m >= n && cfg.subsample.k > 0) {
        // M=N leaves K_out empty for every example; refuse up front when the
        // plan is meant for estimation
        if (cfg.subsample.m_fraction >= 1.0)
            throw ConfigParseError("subsample.m_fraction: M = N leaves every out-sample empty");
    }
    plan.subsample = ensemble::draw_subsamples(n, std::min(m, n), cfg.subsample.k,
                                               cfg.subsample.seed);

    for (const auto& e : cfg.ladder) {
        ensemble::LadderEntry entry;
        entry.spec.input_dim = dataset.feature_dim;
        entry.spec.num_classes = dataset.num_classes;
        entry.spec.widths.assign(size_t(e.depth), e.width);
        entry.spec.init_seed = cfg.seed;
        entry.opt = e.opt;
        plan.ladder.push_back(std::move(entry));
    }

    if (cfg.distill) {
        ensemble::DistillBlock db;
        db.teacher_index = cfg.distill->teacher_index;
        db.students = cfg.distill->students;
        db.weight = cfg.distill->weight;
        db.temperature = cfg.distill->temperature;
        plan.distill = db;
    }
    for (const auto& e : cfg.exclusions) {
        ensemble::ExclusionSet set;
        set.name = e.name;
        set.ids = e.ids;
        set.ladder_indices = e.ladder_indices;
        plan.exclusions.push_back(std::move(set));
    }
    ensemble::validate(plan);
    return plan;
}

}  // namespace memo::config
