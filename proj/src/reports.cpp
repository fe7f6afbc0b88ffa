#include "memo/reports.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "memo/artifacts.hpp"
#include "memo/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace memo::report {

namespace {

std::string hash8(const std::string& full) { return full.substr(0, 8); }

fs::path reports_dir(const Workspace& ws) {
    const fs::path d = fs::path(ws.dir) / "reports";
    fs::create_directories(d);
    return d;
}

// never overwrite: identical plan hash means identical content
void write_text(const fs::path& path, const std::string& text) {
    if (fs::exists(path)) return;
    std::ofstream out(path);
    out << text;
}

void add_to_summary(const Workspace& ws, const std::vector<std::string>& files) {
    const fs::path path = reports_dir(ws) / "summary.json";
    json summary;
    if (fs::exists(path)) {
        std::ifstream in(path);
        summary = json::parse(in);
    } else {
        summary["plan_hash"] = ws.plan.plan_hash;
        summary["files"] = json::object();
    }
    for (const auto& f : files)
        summary["files"][fs::path(f).filename().string()] = ensemble::content_hash_hex(f);
    std::ofstream out(path);
    out << summary.dump(2) << "\n";
}

json histogram_json(const analysis::HistogramReport& h) {
    json j;
    j["lo"] = h.lo;
    j["hi"] = h.hi;
    j["counts"] = h.counts;
    j["clamped"] = h.clamped;
    j["total"] = h.total;
    j["extreme_mass"] = h.extreme_mass();
    return j;
}

json census_json(const std::array<double, 5>& fractions) {
    json j;
    for (size_t c = 0; c < 5; ++c)
        j[analysis::category_name(analysis::Category(c))] = fractions[c];
    return j;
}

const ensemble::RunArtifact* find_run(const Workspace& ws, const std::string& run_id) {
    for (const auto& a : ws.artifacts)
        if (a.def.run_id == run_id) return &a;
    return nullptr;
}

void require_done(const Workspace& ws, const std::string& run_id) {
    const auto* run = find_run(ws, run_id);
    if (!run || run->status != ensemble::RunStatus::done)
        throw ReportError(4, "missing artifact for run " + run_id);
}

}  // namespace

Workspace open_workspace(const std::string& out_dir) {
    Workspace ws;
    ws.dir = out_dir;
    const fs::path cfg_path = fs::path(out_dir) / "config.json";
    if (!fs::exists(cfg_path))
        throw ReportError(4, "no config.json in " + out_dir + "; run the experiment first");
    ws.cfg = config::load_config(cfg_path.string());

    const fs::path csv = fs::path(out_dir) / "dataset.csv";
    if (fs::exists(csv)) {
        ws.dataset = data::load_csv(csv.string());
        data::load_sidecar(ws.dataset, (fs::path(out_dir) / "dataset_meta.json").string());
    } else {
        ws.dataset = config::build_dataset(ws.cfg.dataset);
    }
    ws.plan = config::build_plan(ws.cfg, ws.dataset);
    ws.artifacts = ensemble::scan_runs(ws.plan, out_dir);
    return ws;
}

std::vector<memscore::MemRecord> mem_records(const Workspace& ws, int ladder_index,
                                             nn::LossKind kind) {
    for (const auto& a : ws.artifacts)
        if (a.def.ladder_index == ladder_index && a.def.loss_kind == kind &&
            a.def.subsample_index >= 0 && a.status == ensemble::RunStatus::pending)
            throw ReportError(4, "missing artifact for run " + a.def.run_id);
    const auto matrix = ensemble::correctness_matrix(ws.artifacts, ladder_index, kind);
    return memscore::estimate_mem(matrix, ws.plan.subsample);
}

std::vector<std::vector<double>> mem_score_matrix(const Workspace& ws) {
    std::vector<std::vector<double>> scores(size_t(ws.dataset.size()));
    std::vector<bool> all_valid(size_t(ws.dataset.size()), true);
    for (int l = 0; l < int(ws.plan.ladder.size()); ++l) {
        const auto records = mem_records(ws, l, nn::LossKind::one_hot);
        for (const auto& r : records) {
            scores[size_t(r.example_id)].push_back(r.mem);
            if (!r.valid) all_valid[size_t(r.example_id)] = false;
        }
    }
    // examples invalid at any ladder entry get an empty trajectory rather
    // than a silently zeroed score
    for (size_t i = 0; i < scores.size(); ++i)
        if (!all_valid[i]) scores[i].clear();
    return scores;
}

std::vector<analysis::TrajectoryRecord> trajectories(const Workspace& ws, double alpha) {
    const auto scores = mem_score_matrix(ws);
    std::vector<analysis::TrajectoryRecord> out;
    out.reserve(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].empty()) continue;
        analysis::TrajectoryRecord t;
        t.example_id = int(i);
        t.scores = scores[i];
        t.alpha = alpha;
        t.category = analysis::classify_trajectory(t.scores, alpha);
        out.push_back(std::move(t));
    }
    return out;
}

nn::TrainedModel load_full_model(const Workspace& ws, int ladder_index) {
    const std::string run_id = "full_l" + std::to_string(ladder_index) + "_onehot";
    require_done(ws, run_id);
    const fs::path dir = fs::path(ws.dir) / "runs" / run_id;
    nn::TrainedModel model;
    ensemble::read_params((dir / "params.bin").string(), model.spec, model.params);
    model.trace = ensemble::read_trace((dir / "trace.jsonl").string());
    return model;
}

std::vector<proxies::ProxyRecord> proxy_records(const Workspace& ws, int ladder_index) {
    const nn::TrainedModel model = load_full_model(ws, ladder_index);
    const auto cp = proxies::cprox_all(model.trace);
    const auto probes =
        proxies::train_probes(model, ws.dataset, mix_seed(ws.plan.seed, "probes"));
    const Mat x = ws.dataset.feature_matrix();
    const auto preds = proxies::probe_predictions(probes, model, x);
    std::vector<proxies::ProxyRecord> records(size_t(ws.dataset.size()));
    for (int i = 0; i < ws.dataset.size(); ++i) {
        records[size_t(i)].example_id = i;
        records[size_t(i)].cprox = cp[size_t(i)];
        records[size_t(i)].pred_depth = proxies::prediction_depth(preds, i);
    }
    return records;
}

std::vector<std::string> report_mem(const Workspace& ws) {
    const fs::path dir = reports_dir(ws);
    const std::string prefix = hash8(ws.plan.plan_hash);
    std::vector<std::string> files;
    for (int l = 0; l < int(ws.plan.ladder.size()); ++l) {
        const auto records = mem_records(ws, l, nn::LossKind::one_hot);
        const fs::path csv = dir / (prefix + "_mem_l" + std::to_string(l) + ".csv");
        if (!fs::exists(csv)) memscore::write_records_csv(records, csv.string());
        files.push_back(csv.string());

        std::vector<double> mems;
        for (const auto& r : records)
            if (r.valid) mems.push_back(r.mem);
        const auto hist = analysis::histogram(mems, 0.0, 1.0);
        const auto d = memscore::avg_decomposition(records);
        json j;
        j["ladder_index"] = l;
        j["histogram"] = histogram_json(hist);
        j["mean_in_acc"] = d.mean_in;
        j["mean_out_acc"] = d.mean_out;
        j["mean_mem"] = d.mean_mem;
        j["n_valid"] = d.n_valid;
        j["n_invalid"] = d.n_invalid;
        const fs::path hj = dir / (prefix + "_mem_hist_l" + std::to_string(l) + ".json");
        write_text(hj, j.dump(2) + "\n");
        files.push_back(hj.string());
    }
    add_to_summary(ws, files);
    return files;
}

namespace {

std::vector<std::string> proxy_report(const Workspace& ws, bool as_cprox) {
    const fs::path dir = reports_dir(ws);
    const std::string prefix = hash8(ws.plan.plan_hash);
    std::vector<std::string> files;
    for (int l = 0; l < int(ws.plan.ladder.size()); ++l) {
        const auto records = proxy_records(ws, l);
        const fs::path csv = dir / (prefix + "_proxies_l" + std::to_string(l) + ".csv");
        if (!fs::exists(csv)) proxies::write_proxy_csv(records, csv.string());
        files.push_back(csv.string());

        json j;
        j["ladder_index"] = l;
        if (as_cprox) {
            std::vector<double> one_minus;
            for (const auto& r : records) one_minus.push_back(1.0 - r.cprox);
            j["histogram_one_minus_cprox"] = histogram_json(analysis::histogram(one_minus, 0.0, 1.0));
            const fs::path hj = dir / (prefix + "_cprox_hist_l" + std::to_string(l) + ".json");
            write_text(hj, j.dump(2) + "\n");
            files.push_back(hj.string());
        } else {
            std::vector<double> depths;
            for (const auto& r : records) depths.push_back(double(r.pred_depth));
            const int probe_points = int(ws.plan.ladder[size_t(l)].spec.widths.size()) + 1;
            j["probe_points"] = probe_points;
            j["histogram_depth"] =
                histogram_json(analysis::histogram(depths, 0.0, double(probe_points - 1 > 0 ? probe_points - 1 : 1)));
            const fs::path hj = dir / (prefix + "_depth_hist_l" + std::to_string(l) + ".json");
            write_text(hj, j.dump(2) + "\n");
            files.push_back(hj.string());
        }
    }
    add_to_summary(ws, files);
    return files;
}

}  // namespace

std::vector<std::string> report_cprox(const Workspace& ws) { return proxy_report(ws, true); }
std::vector<std::string> report_depth(const Workspace& ws) { return proxy_report(ws, false); }

std::vector<std::string> report_trajectory(const Workspace& ws,
                                           const std::vector<double>& alphas) {
    const fs::path dir = reports_dir(ws);
    const std::string prefix = hash8(ws.plan.plan_hash);
    std::vector<std::string> files;
    for (double alpha : alphas) {
        const auto recs = trajectories(ws, alpha);
        char tag[32];
        std::snprintf(tag, sizeof tag, "a%.2f", alpha);
        const fs::path csv = dir / (prefix + "_trajectory_" + tag + ".csv");
        if (!fs::exists(csv)) analysis::write_trajectory_csv(recs, csv.string());
        files.push_back(csv.string());

        json j;
        j["alpha"] = alpha;
        j["count"] = recs.size();
        j["fractions"] = census_json(analysis::category_census(recs));
        const fs::path cj = dir / (prefix + "_census_" + tag + ".json");
        write_text(cj, j.dump(2) + "\n");
        files.push_back(cj.string());
    }
    add_to_summary(ws, files);
    return files;
}

std::vector<std::string> report_distill(const Workspace& ws, double tau, double breakdown_alpha) {
    if (!ws.plan.distill)
        throw ReportError(4, "experiment has no distill block; nothing to compare");
    const fs::path dir = reports_dir(ws);
    const std::string prefix = hash8(ws.plan.plan_hash);
    std::vector<std::string> files;

    std::vector<int> students = ws.plan.distill->students;
    if (students.empty())
        for (int l = 0; l < int(ws.plan.ladder.size()); ++l) students.push_back(l);

    const auto trajs = trajectories(ws, breakdown_alpha);
    for (int l : students) {
        const auto onehot = mem_records(ws, l, nn::LossKind::one_hot);
        const auto distilled = mem_records(ws, l, nn::LossKind::distill);
        const auto cmp = analysis::compare(onehot, distilled, tau);
        const fs::path csv = dir / (prefix + "_distill_l" + std::to_string(l) + ".csv");
        if (!fs::exists(csv)) analysis::write_comparison_csv(cmp, csv.string());
        files.push_back(csv.string());

        const auto breakdown = analysis::reduction_breakdown(cmp, trajs);
        const auto acc = analysis::accuracy_decomposition_delta(onehot, distilled);
        const auto joint = analysis::joint_histogram(cmp);
        json j;
        j["student_index"] = l;
        j["teacher_index"] = ws.plan.distill->teacher_index;
        j["tau"] = tau;
        j["breakdown_alpha"] = breakdown_alpha;
        j["paired_examples"] = cmp.deltas.size();
        j["reduced_count"] = breakdown.reduced_count;
        j["reduced_empty"] = breakdown.reduced_empty;
        j["reduced_fractions"] = census_json(breakdown.reduced);
        j["baseline_fractions"] = census_json(breakdown.baseline);
        j["delta_mean_in_acc"] = acc.d_in;
        j["delta_mean_out_acc"] = acc.d_out;
        j["delta_mean_mem"] = acc.d_mem;
        json rows = json::array();
        for (const auto& row : joint.counts) rows.push_back(row);
        j["joint_histogram"] = rows;
        j["joint_total"] = joint.total;
        const fs::path sj = dir / (prefix + "_distill_summary_l" + std::to_string(l) + ".json");
        write_text(sj, j.dump(2) + "\n");
        files.push_back(sj.string());
    }
    add_to_summary(ws, files);
    return files;
}

std::vector<std::string> report_robustness(const Workspace& ws) {
    if (!ws.cfg.robustness)
        throw ReportError(4, "experiment has no robustness block");
    const auto& rb = *ws.cfg.robustness;
    int example = rb.example;
    if (rb.first_outlier) {
        if (ws.dataset.outlier_ids.empty())
            throw ReportError(4, "robustness: dataset has no outliers");
        example = ws.dataset.outlier_ids[0];
    }
    if (example < 0 || example >= ws.dataset.size())
        throw ReportError(4, "robustness: example id out of range");

    std::vector<int> indices = rb.ladder_indices;
    if (indices.empty()) {
        indices.push_back(0);
        indices.push_back(int(ws.plan.ladder.size()) - 1);
    }

    std::vector<double> x(size_t(ws.dataset.feature_dim));
    for (int j = 0; j < ws.dataset.feature_dim; ++j) x[size_t(j)] = double(ws.dataset.row(example)[j]);
    const int label = ws.dataset.labels[size_t(example)];

    json j;
    j["example_id"] = example;
    j["label"] = label;
    j["sigmas"] = rb.sigmas;
    j["n_per_sigma"] = rb.n_per_sigma;
    json curves = json::object();
    for (int l : indices) {
        const nn::TrainedModel model = load_full_model(ws, l);
        const auto acc = analysis::robustness_probe(model.spec, model.params, x, label, rb.sigmas,
                                                    rb.n_per_sigma,
                                                    mix_seed(ws.plan.seed, "robustness"));
        curves["l" + std::to_string(l)] = acc;
    }
    j["accuracy"] = curves;

    const fs::path dir = reports_dir(ws);
    const fs::path out = dir / (hash8(ws.plan.plan_hash) + "_robustness.json");
    write_text(out, j.dump(2) + "\n");
    add_to_summary(ws, {out.string()});
    return {out.string()};
}

std::vector<std::string> report_oracle(const Workspace& ws, int workers) {
    if (!ws.cfg.oracle) throw ReportError(4, "experiment has no oracle block");
    const auto& ob = *ws.cfg.oracle;
    if (ws.dataset.size() > ob.max_n)
        throw ReportError(5, "oracle: dataset size " + std::to_string(ws.dataset.size()) +
                                 " exceeds max_n " + std::to_string(ob.max_n));

    std::vector<int> targets = ob.targets;
    if (ob.all_targets) {
        targets.resize(size_t(ws.dataset.size()));
        for (int i = 0; i < ws.dataset.size(); ++i) targets[size_t(i)] = i;
    }
    std::vector<int> indices = ob.ladder_indices;
    if (indices.empty())
        for (int l = 0; l < int(ws.plan.ladder.size()); ++l) indices.push_back(l);

    memscore::OracleConfig oc;
    oc.repeats = ob.repeats;
    oc.max_n = ob.max_n;

    const fs::path dir = reports_dir(ws);
    const std::string prefix = hash8(ws.plan.plan_hash);
    std::vector<std::string> files;
    for (int l : indices) {
        const auto& entry = ws.plan.ladder[size_t(l)];
        nn::ModelSpec spec = entry.spec;
        const auto records = memscore::exact_mem_oracle(
            spec, entry.opt, ws.dataset, targets, oc, mix_seed(ws.plan.seed, "oracle"), workers);

        const fs::path csv = dir / (prefix + "_oracle_l" + std::to_string(l) + ".csv");
        if (!fs::exists(csv)) {
            std::ofstream out(csv);
            out << "example_id,in_acc,out_acc,mem,half_width\n";
            char buf[128];
            for (const auto& r : records) {
                std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g\n", r.example_id, r.in_acc,
                              r.out_acc, r.mem, r.half_width);
                out << buf;
            }
        }
        files.push_back(csv.string());

        // estimator-vs-oracle MAE over the targeted examples
        const auto est = mem_records(ws, l, nn::LossKind::one_hot);
        double mae = 0.0;
        int n = 0;
        for (const auto& r : records) {
            const auto& e = est[size_t(r.example_id)];
            if (!e.valid) continue;
            mae += std::abs(e.mem - r.mem);
            ++n;
        }
        json j;
        j["ladder_index"] = l;
        j["targets"] = targets.size();
        j["repeats"] = ob.repeats;
        j["mae"] = n > 0 ? mae / n : 0.0;
        j["compared"] = n;
        const fs::path sj = dir / (prefix + "_oracle_summary_l" + std::to_string(l) + ".json");
        write_text(sj, j.dump(2) + "\n");
        files.push_back(sj.string());
    }
    add_to_summary(ws, files);
    return files;
}

}  // namespace memo::report
