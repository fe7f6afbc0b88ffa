#include "memo/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "memo/rng.hpp"

namespace memo::data {

Mat LabeledDataset::feature_matrix() const {
    Mat m(size(), feature_dim);
    for (size_t i = 0; i < features.size(); ++i) m.v[i] = double(features[i]);
    return m;
}

Mat LabeledDataset::feature_matrix(const std::vector<int>& ids) const {
    Mat m(int(ids.size()), feature_dim);
    for (size_t i = 0; i < ids.size(); ++i) {
        const float* src = row(ids[i]);
        for (int j = 0; j < feature_dim; ++j) m.at(int(i), j) = double(src[j]);
    }
    return m;
}

namespace {

void push_point(LabeledDataset& d, double x, double y, int label) {
    d.features.push_back(float(x));
    d.features.push_back(float(y));
    d.labels.push_back(label);
    d.noise_flag.push_back(0);
    d.original_labels.push_back(label);
}

}  // namespace

LabeledDataset generate_toy2d(const Toy2DParams& p) {
    if (p.inner_radius <= 0.0 || p.outer_radius_min <= p.inner_radius ||
        p.outer_radius_max < p.outer_radius_min)
        throw DataError("toy2d: radii must satisfy 0 < inner < outer_min <= outer_max");
    if (p.n_inner < 0 || p.n_outer < 0 || p.n_outliers < 0)
        throw DataError("toy2d: counts must be >= 0");
    if (p.outlier_radius_frac <= 0.0 || p.outlier_radius_frac >= 1.0)
        throw DataError("toy2d: outlier_radius_frac must be in (0,1)");

    Rng rng(mix_seed(p.seed, "toy2d"));
    LabeledDataset d;
    d.num_classes = 2;
    d.feature_dim = 2;
    d.generator = "toy2d";

    auto disc_point = [&](double radius) {
        const double r = radius * std::sqrt(rng.uniform());
        const double a = 2.0 * 3.14159265358979323846 * rng.uniform();
        return std::pair<double, double>{r * std::cos(a), r * std::sin(a)};
    };

    for (int i = 0; i < p.n_inner; ++i) {
        auto [x, y] = disc_point(p.inner_radius);
        push_point(d, x, y, 0);
    }
    const double r0sq = p.outer_radius_min * p.outer_radius_min;
    const double r1sq = p.outer_radius_max * p.outer_radius_max;
    for (int i = 0; i < p.n_outer; ++i) {
        const double r = std::sqrt(r0sq + (r1sq - r0sq) * rng.uniform());
        const double a = 2.0 * 3.14159265358979323846 * rng.uniform();
        push_point(d, r * std::cos(a), r * std::sin(a), 1);
    }
    for (int i = 0; i < p.n_outliers; ++i) {
        auto [x, y] = disc_point(p.outlier_radius_frac * p.inner_radius);
        d.outlier_ids.push_back(d.size());
        push_point(d, x, y, 1);
    }
    return d;
}

LabeledDataset generate_two_gaussians(const TwoGaussiansParams& p) {
    if (p.n < 2) throw DataError("two_gaussians: need at least 2 points");
    if (p.sigma <= 0.0) throw DataError("two_gaussians: sigma must be positive");
    Rng rng(mix_seed(p.seed, "two_gaussians"));
    LabeledDataset d;
    d.num_classes = 2;
    d.feature_dim = 2;
    d.generator = "two_gaussians";
    for (int i = 0; i < p.n; ++i) {
        const int label = i % 2;
        const double cx = label == 0 ? -p.separation : p.separation;
        push_point(d, cx + p.sigma * rng.normal(), p.sigma * rng.normal(), label);
    }
    return d;
}

LabeledDataset inject_label_noise(const LabeledDataset& data, double fraction, uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0)
        throw DataError("inject_label_noise: fraction must be in [0,1]");
    if (fraction > 0.0 && data.num_classes < 2)
        throw DataError("inject_label_noise: need at least 2 classes");
    LabeledDataset out = data;
    const int n_flip = int(std::floor(fraction * data.size()));
    if (n_flip == 0) return out;

    Rng rng(mix_seed(seed, "label_noise"));
    std::vector<int> ids(size_t(data.size()));
    std::iota(ids.begin(), ids.end(), 0);
    // partial Fisher-Yates: first n_flip entries are a uniform sample
    for (int i = 0; i < n_flip; ++i) {
        const int j = i + int(rng.index(uint64_t(data.size() - i)));
        std::swap(ids[size_t(i)], ids[size_t(j)]);
    }
    for (int i = 0; i < n_flip; ++i) {
        const int id = ids[size_t(i)];
        const int old_label = out.labels[size_t(id)];
        int pick = int(rng.index(uint64_t(data.num_classes - 1)));
        if (pick >= old_label) ++pick;
        out.labels[size_t(id)] = pick;
        out.noise_flag[size_t(id)] = 1;
        out.original_labels[size_t(id)] = old_label;
    }
    return out;
}

LabeledDataset append_duplicates(const LabeledDataset& data, const std::vector<int>& ids) {
    LabeledDataset out = data;
    for (int id : ids) {
        if (id < 0 || id >= data.size()) throw DataError("append_duplicates: id out of range");
        const float* src = data.row(id);
        out.features.insert(out.features.end(), src, src + data.feature_dim);
        out.duplicate_ids.push_back(out.size());
        out.labels.push_back(data.labels[size_t(id)]);
        out.noise_flag.push_back(data.noise_flag[size_t(id)]);
        out.original_labels.push_back(data.original_labels[size_t(id)]);
    }
    return out;
}

LabeledDataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("load_csv: empty file " + path);

    // header: id,label,f0,...,f{d-1}
    std::vector<std::string> hdr;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) hdr.push_back(tok);
    }
    if (hdr.size() < 3 || hdr[0] != "id" || hdr[1] != "label")
        throw DataError("load_csv: bad header, expected id,label,f0,...");
    const int dim = int(hdr.size()) - 2;
    for (int j = 0; j < dim; ++j)
        if (hdr[size_t(j + 2)] != "f" + std::to_string(j))
            throw DataError("load_csv: bad header feature column " + hdr[size_t(j + 2)]);

    LabeledDataset d;
    d.feature_dim = dim;
    d.generator = "csv:" + path;
    int max_label = -1;
    int row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> cells;
        while (std::getline(ss, tok, ',')) cells.push_back(tok);
        if (int(cells.size()) != dim + 2)
            throw DataError("load_csv: row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(dim + 2));
        try {
            const int id = std::stoi(cells[0]);
            if (id != d.size())
                throw DataError("load_csv: row " + std::to_string(row_no) +
                                " id out of order (expected " + std::to_string(d.size()) + ")");
            const int label = std::stoi(cells[1]);
            if (label < 0)
                throw DataError("load_csv: row " + std::to_string(row_no) + " negative label");
            max_label = std::max(max_label, label);
            for (int j = 0; j < dim; ++j) {
                size_t pos = 0;
                const float v = std::stof(cells[size_t(j + 2)], &pos);
                if (pos != cells[size_t(j + 2)].size())
                    throw DataError("load_csv: row " + std::to_string(row_no) +
                                    " non-numeric feature");
                d.features.push_back(v);
            }
            d.labels.push_back(label);
            d.noise_flag.push_back(0);
            d.original_labels.push_back(label);
        } catch (const std::invalid_argument&) {
            throw DataError("load_csv: row " + std::to_string(row_no) + " non-numeric cell");
        } catch (const std::out_of_range&) {
            throw DataError("load_csv: row " + std::to_string(row_no) + " value out of range");
        }
    }
    if (d.size() < 2)
        throw DataError("load_csv: dataset needs at least 2 examples, got " +
                        std::to_string(d.size()));
    d.num_classes = max_label + 1;
    return d;
}

void save_csv(const LabeledDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("save_csv: cannot open " + path);
    out << "id,label";
    for (int j = 0; j < data.feature_dim; ++j) out << ",f" << j;
    out << "\n";
    char buf[64];
    for (int i = 0; i < data.size(); ++i) {
        out << i << ',' << data.labels[size_t(i)];
        const float* r = data.row(i);
        for (int j = 0; j < data.feature_dim; ++j) {
            std::snprintf(buf, sizeof buf, "%.9g", double(r[j]));
            out << ',' << buf;
        }
        out << "\n";
    }
}

void save_sidecar(const LabeledDataset& data, const std::string& path) {
    nlohmann::json j;
    j["generator"] = data.generator;
    j["num_classes"] = data.num_classes;
    std::vector<int> noisy;
    for (int i = 0; i < data.size(); ++i)
        if (data.noise_flag[size_t(i)]) noisy.push_back(i);
    j["noise_ids"] = noisy;
    j["original_labels"] = data.original_labels;
    j["outlier_ids"] = data.outlier_ids;
    j["duplicate_ids"] = data.duplicate_ids;
    std::ofstream out(path);
    if (!out) throw DataError("save_sidecar: cannot open " + path);
    out << j.dump(2) << "\n";
}

void load_sidecar(LabeledDataset& data, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_sidecar: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    data.generator = j.value("generator", data.generator);
    if (j.contains("num_classes")) data.num_classes = j["num_classes"].get<int>();
    if (j.contains("original_labels"))
        data.original_labels = j["original_labels"].get<std::vector<int>>();
    if (j.contains("noise_ids"))
        for (int id : j["noise_ids"].get<std::vector<int>>()) data.noise_flag.at(size_t(id)) = 1;
    if (j.contains("outlier_ids")) data.outlier_ids = j["outlier_ids"].get<std::vector<int>>();
    if (j.contains("duplicate_ids"))
        data.duplicate_ids = j["duplicate_ids"].get<std::vector<int>>();
}

}  // namespace memo::data
