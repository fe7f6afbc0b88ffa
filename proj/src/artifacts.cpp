#include "memo/artifacts.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace memo::ensemble {

namespace {

void write_u32le(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ArtifactError("truncated u32");
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) | (uint32_t(b[3]) << 24);
}

void write_f32le(std::ostream& out, const std::vector<float>& v) {
    // assumes little-endian host (asserted at startup in practice; all
    // supported targets are LE)
    out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * 4));
}

}  // namespace

void write_correctness(const std::string& path, const std::vector<uint8_t>& bits) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArtifactError("cannot open " + path);
    write_u32le(out, uint32_t(bits.size()));
    std::vector<uint8_t> packed((bits.size() + 7) / 8, 0);
    for (size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) packed[i / 8] |= uint8_t(1u << (i % 8));
    out.write(reinterpret_cast<const char*>(packed.data()), std::streamsize(packed.size()));
    if (!out) throw ArtifactError("short write to " + path);
}

std::vector<uint8_t> read_correctness(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot open " + path);
    const uint32_t n = read_u32le(in);
    std::vector<uint8_t> packed((n + 7) / 8);
    in.read(reinterpret_cast<char*>(packed.data()), std::streamsize(packed.size()));
    if (!in) throw ArtifactError("truncated correctness file " + path);
    std::vector<uint8_t> bits(n);
    for (uint32_t i = 0; i < n; ++i) bits[i] = (packed[i / 8] >> (i % 8)) & 1u;
    return bits;
}

void write_params(const std::string& path, const nn::ModelSpec& spec, const nn::Params& params) {
    nlohmann::json header;
    header["input_dim"] = spec.input_dim;
    header["num_classes"] = spec.num_classes;
    header["widths"] = spec.widths;
    header["init_seed"] = spec.init_seed;
    nlohmann::json arrays = nlohmann::json::array();
    size_t offset = 0;  // bytes into the float payload
    for (int l = 0; l < params.layers(); ++l) {
        arrays.push_back({{"name", "w" + std::to_string(l)},
                          {"rows", params.w[size_t(l)].rows},
                          {"cols", params.w[size_t(l)].cols},
                          {"offset", offset}});
        offset += params.w[size_t(l)].size() * 4;
        arrays.push_back({{"name", "b" + std::to_string(l)},
                          {"len", params.b[size_t(l)].size()},
                          {"offset", offset}});
        offset += params.b[size_t(l)].size() * 4;
    }
    header["arrays"] = arrays;
    const std::string hdr = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArtifactError("cannot open " + path);
    write_u32le(out, uint32_t(hdr.size()));
    out.write(hdr.data(), std::streamsize(hdr.size()));
    std::vector<float> payload;
    payload.reserve(offset / 4);
    for (int l = 0; l < params.layers(); ++l) {
        for (double v : params.w[size_t(l)].v) payload.push_back(float(v));
        for (double v : params.b[size_t(l)]) payload.push_back(float(v));
    }
    write_f32le(out, payload);
    if (!out) throw ArtifactError("short write to " + path);
}

void read_params(const std::string& path, nn::ModelSpec& spec, nn::Params& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot open " + path);
    const uint32_t hlen = read_u32le(in);
    std::string hdr(hlen, '\0');
    in.read(hdr.data(), std::streamsize(hlen));
    if (!in) throw ArtifactError("truncated header in " + path);
    nlohmann::json header = nlohmann::json::parse(hdr);
    spec.input_dim = header["input_dim"].get<int>();
    spec.num_classes = header["num_classes"].get<int>();
    spec.widths = header["widths"].get<std::vector<int>>();
    spec.init_seed = header["init_seed"].get<uint64_t>();

    params.w.clear();
    params.b.clear();
    std::vector<float> buf;
    for (const auto& a : header["arrays"]) {
        const std::string name = a["name"].get<std::string>();
        if (name[0] == 'w') {
            const int rows = a["rows"].get<int>();
            const int cols = a["cols"].get<int>();
            Mat m(rows, cols);
            buf.resize(m.size());
            in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * 4));
            if (!in) throw ArtifactError("truncated payload in " + path);
            for (size_t i = 0; i < m.size(); ++i) m.v[i] = double(buf[i]);
            params.w.push_back(std::move(m));
        } else {
            const size_t len = a["len"].get<size_t>();
            std::vector<double> b(len);
            buf.resize(len);
            in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(len * 4));
            if (!in) throw ArtifactError("truncated payload in " + path);
            for (size_t i = 0; i < len; ++i) b[i] = double(buf[i]);
            params.b.push_back(std::move(b));
        }
    }
}

void write_trace(const std::string& path, const std::vector<std::vector<double>>& trace) {
    std::ofstream out(path);
    if (!out) throw ArtifactError("cannot open " + path);
    char buf[32];
    for (const auto& row : trace) {
        out << '[';
        for (size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.9g", row[i]);
            if (i) out << ',';
            out << buf;
        }
        out << "]\n";
    }
    if (!out) throw ArtifactError("short write to " + path);
}

std::vector<std::vector<double>> read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("cannot open " + path);
    std::vector<std::vector<double>> trace;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json row = nlohmann::json::parse(line);
        trace.push_back(row.get<std::vector<double>>());
    }
    return trace;
}

nn::Params quantize_params(const nn::Params& params) {
    nn::Params q = params;
    for (auto& w : q.w)
        for (double& v : w.v) v = double(float(v));
    for (auto& b : q.b)
        for (double& v : b) v = double(float(v));
    return q;
}

uint64_t fnv1a64(const void* bytes, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(bytes);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string content_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data.data(), data.size())));
    return buf;
}

}  // namespace memo::ensemble
