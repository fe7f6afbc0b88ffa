#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "memo/nn.hpp"

namespace memo::ensemble {

struct ArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// correctness.bin: uint32 LE count, then LSB-first packed bits.
void write_correctness(const std::string& path, const std::vector<uint8_t>& bits);
std::vector<uint8_t> read_correctness(const std::string& path);

// params.bin: uint32 LE header length, JSON header (spec fields, array
// shapes, byte offsets), then a flat little-endian float32 blob.
void write_params(const std::string& path, const nn::ModelSpec& spec, const nn::Params& params);
void read_params(const std::string& path, nn::ModelSpec& spec, nn::Params& params);

// trace.jsonl: one line per epoch, JSON array of N probabilities.
void write_trace(const std::string& path, const std::vector<std::vector<double>>& trace);
std::vector<std::vector<double>> read_trace(const std::string& path);

// Round-trips parameters through the serialized float32 representation.
// Teacher logits are always computed from this form so that in-memory and
// resumed executions produce identical bytes.
nn::Params quantize_params(const nn::Params& params);

uint64_t fnv1a64(const void* bytes, size_t len);
std::string content_hash_hex(const std::string& path);

}  // namespace memo::ensemble
