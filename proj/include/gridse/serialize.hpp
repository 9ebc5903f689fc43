#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "gridse/nn.hpp"

namespace gridse::io {

// Model container: 8-byte little-endian header length, JSON header
// (architecture, dims, normalization shapes, seed, training metadata), then
// raw little-endian float64 parameter blocks in layer order followed by the
// normalization blocks.
void save_gnn(const nn::GnnModel& model, const std::filesystem::path& path,
              const std::string& metadata_json = "{}");
void save_mlp(const nn::MlpModel& model, const std::filesystem::path& path,
              const std::string& metadata_json = "{}");

using AnyModel = std::variant<nn::GnnModel, nn::MlpModel>;
AnyModel load_model(const std::filesystem::path& path);
std::string model_metadata(const std::filesystem::path& path);  // header JSON text

// Raw little-endian float64 array IO used by dataset and model files.
void write_f64_block(std::ostream& os, const double* data, std::size_t count);
void read_f64_block(std::istream& is, double* data, std::size_t count);

// FNV-1a 64-bit over a string, hex encoded; used for config hashes.
std::string fnv1a_hex(const std::string& text);

// Hash of a file's bytes (same FNV) for manifest cross-checks.
std::string file_hash(const std::filesystem::path& path);

}  // namespace gridse::io
