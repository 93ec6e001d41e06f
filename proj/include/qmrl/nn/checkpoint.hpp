#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qmrl/nn/params.hpp"

namespace qmrl::nn {

/// One named array of a checkpoint container.
struct NamedArray {
    std::string name;
    Mat value;
};

/// Binary container layout (all integers and floats little-endian):
///   "QMRLCKP1"                       8-byte magic
///   u64 count
///   count x { u32 name_len, name bytes, u64 rows, u64 cols, rows*cols f64 column-major }
void write_container(const std::filesystem::path& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_container(const std::filesystem::path& path);

/// Appends every parameter value of `store` under `prefix` + name.
void append_store(std::vector<NamedArray>& out, const std::string& prefix, const ParamStore& store);

/// Restores values saved with append_store. Throws std::runtime_error when an
/// array is missing or has a different shape.
void load_store(const std::vector<NamedArray>& arrays, const std::string& prefix, ParamStore& store);

}    // namespace qmrl::nn
