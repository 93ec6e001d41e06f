#include "qmrl/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace qmrl::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'Q', 'M', 'R', 'L', 'C', 'K', 'P', '1'};

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) {
        throw std::runtime_error("checkpoint: truncated file");
    }
    return v;
}

}    // namespace

void write_container(const std::filesystem::path& path, const std::vector<NamedArray>& arrays) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
    }
    os.write(kMagic, sizeof(kMagic));
    put<std::uint64_t>(os, arrays.size());
    for (const auto& a : arrays) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(a.name.size()));
        os.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
        put<std::uint64_t>(os, static_cast<std::uint64_t>(a.value.rows()));
        put<std::uint64_t>(os, static_cast<std::uint64_t>(a.value.cols()));
        os.write(reinterpret_cast<const char*>(a.value.data()),
                 static_cast<std::streamsize>(a.value.size() * sizeof(double)));
    }
    if (!os) {
        throw std::runtime_error("checkpoint: write failed for " + path.string());
    }
}

std::vector<NamedArray> read_container(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("checkpoint: cannot open " + path.string());
    }
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path.string());
    }
    const auto count = get<std::uint64_t>(is);
    std::vector<NamedArray> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        NamedArray a;
        const auto len = get<std::uint32_t>(is);
        a.name.resize(len);
        is.read(a.name.data(), len);
        const auto rows = get<std::uint64_t>(is);
        const auto cols = get<std::uint64_t>(is);
        a.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        is.read(reinterpret_cast<char*>(a.value.data()), static_cast<std::streamsize>(rows * cols * sizeof(double)));
        if (!is) {
            throw std::runtime_error("checkpoint: truncated file");
        }
        out.push_back(std::move(a));
    }
    return out;
}

void append_store(std::vector<NamedArray>& out, const std::string& prefix, const ParamStore& store) {
    for (const auto& p : store) {
        out.push_back({prefix + p.name, p.value});
    }
}

void load_store(const std::vector<NamedArray>& arrays, const std::string& prefix, ParamStore& store) {
    std::unordered_map<std::string, const Mat*> index;
    for (const auto& a : arrays) {
        index.emplace(a.name, &a.value);
    }
    for (auto& p : store) {
        const auto it = index.find(prefix + p.name);
        if (it == index.end()) {
            throw std::runtime_error("checkpoint: missing array " + prefix + p.name);
        }
        if (it->second->rows() != p.value.rows() || it->second->cols() != p.value.cols()) {
            throw std::runtime_error("checkpoint: shape mismatch for " + prefix + p.name);
        }
        p.value = *it->second;
    }
}

}    // namespace qmrl::nn
