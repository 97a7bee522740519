// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#include "mkoie/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace mkoie::ckpt {

namespace {

constexpr char kMagic[8] = {'M', 'K', 'O', 'I', 'C', 'K', 'P', 'T'};

// dtype codes in the array table
enum : std::uint8_t { kF64 = 0, kF32 = 1, kI64 = 2 };

std::uint8_t dtype_code(torch::ScalarType t) {
    switch (t) {
    case torch::kFloat64: return kF64;
    case torch::kFloat32: return kF32;
    case torch::kInt64: return kI64;
    default: throw FormatError("unsupported checkpoint dtype");
    }
}

torch::ScalarType dtype_from(std::uint8_t code) {
    switch (code) {
    case kF64: return torch::kFloat64;
    case kF32: return torch::kFloat32;
    case kI64: return torch::kInt64;
    default: throw FormatError("unknown dtype code in checkpoint");
    }
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw FormatError("truncated checkpoint file");
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_pod<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    auto n = read_pod<std::uint64_t>(in);
    if (n > (1ULL << 30)) throw FormatError("implausible string length in checkpoint");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw FormatError("truncated checkpoint file");
    return s;
}

std::string encode_config(const ModelConfig& mc) {
    KeyValueConfig kv;
    kv.set("model.base_channels", std::to_string(mc.base_channels));
    kv.set("model.rlb_per_stage", std::to_string(mc.rlb_per_stage));
    kv.set("model.encoder_stages", std::to_string(mc.encoder_stages));
    kv.set("model.attn_dk", std::to_string(mc.attn_dk));
    kv.set("model.float32", mc.use_float32 ? "true" : "false");
    return kv.dump();
}

ModelConfig decode_config(const std::string& s) {
    return model_config_from(KeyValueConfig::from_string(s));
}

} // namespace

void save(const Checkpoint& c, const std::string& path) {
    // Little-endian host assumed; payloads are written as raw host bytes.
    static_assert(std::endian::native == std::endian::little);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw RuntimeFailure("cannot open checkpoint for write: " + tmp);
        out.write(kMagic, sizeof(kMagic));
        write_pod<std::uint32_t>(out, kVersion);
        write_string(out, encode_config(c.model_config));
        write_pod<std::int64_t>(out, c.epoch);
        write_pod<std::int64_t>(out, c.global_step);
        write_string(out, c.rng_state);
        write_pod<std::uint64_t>(out, c.arrays.size());
        for (const auto& [name, tensor] : c.arrays) {
            auto t = tensor.contiguous();
            write_string(out, name);
            write_pod<std::uint8_t>(out, dtype_code(t.scalar_type()));
            write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim()));
            for (auto d : t.sizes()) write_pod<std::int64_t>(out, d);
            const auto bytes = t.numel() * t.element_size();
            out.write(reinterpret_cast<const char*>(t.data_ptr()),
                      static_cast<std::streamsize>(bytes));
        }
        if (!out) throw RuntimeFailure("write failure on checkpoint: " + tmp);
    }
    fs::rename(tmp, path);
}

Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("not a checkpoint file: " + path);
    }
    auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion) {
        throw VersionError("checkpoint version " + std::to_string(version) +
                           " unsupported (expected " + std::to_string(kVersion) + ")");
    }
    Checkpoint c;
    c.model_config = decode_config(read_string(in));
    c.epoch = read_pod<std::int64_t>(in);
    c.global_step = read_pod<std::int64_t>(in);
    c.rng_state = read_string(in);
    auto count = read_pod<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        auto name = read_string(in);
        auto dtype = dtype_from(read_pod<std::uint8_t>(in));
        auto ndim = read_pod<std::uint32_t>(in);
        if (ndim > 8) throw FormatError("implausible rank in checkpoint array " + name);
        std::vector<std::int64_t> dims(ndim);
        for (auto& d : dims) d = read_pod<std::int64_t>(in);
        auto t = torch::empty(dims, dtype);
        const auto bytes = t.numel() * t.element_size();
        in.read(reinterpret_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(bytes));
        if (!in) throw FormatError("truncated checkpoint array " + name);
        c.arrays.emplace(std::move(name), std::move(t));
    }
    return c;
}

void validate_shapes(const Checkpoint& c,
                     const std::map<std::string, torch::Tensor>& expected) {
    for (const auto& [name, tensor] : expected) {
        auto it = c.arrays.find(name);
        if (it == c.arrays.end()) {
            throw ShapeError("checkpoint missing array: " + name);
        }
        if (!it->second.sizes().equals(tensor.sizes())) {
            throw ShapeError("checkpoint shape mismatch for " + name);
        }
    }
}

} // namespace mkoie::ckpt
