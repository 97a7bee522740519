// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Single-file checkpoint: versioned header, config echo, counters, RNG
// state, then a named-array table (name, dtype, shape, little-endian
// payload). Writes are atomic (temp file + rename).

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <torch/torch.h>

#include "mkoie/config.hpp"

namespace mkoie::ckpt {

class FormatError : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};
class VersionError : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};
class ShapeError : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

inline constexpr std::uint32_t kVersion = 1;

struct Checkpoint {
    ModelConfig model_config;
    std::int64_t epoch = 0;
    std::int64_t global_step = 0;
    std::string rng_state; // serialized mt19937_64 stream state
    std::map<std::string, torch::Tensor> arrays;
};

void save(const Checkpoint& c, const std::string& path);
Checkpoint load(const std::string& path);

// Checks that every `expected` name exists with an identical shape.
void validate_shapes(const Checkpoint& c,
                     const std::map<std::string, torch::Tensor>& expected);

} // namespace mkoie::ckpt
