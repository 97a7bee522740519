// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mkoie/common.hpp"

namespace mkoie {

// Architecture hyperparameters. Defaults give the reference topology:
// stem 3->32, two encoder stages doubling channels, node learning at 128.
struct ModelConfig {
    int base_channels = 32;
    int rlb_per_stage = 2;
    int encoder_stages = 2;
    std::array<int, 3> dilations = {1, 3, 5}; // fixed
    int attn_dk = 0; // 0 = channel count at the node-learning stage
    bool use_float32 = false; // default double precision

    // Channel count entering task-oriented node learning.
    int tnl_channels() const { return base_channels << encoder_stages; }
    int resolved_attn_dk() const { return attn_dk > 0 ? attn_dk : tnl_channels(); }
    // Inputs must be divisible by this in both spatial dims (encoder
    // downsamples plus one more inside the sub-nodes).
    int divisibility() const { return 1 << (encoder_stages + 1); }

    void validate() const;
};

struct TrainConfig {
    int epochs = 200;
    int batch_size = 8;
    double lr0 = 1e-3;
    std::vector<int> lr_drop_epochs = {60, 120, 180};
    double lr_drop_factor = 0.1;
    std::uint64_t seed = 0;
    int checkpoint_every = 1; // epochs
    double grad_clip_norm = 1.0; // <=0 disables
    // "single": one task per run; "roundrobin": interleave task-pure batches.
    std::string task_mode = "single";
    Task task = Task::NightHaze; // task for single mode

    void validate() const;
};

// Flat key=value configuration file with dotted namespaces.
// '#' starts a comment; whitespace around keys/values is trimmed.
class KeyValueConfig {
public:
    KeyValueConfig() = default;
    static KeyValueConfig from_file(const std::string& path);
    static KeyValueConfig from_string(const std::string& text);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get(const std::string& key, const std::string& fallback) const;
    std::string require(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

    const std::map<std::string, std::string>& items() const { return values_; }
    // Canonical serialized form (sorted keys), used for run manifests.
    std::string dump() const;

private:
    std::map<std::string, std::string> values_;
};

ModelConfig model_config_from(const KeyValueConfig& cfg);
TrainConfig train_config_from(const KeyValueConfig& cfg);

} // namespace mkoie
