// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#include "mkoie/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mkoie {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

void ModelConfig::validate() const {
    if (base_channels < 8) {
        throw ValidationError("model.base_channels must be >= 8");
    }
    if (base_channels % 4 != 0) {
        throw ValidationError("model.base_channels must be divisible by 4 (group norm)");
    }
    if (rlb_per_stage < 1) throw ValidationError("model.rlb_per_stage must be >= 1");
    if (encoder_stages < 1) throw ValidationError("model.encoder_stages must be >= 1");
    if (dilations != std::array<int, 3>{1, 3, 5}) {
        throw ValidationError("model.dilations are fixed at (1,3,5)");
    }
    if (attn_dk < 0) throw ValidationError("model.attn_dk must be >= 0 (0 = auto)");
}

void TrainConfig::validate() const {
    if (epochs <= 0) throw ValidationError("train.epochs must be > 0");
    if (batch_size <= 0) throw ValidationError("train.batch_size must be > 0");
    if (lr0 <= 0) throw ValidationError("train.lr0 must be > 0");
    if (!std::is_sorted(lr_drop_epochs.begin(), lr_drop_epochs.end()) ||
        std::adjacent_find(lr_drop_epochs.begin(), lr_drop_epochs.end()) != lr_drop_epochs.end()) {
        throw ValidationError("train.lr_drop_epochs must be strictly increasing");
    }
    if (!lr_drop_epochs.empty() && lr_drop_epochs.back() >= epochs) {
        throw ValidationError("train.lr_drop_epochs must all be < train.epochs");
    }
    if (checkpoint_every <= 0) throw ValidationError("train.checkpoint_every must be > 0");
    if (task_mode != "single" && task_mode != "roundrobin") {
        throw ValidationError("train.task_mode must be 'single' or 'roundrobin'");
    }
}

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": expected key=value, got '" + line + "'");
        }
        cfg.values_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return cfg;
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string KeyValueConfig::require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("missing required config key: " + key);
    return it->second;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        int v = std::stoi(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key " + key + ": not an integer: '" + it->second + "'");
    }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key " + key + ": not a number: '" + it->second + "'");
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config key " + key + ": not a boolean: '" + v + "'");
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key,
                                              const std::vector<int>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<int> out;
    std::istringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ValidationError("config key " + key + ": bad list entry '" + item + "'");
        }
    }
    return out;
}

std::string KeyValueConfig::dump() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << "=" << v << "\n";
    return out.str();
}

ModelConfig model_config_from(const KeyValueConfig& cfg) {
    ModelConfig mc;
    mc.base_channels = cfg.get_int("model.base_channels", mc.base_channels);
    mc.rlb_per_stage = cfg.get_int("model.rlb_per_stage", mc.rlb_per_stage);
    mc.encoder_stages = cfg.get_int("model.encoder_stages", mc.encoder_stages);
    mc.attn_dk = cfg.get_int("model.attn_dk", mc.attn_dk);
    mc.use_float32 = cfg.get_bool("model.float32", mc.use_float32);
    mc.validate();
    return mc;
}

TrainConfig train_config_from(const KeyValueConfig& cfg) {
    TrainConfig tc;
    tc.epochs = cfg.get_int("train.epochs", tc.epochs);
    tc.batch_size = cfg.get_int("train.batch_size", tc.batch_size);
    tc.lr0 = cfg.get_double("train.lr0", tc.lr0);
    tc.lr_drop_epochs = cfg.get_int_list("train.lr_drop_epochs", tc.lr_drop_epochs);
    tc.lr_drop_factor = cfg.get_double("train.lr_drop_factor", tc.lr_drop_factor);
    tc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<int>(tc.seed)));
    tc.checkpoint_every = cfg.get_int("train.checkpoint_every", tc.checkpoint_every);
    tc.grad_clip_norm = cfg.get_double("train.grad_clip_norm", tc.grad_clip_norm);
    tc.task_mode = cfg.get("train.task_mode", tc.task_mode);
    if (cfg.has("train.task")) tc.task = parse_task(cfg.require("train.task"));
    tc.validate();
    return tc;
}

} // namespace mkoie
