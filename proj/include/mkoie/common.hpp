// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mkoie {

// Thrown when inputs or configuration fail validation before any work is
// done. CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a run fails after validation (I/O, numerics). CLI exit code 3.
class RuntimeFailure : public std::runtime_error {
public:
    explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// Restoration task selector. Values match the degradation-type index used
// throughout the model (1-based).
enum class Task : int {
    Dehaze = 1,    // daytime haze removal (id)
    LowLight = 2,  // low-light enhancement (llie)
    NightHaze = 3, // nighttime haze enhancement (nhie)
};

inline const char* task_name(Task t) {
    switch (t) {
    case Task::Dehaze: return "id";
    case Task::LowLight: return "llie";
    case Task::NightHaze: return "nhie";
    }
    throw ValidationError("unknown task value " + std::to_string(static_cast<int>(t)));
}

inline Task parse_task(const std::string& s) {
    if (s == "id" || s == "1") return Task::Dehaze;
    if (s == "llie" || s == "2") return Task::LowLight;
    if (s == "nhie" || s == "3") return Task::NightHaze;
    throw ValidationError("unknown task '" + s + "' (expected id, llie or nhie)");
}

inline Task task_from_int(int t) {
    if (t < 1 || t > 3) {
        throw ValidationError("task index out of range: " + std::to_string(t));
    }
    return static_cast<Task>(t);
}

// splitmix64; used to derive independent sub-seeds from a run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace mkoie
