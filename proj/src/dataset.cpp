// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#include "mkoie/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include "mkoie/image_io.hpp"

namespace fs = std::filesystem;

namespace mkoie::data {

std::vector<std::size_t> PairedDataset::indices_for(Task t) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i] == t) out.push_back(i);
    }
    return out;
}

PairedDataset load_dataset(const std::string& root, const std::vector<Task>& wanted) {
    if (!fs::is_directory(root)) {
        throw ValidationError("dataset root does not exist: " + root);
    }
    PairedDataset ds;
    for (Task t : wanted) {
        fs::path deg_dir = fs::path(root) / task_name(t) / "degraded";
        fs::path cln_dir = fs::path(root) / task_name(t) / "clean";
        if (!fs::is_directory(deg_dir)) continue;
        std::vector<std::string> ids;
        for (const auto& e : fs::directory_iterator(deg_dir)) {
            if (e.path().extension() == ".png") ids.push_back(e.path().stem().string());
        }
        std::sort(ids.begin(), ids.end());
        for (const auto& id : ids) {
            SampleRef ref{id, t, (deg_dir / (id + ".png")).string(),
                          (cln_dir / (id + ".png")).string()};
            if (!fs::exists(ref.clean_path)) {
                throw ValidationError("missing clean counterpart for " + ref.degraded_path);
            }
            ds.degraded.push_back(img::load_png(ref.degraded_path).tensor);
            ds.clean.push_back(img::load_png(ref.clean_path).tensor);
            ds.tasks.push_back(t);
            ds.refs.push_back(std::move(ref));
        }
    }
    return ds;
}

} // namespace mkoie::data
