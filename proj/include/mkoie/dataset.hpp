// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <torch/torch.h>

#include "mkoie/common.hpp"

namespace mkoie::data {

struct SampleRef {
    std::string id;
    Task task;
    std::string degraded_path;
    std::string clean_path;
};

// In-memory paired dataset loaded from a synthesized dataset directory
// (<root>/<task>/{degraded,clean}/<id>.png). Tensors are 3xHxW double.
struct PairedDataset {
    std::vector<SampleRef> refs;
    std::vector<torch::Tensor> degraded;
    std::vector<torch::Tensor> clean;
    std::vector<Task> tasks;

    std::vector<std::size_t> indices_for(Task t) const;
    std::size_t size() const { return refs.size(); }
};

// Scans the directory layout; loads every pair found for the given tasks.
// Samples are ordered by (task, id) so loading is order-deterministic.
PairedDataset load_dataset(const std::string& root, const std::vector<Task>& tasks);

} // namespace mkoie::data
