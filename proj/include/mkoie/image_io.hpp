// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <torch/torch.h>

#include "mkoie/common.hpp"

namespace mkoie::img {

struct LoadedImage {
    torch::Tensor tensor; // 3xHxW double in [0,1], RGB
    int bit_depth;        // 8 or 16
};

// Reads an 8- or 16-bit RGB PNG; grayscale is expanded to 3 channels.
LoadedImage load_png(const std::string& path);

// Writes a 3xHxW [0,1] tensor as PNG at the given bit depth (8 or 16).
// Values are clamped and rounded to the code range.
void save_png(const torch::Tensor& image, const std::string& path, int bit_depth = 16);

// Reflection-pads H and W up to the next multiple of `divisor`; returns the
// padded tensor plus the original size for cropping back.
struct Padded {
    torch::Tensor tensor; // NCHW
    std::int64_t orig_h, orig_w;
};
Padded pad_to_multiple(const torch::Tensor& nchw, int divisor);
torch::Tensor crop_back(const torch::Tensor& nchw, const Padded& p);

} // namespace mkoie::img
