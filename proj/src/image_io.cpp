// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#include "mkoie/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace mkoie::img {

LoadedImage load_png(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw ValidationError("cannot read image: " + path);

    int depth = m.depth();
    if (depth != CV_8U && depth != CV_16U) {
        throw ValidationError("unsupported bit depth in " + path + " (need 8- or 16-bit)");
    }
    if (m.channels() == 4) {
        std::vector<cv::Mat> ch;
        cv::split(m, ch);
        cv::Mat tmp;
        cv::merge(std::vector<cv::Mat>{ch[0], ch[1], ch[2]}, tmp);
        m = tmp;
    } else if (m.channels() == 1) {
        cv::Mat tmp;
        cv::merge(std::vector<cv::Mat>{m, m, m}, tmp);
        m = tmp;
    } else if (m.channels() != 3) {
        throw ValidationError("unsupported channel count in " + path);
    }

    const double maxv = depth == CV_8U ? 255.0 : 65535.0;
    cv::Mat f;
    m.convertTo(f, CV_64FC3, 1.0 / maxv);

    // OpenCV loads BGR; emit RGB CHW.
    auto t = torch::empty({3, f.rows, f.cols}, torch::kFloat64);
    auto acc = t.accessor<double, 3>();
    for (int y = 0; y < f.rows; ++y) {
        const cv::Vec3d* row = f.ptr<cv::Vec3d>(y);
        for (int x = 0; x < f.cols; ++x) {
            acc[0][y][x] = row[x][2];
            acc[1][y][x] = row[x][1];
            acc[2][y][x] = row[x][0];
        }
    }
    return {t, depth == CV_8U ? 8 : 16};
}

void save_png(const torch::Tensor& image, const std::string& path, int bit_depth) {
    if (image.dim() != 3 || image.size(0) != 3) {
        throw ValidationError("save_png expects a 3xHxW tensor");
    }
    if (bit_depth != 8 && bit_depth != 16) {
        throw ValidationError("save_png bit depth must be 8 or 16");
    }
    auto t = image.to(torch::kFloat64).clamp(0.0, 1.0).contiguous();
    const int h = static_cast<int>(t.size(1));
    const int w = static_cast<int>(t.size(2));
    auto acc = t.accessor<double, 3>();

    cv::Mat out;
    const double maxv = bit_depth == 8 ? 255.0 : 65535.0;
    if (bit_depth == 8) {
        out = cv::Mat(h, w, CV_8UC3);
        for (int y = 0; y < h; ++y) {
            auto* row = out.ptr<cv::Vec3b>(y);
            for (int x = 0; x < w; ++x) {
                row[x][2] = static_cast<uchar>(std::lround(acc[0][y][x] * maxv));
                row[x][1] = static_cast<uchar>(std::lround(acc[1][y][x] * maxv));
                row[x][0] = static_cast<uchar>(std::lround(acc[2][y][x] * maxv));
            }
        }
    } else {
        out = cv::Mat(h, w, CV_16UC3);
        for (int y = 0; y < h; ++y) {
            auto* row = out.ptr<cv::Vec3w>(y);
            for (int x = 0; x < w; ++x) {
                row[x][2] = static_cast<ushort>(std::lround(acc[0][y][x] * maxv));
                row[x][1] = static_cast<ushort>(std::lround(acc[1][y][x] * maxv));
                row[x][0] = static_cast<ushort>(std::lround(acc[2][y][x] * maxv));
            }
        }
    }
    if (!cv::imwrite(path, out)) {
        throw RuntimeFailure("failed to write image: " + path);
    }
}

Padded pad_to_multiple(const torch::Tensor& nchw, int divisor) {
    if (nchw.dim() != 4) throw ValidationError("pad_to_multiple expects NCHW");
    const auto h = nchw.size(2), w = nchw.size(3);
    const auto ph = (divisor - h % divisor) % divisor;
    const auto pw = (divisor - w % divisor) % divisor;
    Padded p{nchw, h, w};
    if (ph > 0 || pw > 0) {
        namespace F = torch::nn::functional;
        p.tensor = F::pad(nchw, F::PadFuncOptions({0, pw, 0, ph}).mode(torch::kReflect));
    }
    return p;
}

torch::Tensor crop_back(const torch::Tensor& nchw, const Padded& p) {
    return nchw.index({torch::indexing::Slice(), torch::indexing::Slice(),
                       torch::indexing::Slice(0, p.orig_h),
                       torch::indexing::Slice(0, p.orig_w)});
}

} // namespace mkoie::img
