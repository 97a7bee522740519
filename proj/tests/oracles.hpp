// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Scalar-loop reference implementations used as independent oracles in the
// test suites. Deliberately naive; kept separate from the library code paths
// they check.

#pragma once

#include <cmath>
#include <vector>

#include <torch/torch.h>

namespace oracle {

// Direct convolution. x: N,Cin,H,W; w: Cout,Cin/groups,kh,kw; b: Cout or empty.
inline torch::Tensor conv2d_ref(const torch::Tensor& x, const torch::Tensor& w,
                                const torch::Tensor& b, int stride = 1, int pad = 0,
                                int dil = 1, int groups = 1) {
    auto xc = x.to(torch::kFloat64).contiguous();
    auto wc = w.to(torch::kFloat64).contiguous();
    const auto n = xc.size(0), cin = xc.size(1), h = xc.size(2), wd = xc.size(3);
    const auto cout = wc.size(0), kh = wc.size(2), kw = wc.size(3);
    const auto cing = cin / groups, coutg = cout / groups;
    const auto oh = (h + 2 * pad - dil * (kh - 1) - 1) / stride + 1;
    const auto ow = (wd + 2 * pad - dil * (kw - 1) - 1) / stride + 1;
    auto out = torch::zeros({n, cout, oh, ow}, torch::kFloat64);
    auto xa = xc.accessor<double, 4>();
    auto wa = wc.accessor<double, 4>();
    auto oa = out.accessor<double, 4>();
    for (std::int64_t ni = 0; ni < n; ++ni)
        for (std::int64_t oc = 0; oc < cout; ++oc) {
            const std::int64_t g = oc / coutg;
            const double bias = b.defined() && b.numel() > 0 ? b[oc].item<double>() : 0.0;
            for (std::int64_t oy = 0; oy < oh; ++oy)
                for (std::int64_t ox = 0; ox < ow; ++ox) {
                    double acc = bias;
                    for (std::int64_t ic = 0; ic < cing; ++ic)
                        for (std::int64_t ky = 0; ky < kh; ++ky)
                            for (std::int64_t kx = 0; kx < kw; ++kx) {
                                const std::int64_t iy = oy * stride - pad + ky * dil;
                                const std::int64_t ix = ox * stride - pad + kx * dil;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                                acc += xa[ni][g * cing + ic][iy][ix] * wa[oc][ic][ky][kx];
                            }
                    oa[ni][oc][oy][ox] = acc;
                }
        }
    return out;
}

// Per-sample normalization over (C,H,W) with per-channel affine.
inline torch::Tensor layer_norm_ref(const torch::Tensor& x, const torch::Tensor& w,
                                    const torch::Tensor& b, double eps = 1e-5) {
    auto xc = x.to(torch::kFloat64).contiguous();
    auto out = torch::empty_like(xc);
    const auto n = xc.size(0), c = xc.size(1), h = xc.size(2), wd = xc.size(3);
    auto xa = xc.accessor<double, 4>();
    auto oa = out.accessor<double, 4>();
    for (std::int64_t ni = 0; ni < n; ++ni) {
        double mean = 0;
        for (std::int64_t ci = 0; ci < c; ++ci)
            for (std::int64_t y = 0; y < h; ++y)
                for (std::int64_t z = 0; z < wd; ++z) mean += xa[ni][ci][y][z];
        mean /= static_cast<double>(c * h * wd);
        double var = 0;
        for (std::int64_t ci = 0; ci < c; ++ci)
            for (std::int64_t y = 0; y < h; ++y)
                for (std::int64_t z = 0; z < wd; ++z) {
                    double d = xa[ni][ci][y][z] - mean;
                    var += d * d;
                }
        var /= static_cast<double>(c * h * wd);
        for (std::int64_t ci = 0; ci < c; ++ci) {
            const double wc = w[ci].item<double>(), bc = b[ci].item<double>();
            for (std::int64_t y = 0; y < h; ++y)
                for (std::int64_t z = 0; z < wd; ++z)
                    oa[ni][ci][y][z] =
                        (xa[ni][ci][y][z] - mean) / std::sqrt(var + eps) * wc + bc;
        }
    }
    return out;
}

// Per-position group normalization: statistics over each group's channels at
// every spatial location independently.
inline torch::Tensor group_norm_ref(const torch::Tensor& x, int groups, const torch::Tensor& w,
                                    const torch::Tensor& b, double eps = 1e-5) {
    auto xc = x.to(torch::kFloat64).contiguous();
    auto out = torch::empty_like(xc);
    const auto n = xc.size(0), c = xc.size(1), h = xc.size(2), wd = xc.size(3);
    const auto cg = c / groups;
    auto xa = xc.accessor<double, 4>();
    auto oa = out.accessor<double, 4>();
    for (std::int64_t ni = 0; ni < n; ++ni)
        for (int g = 0; g < groups; ++g)
            for (std::int64_t y = 0; y < h; ++y)
                for (std::int64_t z = 0; z < wd; ++z) {
                    double mean = 0, var = 0;
                    for (std::int64_t ci = g * cg; ci < (g + 1) * cg; ++ci)
                        mean += xa[ni][ci][y][z];
                    mean /= static_cast<double>(cg);
                    for (std::int64_t ci = g * cg; ci < (g + 1) * cg; ++ci) {
                        double d = xa[ni][ci][y][z] - mean;
                        var += d * d;
                    }
                    var /= static_cast<double>(cg);
                    for (std::int64_t ci = g * cg; ci < (g + 1) * cg; ++ci) {
                        const double wc = w[ci].item<double>(), bc = b[ci].item<double>();
                        oa[ni][ci][y][z] =
                            (xa[ni][ci][y][z] - mean) / std::sqrt(var + eps) * wc + bc;
                    }
                }
    return out;
}

inline torch::Tensor prelu_ref(const torch::Tensor& x, const torch::Tensor& slopes) {
    auto xc = x.to(torch::kFloat64).contiguous();
    auto out = torch::empty_like(xc);
    const auto n = xc.size(0), c = xc.size(1), h = xc.size(2), wd = xc.size(3);
    auto xa = xc.accessor<double, 4>();
    auto oa = out.accessor<double, 4>();
    for (std::int64_t ni = 0; ni < n; ++ni)
        for (std::int64_t ci = 0; ci < c; ++ci) {
            const double a = slopes.numel() == 1 ? slopes[0].item<double>()
                                                 : slopes[ci].item<double>();
            for (std::int64_t y = 0; y < h; ++y)
                for (std::int64_t z = 0; z < wd; ++z) {
                    double v = xa[ni][ci][y][z];
                    oa[ni][ci][y][z] = v >= 0 ? v : a * v;
                }
        }
    return out;
}

// Dense attention: softmax(QK^T/sqrt(dk)) V + gamma residual form, with the
// projection convs given as 1x1 weight/bias tensors.
inline torch::Tensor attention_ref(const torch::Tensor& f_d, const torch::Tensor& f_ts,
                                   const torch::Tensor& wq, const torch::Tensor& bq,
                                   const torch::Tensor& wk, const torch::Tensor& bk,
                                   const torch::Tensor& wv, const torch::Tensor& bv,
                                   double gamma, int dk) {
    auto q = conv2d_ref(f_d, wq, bq);   // N,dk,H,W
    auto k = conv2d_ref(f_ts, wk, bk);  // N,dk,H,W
    auto v = conv2d_ref(f_d, wv, bv);   // N,C,H,W
    const auto n = f_d.size(0), c = f_d.size(1), h = f_d.size(2), w = f_d.size(3);
    const auto hw = h * w;
    auto out = f_d.to(torch::kFloat64).clone().contiguous();
    auto qa = q.reshape({n, dk, hw});
    auto ka = k.reshape({n, dk, hw});
    auto va = v.reshape({n, c, hw});
    auto oflat = out.reshape({n, c, hw});
    for (std::int64_t ni = 0; ni < n; ++ni) {
        // scores[i][j] = q_i . k_j / sqrt(dk), softmax over j
        std::vector<std::vector<double>> p(hw, std::vector<double>(hw));
        for (std::int64_t i = 0; i < hw; ++i) {
            double maxv = -1e300;
            for (std::int64_t j = 0; j < hw; ++j) {
                double s = 0;
                for (int d = 0; d < dk; ++d)
                    s += qa[ni][d][i].item<double>() * ka[ni][d][j].item<double>();
                p[i][j] = s / std::sqrt(static_cast<double>(dk));
                maxv = std::max(maxv, p[i][j]);
            }
            double sum = 0;
            for (std::int64_t j = 0; j < hw; ++j) {
                p[i][j] = std::exp(p[i][j] - maxv);
                sum += p[i][j];
            }
            for (std::int64_t j = 0; j < hw; ++j) p[i][j] /= sum;
        }
        for (std::int64_t ci = 0; ci < c; ++ci)
            for (std::int64_t i = 0; i < hw; ++i) {
                double acc = 0;
                for (std::int64_t j = 0; j < hw; ++j)
                    acc += p[i][j] * va[ni][ci][j].item<double>();
                oflat[ni][ci][i] += gamma * acc;
            }
    }
    return out;
}

// Windowed SSIM, 11x11 Gaussian sigma 1.5, valid positions, per channel.
inline double ssim_ref(const torch::Tensor& a, const torch::Tensor& b, double peak = 1.0) {
    constexpr int kWin = 11;
    const double c1 = 0.01 * peak * 0.01 * peak, c2 = 0.03 * peak * 0.03 * peak;
    double g[kWin][kWin];
    double gsum = 0;
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
            double dy = i - 5.0, dx = j - 5.0;
            g[i][j] = std::exp(-(dy * dy + dx * dx) / (2 * 1.5 * 1.5));
            gsum += g[i][j];
        }
    for (auto& row : g)
        for (auto& v : row) v /= gsum;

    auto xc = a.to(torch::kFloat64).contiguous();
    auto yc = b.to(torch::kFloat64).contiguous();
    auto xa = xc.accessor<double, 3>();
    auto ya = yc.accessor<double, 3>();
    const auto c = xc.size(0), h = xc.size(1), w = xc.size(2);
    double total = 0;
    std::int64_t count = 0;
    for (std::int64_t ci = 0; ci < c; ++ci)
        for (std::int64_t oy = 0; oy + kWin <= h; ++oy)
            for (std::int64_t ox = 0; ox + kWin <= w; ++ox) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int i = 0; i < kWin; ++i)
                    for (int j = 0; j < kWin; ++j) {
                        double xv = xa[ci][oy + i][ox + j], yv = ya[ci][oy + i][ox + j];
                        mx += g[i][j] * xv;
                        my += g[i][j] * yv;
                        mxx += g[i][j] * xv * xv;
                        myy += g[i][j] * yv * yv;
                        mxy += g[i][j] * xv * yv;
                    }
                double sx = mxx - mx * mx, sy = myy - my * my, sxy = mxy - mx * my;
                total += ((2 * mx * my + c1) * (2 * sxy + c2)) /
                         ((mx * mx + my * my + c1) * (sx + sy + c2));
                ++count;
            }
    return total / static_cast<double>(count);
}

// Relative error helper for finite-difference checks.
inline double rel_err(double a, double b) {
    double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

} // namespace oracle
