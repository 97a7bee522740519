// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#include "mkoie/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace F = torch::nn::functional;

namespace mkoie::metrics {

double psnr(const torch::Tensor& a, const torch::Tensor& b, double peak) {
    if (!a.sizes().equals(b.sizes())) throw ValidationError("psnr: shape mismatch");
    if (!(peak > 0)) throw ValidationError("psnr: peak must be > 0");
    double mse = (a.to(torch::kFloat64) - b.to(torch::kFloat64)).pow(2).mean().item<double>();
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

torch::Tensor gaussian_window(int size, double sigma) {
    auto xs = torch::arange(size, torch::kFloat64) - (size - 1) / 2.0;
    auto g = torch::exp(-xs * xs / (2 * sigma * sigma));
    g /= g.sum();
    return torch::outer(g, g); // size x size
}

} // namespace

double ssim(const torch::Tensor& a, const torch::Tensor& b, double peak) {
    if (!a.sizes().equals(b.sizes())) throw ValidationError("ssim: shape mismatch");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    auto x = a.to(torch::kFloat64);
    auto y = b.to(torch::kFloat64);
    if (x.dim() == 3) {
        x = x.unsqueeze(0);
        y = y.unsqueeze(0);
    }
    if (x.size(2) < kWin || x.size(3) < kWin) {
        throw ValidationError("ssim: spatial dims must be >= 11");
    }
    const double c1 = std::pow(0.01 * peak, 2);
    const double c2 = std::pow(0.03 * peak, 2);
    const auto ch = x.size(1);
    auto w = gaussian_window(kWin, kSigma).view({1, 1, kWin, kWin}).repeat({ch, 1, 1, 1});
    auto conv = [&](const torch::Tensor& t) {
        return F::conv2d(t, w, F::Conv2dFuncOptions().groups(ch)); // valid windows
    };
    auto mu_x = conv(x);
    auto mu_y = conv(y);
    auto mu_xx = mu_x * mu_x, mu_yy = mu_y * mu_y, mu_xy = mu_x * mu_y;
    auto sig_x = conv(x * x) - mu_xx;
    auto sig_y = conv(y * y) - mu_yy;
    auto sig_xy = conv(x * y) - mu_xy;
    auto ssim_map = ((2 * mu_xy + c1) * (2 * sig_xy + c2)) /
                    ((mu_xx + mu_yy + c1) * (sig_x + sig_y + c2));
    return ssim_map.mean().item<double>();
}

std::string MetricReport::to_csv() const {
    std::ostringstream out;
    out << "task,n,psnr_mean,psnr_std,ssim_mean,ssim_std,psnr_inf_excluded,niqe_mean\n";
    out.precision(12);
    for (const auto& r : rows) {
        out << task_name(r.task) << "," << r.n << "," << r.psnr_mean << "," << r.psnr_std << ","
            << r.ssim_mean << "," << r.ssim_std << "," << r.psnr_excluded << ",\n";
    }
    return out.str();
}

std::string MetricReport::to_table() const {
    std::ostringstream out;
    out << "task   n     psnr (mean +/- std)     ssim (mean +/- std)\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-6s %-5d %8.3f +/- %-8.3f   %6.4f +/- %-6.4f\n",
                      task_name(r.task), r.n, r.psnr_mean, r.psnr_std, r.ssim_mean, r.ssim_std);
        out << buf;
    }
    return out.str();
}

MetricReport evaluate(net::Enhancer& model, const data::PairedDataset& data,
                      const std::vector<Task>& tasks) {
    if (tasks.empty()) throw ValidationError("evaluate: empty task list");
    torch::NoGradGuard no_grad;
    const auto dtype = model->config.use_float32 ? torch::kFloat32 : torch::kFloat64;

    MetricReport report;
    for (Task t : tasks) {
        auto idx = data.indices_for(t);
        if (idx.empty()) {
            throw ValidationError(std::string("evaluate: no samples for task ") + task_name(t));
        }
        // Aggregate in id order so dataset order cannot affect the report.
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return data.refs[a].id < data.refs[b].id;
        });
        std::vector<double> psnrs, ssims;
        int excluded = 0;
        for (auto i : idx) {
            auto out = model->forward(data.degraded[i].unsqueeze(0).to(dtype), t).squeeze(0);
            double p = psnr(out, data.clean[i]);
            double s = ssim(out, data.clean[i]);
            ssims.push_back(s);
            if (std::isinf(p)) {
                ++excluded;
            } else {
                psnrs.push_back(p);
            }
        }
        auto mean_std = [](const std::vector<double>& v) -> std::pair<double, double> {
            if (v.empty()) return {0.0, 0.0};
            double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
            double var = 0;
            for (double x : v) var += (x - mean) * (x - mean);
            return {mean, std::sqrt(var / v.size())}; // population std
        };
        TaskRow row;
        row.task = t;
        row.n = static_cast<int>(idx.size());
        row.psnr_excluded = excluded;
        std::tie(row.psnr_mean, row.psnr_std) = mean_std(psnrs);
        std::tie(row.ssim_mean, row.ssim_std) = mean_std(ssims);
        report.rows.push_back(row);
    }
    return report;
}

} // namespace mkoie::metrics
