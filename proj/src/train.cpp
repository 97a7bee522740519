// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#include "mkoie/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mkoie::train {

double lr_at(int epoch, const TrainConfig& cfg) {
    if (epoch < 0 || epoch >= cfg.epochs) {
        throw ValidationError("epoch " + std::to_string(epoch) + " out of range [0, " +
                              std::to_string(cfg.epochs) + ")");
    }
    int drops = 0;
    for (int e : cfg.lr_drop_epochs) {
        if (e <= epoch) ++drops;
    }
    return cfg.lr0 * std::pow(cfg.lr_drop_factor, drops);
}

void Adam::step(const std::vector<std::pair<std::string, torch::Tensor>>& params,
                double lr, double clip_norm) {
    torch::NoGradGuard no_grad;

    if (clip_norm > 0) {
        double sq = 0;
        for (const auto& [name, p] : params) {
            if (!p.grad().defined()) continue;
            sq += p.grad().pow(2).sum().item<double>();
        }
        double norm = std::sqrt(sq);
        if (norm > clip_norm) {
            double scale = clip_norm / norm;
            for (const auto& [name, p] : params) {
                if (p.grad().defined()) p.mutable_grad().mul_(scale);
            }
        }
    }

    for (const auto& [name, p] : params) {
        if (!p.grad().defined()) continue;
        auto g = p.grad();
        auto it_m = m_.find(name);
        if (it_m == m_.end()) {
            m_[name] = torch::zeros_like(p);
            v_[name] = torch::zeros_like(p);
            t_[name] = 0;
        }
        auto& m = m_[name];
        auto& v = v_[name];
        const std::int64_t t = ++t_[name];
        m.mul_(beta1_).add_(g, 1 - beta1_);
        v.mul_(beta2_).addcmul_(g, g, 1 - beta2_);
        const double bc1 = 1 - std::pow(beta1_, t);
        const double bc2 = 1 - std::pow(beta2_, t);
        auto m_hat = m / bc1;
        auto v_hat = v / bc2;
        p.add_(-lr * m_hat / (v_hat.sqrt() + eps_));
    }
}

std::string StepRecord::header() {
    return "step\tepoch\ttask\tlr\trec\tper\ttotal\twall_ms";
}

std::string StepRecord::to_line() const {
    std::ostringstream out;
    out.precision(17);
    out << step << "\t" << epoch << "\t" << task_name(task) << "\t" << lr << "\t" << rec << "\t"
        << per << "\t" << total << "\t" << wall_ms;
    return out.str();
}

TrainState make_state(const ModelConfig& mc, std::uint64_t seed) {
    TrainState s;
    s.model_config = mc;
    s.model = net::build_enhancer(mc, seed);
    s.rng.seed(mix_seed(seed, 0xDA7A));
    return s;
}

namespace {

struct Batch {
    Task task;
    std::vector<std::size_t> indices;
};

std::vector<Batch> plan_batches(const data::PairedDataset& data, const TrainConfig& cfg,
                                std::mt19937_64& rng) {
    std::vector<Task> active;
    if (cfg.task_mode == "single") {
        active = {cfg.task};
    } else {
        active = {Task::Dehaze, Task::LowLight, Task::NightHaze};
    }
    std::vector<std::vector<Batch>> per_task;
    for (Task t : active) {
        auto idx = data.indices_for(t);
        if (idx.empty()) continue;
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<Batch> batches;
        for (std::size_t i = 0; i < idx.size(); i += cfg.batch_size) {
            Batch b{t, {}};
            for (std::size_t j = i; j < std::min(idx.size(), i + cfg.batch_size); ++j) {
                b.indices.push_back(idx[j]);
            }
            batches.push_back(std::move(b));
        }
        per_task.push_back(std::move(batches));
    }
    if (per_task.empty()) {
        throw ValidationError("no samples available for the requested task(s)");
    }
    // Round-robin interleave task-pure batches.
    std::vector<Batch> plan;
    for (std::size_t i = 0;; ++i) {
        bool any = false;
        for (auto& tb : per_task) {
            if (i < tb.size()) {
                plan.push_back(std::move(tb[i]));
                any = true;
            }
        }
        if (!any) break;
    }
    return plan;
}

} // namespace

TaskMeans train_epoch(TrainState& state, const data::PairedDataset& data,
                      const TrainConfig& cfg, loss::FeatureExtractor& fx,
                      const StepSink& sink) {
    const double lr = lr_at(static_cast<int>(state.epoch), cfg);
    const auto dtype = state.model_config.use_float32 ? torch::kFloat32 : torch::kFloat64;
    auto plan = plan_batches(data, cfg, state.rng);
    auto params = state.model->named_parameters().pairs();

    TaskMeans means;
    for (const auto& batch : plan) {
        auto start = std::chrono::steady_clock::now();
        const Task task = batch.task;
        for (auto i : batch.indices) {
            if (data.tasks[i] != task) {
                throw RuntimeFailure("mixed-task batch at step " +
                                     std::to_string(state.global_step));
            }
        }
        std::vector<torch::Tensor> deg, cln;
        for (auto i : batch.indices) {
            deg.push_back(data.degraded[i]);
            cln.push_back(data.clean[i]);
        }
        auto i_de = torch::stack(deg).to(dtype);
        auto i_gt = torch::stack(cln).to(dtype);

        state.model->zero_grad();
        auto i_re = state.model->forward(i_de, task);
        auto lb = loss::total_loss(i_re, i_gt, fx);
        const double rec = lb.rec.item<double>();
        const double per = lb.per.item<double>();
        const double total = lb.total.item<double>();
        if (!std::isfinite(total)) {
            std::ostringstream msg;
            msg << "non-finite loss at step " << state.global_step << " task " << task_name(task)
                << " (rec=" << rec << " per=" << per << " total=" << total << ")";
            throw RuntimeFailure(msg.str());
        }
        lb.total.backward();
        state.opt.step(params, lr, cfg.grad_clip_norm);
        ++state.global_step;

        const int ti = static_cast<int>(task) - 1;
        means.rec[ti] += rec;
        means.per[ti] += per;
        means.total[ti] += total;
        ++means.batches[ti];

        if (sink) {
            StepRecord r;
            r.step = state.global_step;
            r.epoch = static_cast<int>(state.epoch);
            r.task = task;
            r.lr = lr;
            r.rec = rec;
            r.per = per;
            r.total = total;
            r.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
            sink(r);
        }
    }
    for (int t = 0; t < 3; ++t) {
        if (means.batches[t] > 0) {
            means.rec[t] /= means.batches[t];
            means.per[t] /= means.batches[t];
            means.total[t] /= means.batches[t];
        }
    }
    ++state.epoch;
    return means;
}

void save_checkpoint(const TrainState& state, const std::string& path) {
    ckpt::Checkpoint c;
    c.model_config = state.model_config;
    c.epoch = state.epoch;
    c.global_step = state.global_step;
    std::ostringstream rng;
    rng << state.rng;
    c.rng_state = rng.str();

    for (const auto& p : state.model->named_parameters()) {
        c.arrays["param/" + p.key()] = p.value().detach().clone();
    }
    auto& opt = const_cast<Adam&>(state.opt);
    for (const auto& [name, t] : opt.moments1()) c.arrays["adam/m/" + name] = t.clone();
    for (const auto& [name, t] : opt.moments2()) c.arrays["adam/v/" + name] = t.clone();
    for (const auto& [name, n] : opt.step_counts()) {
        c.arrays["adam/t/" + name] = torch::tensor(n, torch::kInt64);
    }
    ckpt::save(c, path);
}

TrainState load_checkpoint(const std::string& path) {
    auto c = ckpt::load(path);
    TrainState state;
    state.model_config = c.model_config;
    state.model = net::build_enhancer(c.model_config, /*seed=*/0);
    state.epoch = c.epoch;
    state.global_step = c.global_step;
    std::istringstream rng(c.rng_state);
    rng >> state.rng;

    std::map<std::string, torch::Tensor> expected;
    for (const auto& p : state.model->named_parameters()) {
        expected["param/" + p.key()] = p.value();
    }
    ckpt::validate_shapes(c, expected);

    torch::NoGradGuard no_grad;
    const auto dtype = c.model_config.use_float32 ? torch::kFloat32 : torch::kFloat64;
    for (auto& p : state.model->named_parameters()) {
        p.value().copy_(c.arrays.at("param/" + p.key()));
    }
    for (const auto& [name, t] : c.arrays) {
        if (name.starts_with("adam/m/")) {
            state.opt.moments1()[name.substr(7)] = t.to(dtype).clone();
        } else if (name.starts_with("adam/v/")) {
            state.opt.moments2()[name.substr(7)] = t.to(dtype).clone();
        } else if (name.starts_with("adam/t/")) {
            state.opt.step_counts()[name.substr(7)] = t.item<std::int64_t>();
        }
    }
    return state;
}

MetricsLog::MetricsLog(const std::string& path) : path_(path) {
    std::ifstream probe(path_);
    if (!probe.good()) {
        std::ofstream out(path_, std::ios::trunc);
        if (!out) throw RuntimeFailure("cannot open metrics log: " + path_);
        out << StepRecord::header() << "\n";
    }
}

void MetricsLog::append(const StepRecord& r) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw RuntimeFailure("cannot append to metrics log: " + path_);
    out << r.to_line() << "\n";
}

} // namespace mkoie::train
