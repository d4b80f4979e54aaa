#include "synlink/optim.hpp"

#include <algorithm>
#include <cmath>

#include "synlink/error.hpp"

namespace synlink {

void OptimizerConfig::validate() const {
    if (!(learning_rate >= 0.0) || !(adam_beta1 > 0.0 && adam_beta1 < 1.0) ||
        !(adam_beta2 > 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0) || !(weight_decay >= 0.0) ||
        !(grad_clip > 0.0) || warmup_steps < 0 || batch_size == 0 || steps < 0) {
        throw UsageError("invalid optimizer configuration");
    }
    if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
        throw UsageError("label_smoothing must lie in [0, 1)");
    }
}

double scheduled_rate(const OptimizerConfig& cfg, std::int64_t step) {
    if (cfg.warmup_steps <= 0 || step >= cfg.warmup_steps) {
        return cfg.learning_rate;
    }
    return cfg.learning_rate * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
}

double clip_global_norm(Parameters& grad, double max_norm) {
    const double norm = std::sqrt(grad.squared_norm());
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto& a : grad.arrays()) {
            for (double& x : a.values()) {
                x *= scale;
            }
        }
    }
    return norm;
}

void adamw_step(Parameters& params, const Parameters& grad, AdamState& state,
                const OptimizerConfig& cfg) {
    if (state.step == 0 && state.m.embedding.size() == 0) {
        state.m = params.zeros_like();
        state.v = params.zeros_like();
    }
    ++state.step;
    const double lr = scheduled_rate(cfg, state.step);
    const double bias1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));

    auto p = params.arrays();
    const auto g = grad.arrays();
    auto m = state.m.arrays();
    auto v = state.v.arrays();
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto pv = p[i].values();
        const auto gv = g[i].values();
        auto mv = m[i].values();
        auto vv = v[i].values();
        for (std::size_t j = 0; j < pv.size(); ++j) {
            mv[j] = cfg.adam_beta1 * mv[j] + (1.0 - cfg.adam_beta1) * gv[j];
            vv[j] = cfg.adam_beta2 * vv[j] + (1.0 - cfg.adam_beta2) * gv[j] * gv[j];
            const double m_hat = mv[j] / bias1;
            const double v_hat = vv[j] / bias2;
            pv[j] -= lr * (m_hat / (std::sqrt(v_hat) + cfg.adam_eps) + cfg.weight_decay * pv[j]);
        }
    }
}

}  // namespace synlink
