#pragma once

#include <cstddef>
#include <cstdint>

#include "synlink/model.hpp"

namespace synlink {

/// Optimizer settings. Defaults follow the positive-only column of the
/// reference hyperparameter table where it gives a value.
struct OptimizerConfig {
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;
    double grad_clip = 0.1;
    std::int64_t warmup_steps = 0;
    std::size_t batch_size = 16;
    std::int64_t steps = 1000;
    double label_smoothing = 0.1;

    void validate() const;
};

/// Linear warmup from 0 over warmup_steps, then constant. `step` is 1-based.
double scheduled_rate(const OptimizerConfig& cfg, std::int64_t step);

/// Rescales `grad` so its global L2 norm is at most max_norm; returns the
/// norm before clipping.
double clip_global_norm(Parameters& grad, double max_norm);

/// One Adam step with decoupled weight decay. Creates the moment buffers on
/// first use.
void adamw_step(Parameters& params, const Parameters& grad, AdamState& state,
                const OptimizerConfig& cfg);

}  // namespace synlink
