#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "synlink/corpus.hpp"
#include "synlink/kb.hpp"
#include "synlink/model.hpp"
#include "synlink/optim.hpp"
#include "synlink/tfidf.hpp"

namespace synlink {

/// One (input, synonym) generation target.
struct PositiveInstance {
    EncodedInput input;
    std::vector<TokenId> target;  // synonym tokens followed by [EOS]
    std::string target_name;
    std::size_t example_index = 0;
};

inline constexpr std::size_t kDefaultSynonymTargets = 3;

/// For each example, one instance per synonym among the k gold synonyms most
/// similar to the mention. Examples with an explicit `target` yield exactly
/// that target.
std::vector<PositiveInstance> build_positive_set(std::span<const MentionExample> examples,
                                                 const KnowledgeBase& kb, const TfIdfIndex& idx,
                                                 const Vocab& vocab, std::size_t k = kDefaultSynonymTargets,
                                                 std::size_t max_ctx = kDefaultMaxContext);

/// Label-smoothed cross-entropy averaged over target positions, with the
/// smoothed target q = (1 − ε)·onehot + ε/V. When `grad` is non-null the
/// gradient times `grad_scale` is accumulated into it.
double ce_loss(const Parameters& params, const PositiveInstance& instance, double smoothing,
               Parameters* grad = nullptr, double grad_scale = 1.0);

struct LossPoint {
    std::int64_t step;
    double loss;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<LossPoint> losses;
};

using StepCallback = std::function<void(const LossPoint&)>;

/// Stage-1 training. Mini-batches walk a seeded per-epoch shuffle (the last
/// batch of an epoch may be short); each step clips the global gradient norm
/// and applies AdamW. Throws NumericError naming the step on a non-finite loss.
TrainResult train_positive(const Checkpoint& init, std::span<const PositiveInstance> instances,
                           const OptimizerConfig& opt, std::uint64_t seed,
                           const StepCallback& on_step = {});

}  // namespace synlink
