#include "synlink/train_positive.hpp"

#include <cmath>
#include <numeric>

#include "synlink/error.hpp"
#include "synlink/random.hpp"

namespace synlink {

std::vector<PositiveInstance> build_positive_set(std::span<const MentionExample> examples,
                                                 const KnowledgeBase& kb, const TfIdfIndex& idx,
                                                 const Vocab& vocab, std::size_t k,
                                                 std::size_t max_ctx) {
    if (k == 0) {
        throw UsageError("synonym count k must be at least 1");
    }
    std::vector<PositiveInstance> out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        std::vector<std::string> targets;
        if (ex.target) {
            targets.push_back(*ex.target);
        } else {
            const auto synonyms = kb.synonyms_of(ex.gold_ids);
            targets = idx.rank_synonyms(ex.mention, synonyms, k);
        }
        const EncodedInput input = render(ex, vocab, max_ctx);
        for (auto& name : targets) {
            PositiveInstance inst;
            inst.input = input;
            inst.target = vocab.encode_entity(name);
            inst.target_name = std::move(name);
            inst.example_index = i;
            out.push_back(std::move(inst));
        }
    }
    return out;
}

double ce_loss(const Parameters& params, const PositiveInstance& instance, double smoothing,
               Parameters* grad, double grad_scale) {
    const SequenceTrace tr = forward(params, instance.input, instance.target);
    const auto steps = static_cast<double>(tr.scored_steps());
    const int vocab = params.vocab_size();
    const double off = smoothing / vocab;
    const double on = 1.0 - smoothing + off;

    double loss = 0.0;
    for (std::size_t t = 0; t < tr.probs.size(); ++t) {
        // −Σ_v q_v log p_v with log p taken from the stored softmax.
        const Vector& logp = tr.log_probs[t];
        loss -= off * logp.sum() + (on - off) * logp(tr.targets[t]);
    }
    loss /= steps;
    if (!std::isfinite(loss)) {
        throw NumericError("cross-entropy loss is not finite");
    }
    if (grad != nullptr) {
        std::vector<Vector> dlogits;
        dlogits.reserve(tr.probs.size());
        for (std::size_t t = 0; t < tr.probs.size(); ++t) {
            Vector g = tr.probs[t].array() - off;
            g(tr.targets[t]) -= on - off;
            dlogits.push_back(g * (grad_scale / steps));
        }
        backward(params, tr, dlogits, *grad);
    }
    return loss;
}

TrainResult train_positive(const Checkpoint& init, std::span<const PositiveInstance> instances,
                           const OptimizerConfig& opt, std::uint64_t seed,
                           const StepCallback& on_step) {
    opt.validate();
    if (instances.empty()) {
        throw UsageError("positive training needs at least one instance");
    }
    TrainResult result{init, {}};
    Checkpoint& ckpt = result.checkpoint;
    AdamState state;
    Parameters grad = ckpt.params.zeros_like();

    Rng rng(seed);
    std::vector<std::size_t> order(instances.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();

    for (std::int64_t s = 1; s <= opt.steps; ++s) {
        if (cursor >= order.size()) {
            rng.shuffle(std::span(order));
            cursor = 0;
        }
        const std::size_t end = std::min(order.size(), cursor + opt.batch_size);
        const double scale = 1.0 / static_cast<double>(end - cursor);
        grad.set_zero();
        double loss = 0.0;
        for (std::size_t b = cursor; b < end; ++b) {
            loss += scale * ce_loss(ckpt.params, instances[order[b]], opt.label_smoothing, &grad, scale);
        }
        cursor = end;
        if (!std::isfinite(loss) || !grad.all_finite()) {
            throw NumericError("positive training diverged at step " + std::to_string(s));
        }
        clip_global_norm(grad, opt.grad_clip);
        adamw_step(ckpt.params, grad, state, opt);
        const LossPoint point{s, loss};
        result.losses.push_back(point);
        if (on_step) {
            on_step(point);
        }
    }
    ckpt.stage = Stage::kPositive;
    if (state.step > 0) {
        ckpt.optimizer = std::move(state);
    }
    return result;
}

}  // namespace synlink
