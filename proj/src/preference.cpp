#include "synlink/preference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "synlink/error.hpp"
#include "synlink/random.hpp"

namespace synlink {

namespace {

/// −log σ(z), computed without overflow.
double neg_log_sigmoid(double z) {
    return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

std::string_view loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::kPairwise:
            return "pairwise";
        case LossKind::kDpo:
            return "dpo";
        case LossKind::kCpo:
            return "cpo";
        case LossKind::kSimpo:
            return "simpo";
    }
    return "dpo";
}

LossKind parse_loss_kind(std::string_view s) {
    for (LossKind k : {LossKind::kPairwise, LossKind::kDpo, LossKind::kCpo, LossKind::kSimpo}) {
        if (loss_kind_name(k) == s) {
            return k;
        }
    }
    throw UsageError("unknown loss kind '" + std::string(s) + "'");
}

void PreferenceConfig::validate() const {
    if (!(beta > 0.0)) {
        throw UsageError("beta must be positive");
    }
    if (epochs < 1) {
        throw UsageError("epochs must be at least 1");
    }
    opt.validate();
}

// ---------------------------------------------------------------------------
// Mining

std::vector<MinedPair> pairs_from_predictions(std::span<const Prediction> predictions,
                                              std::span<const ConceptId> gold,
                                              const std::string& fallback_positive,
                                              PairPolicy policy, std::size_t fallback_negatives) {
    std::vector<MinedPair> out;
    std::set<std::pair<std::string, std::string>> seen;
    const auto emit = [&](const std::string& w, const std::string& l,
                          std::optional<std::size_t> rw, std::optional<std::size_t> rl) {
        if (w != l && seen.emplace(w, l).second) {
            out.push_back({w, l, rw, rl});
        }
    };

    std::vector<std::size_t> correct;
    std::vector<std::size_t> incorrect;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        (intersects(predictions[i].ids, gold) ? correct : incorrect).push_back(i);
    }

    if (correct.empty()) {
        for (std::size_t j = 0; j < incorrect.size() && j < fallback_negatives; ++j) {
            const std::size_t l = incorrect[j];
            emit(fallback_positive, predictions[l].name, std::nullopt, l + 1);
        }
        return out;
    }

    if (policy == PairPolicy::kAll) {
        for (std::size_t w : correct) {
            for (std::size_t l : incorrect) {
                emit(predictions[w].name, predictions[l].name, w + 1, l + 1);
            }
        }
        return out;
    }

    for (std::size_t w : correct) {
        for (std::size_t l : incorrect) {
            if (l < w) {
                emit(predictions[w].name, predictions[l].name, w + 1, l + 1);
            }
        }
    }
    if (correct.front() == 0 && !incorrect.empty()) {
        const std::size_t l = incorrect.front();
        emit(predictions[0].name, predictions[l].name, 1, l + 1);
    }
    return out;
}

std::vector<PreferenceTriplet> mine_pairs(const Checkpoint& ckpt,
                                          std::span<const MentionExample> examples,
                                          const KnowledgeBase& kb, const TokenTrie& trie,
                                          const TfIdfIndex& idx, const MiningConfig& cfg,
                                          std::size_t max_ctx) {
    if (cfg.top_k < 2) {
        throw UsageError("mining needs top_k >= 2");
    }
    if (ckpt.stage == Stage::kInit) {
        throw UsageError("mining requires a trained checkpoint (stage positive)");
    }
    std::vector<PreferenceTriplet> out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        const EncodedInput input = render(ex, ckpt.vocab, max_ctx);
        const auto synonyms = kb.synonyms_of(ex.gold_ids);
        const auto nearest = idx.rank_synonyms(ex.mention, synonyms, 1);
        if (nearest.empty()) {
            continue;
        }
        const auto preds = constrained_beam_search(ckpt.params, ckpt.vocab, input, trie, kb,
                                                   {std::max(cfg.beam, cfg.top_k), cfg.top_k});
        std::vector<MinedPair> pairs;
        if (cfg.negatives == NegativeSource::kTfIdf) {
            std::string positive = nearest.front();
            std::optional<std::size_t> rank_w;
            for (std::size_t r = 0; r < preds.size(); ++r) {
                if (intersects(preds[r].ids, ex.gold_ids)) {
                    positive = preds[r].name;
                    rank_w = r + 1;
                    break;
                }
            }
            for (auto& neg : idx.hard_negatives(ex.mention, kb, ex.gold_ids, cfg.fallback_negatives)) {
                pairs.push_back({positive, std::move(neg), rank_w, std::nullopt});
            }
        } else {
            pairs = pairs_from_predictions(preds, ex.gold_ids, nearest.front(), cfg.pairs,
                                           cfg.fallback_negatives);
        }
        for (auto& p : pairs) {
            PreferenceTriplet t;
            t.example_index = i;
            t.input = input;
            t.preferred = std::move(p.preferred);
            t.dispreferred = std::move(p.dispreferred);
            t.rank_w = p.rank_w;
            t.rank_l = p.rank_l;
            out.push_back(std::move(t));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Objectives

PairLoss pair_objective(const PairScores& s, const PreferenceConfig& cfg) {
    PairLoss r;
    const double beta = cfg.beta;
    switch (cfg.loss) {
        case LossKind::kPairwise:
        case LossKind::kDpo: {
            const double rw = cfg.loss == LossKind::kDpo ? s.logp_w - s.ref_w : s.logp_w;
            const double rl = cfg.loss == LossKind::kDpo ? s.logp_l - s.ref_l : s.logp_l;
            r.margin = beta * (rw - rl);
            const double g = sigmoid(r.margin) - 1.0;  // d(−log σ(z))/dz
            r.loss = neg_log_sigmoid(r.margin);
            r.dlogp_w = g * beta;
            r.dlogp_l = -g * beta;
            break;
        }
        case LossKind::kCpo: {
            const double len_w = static_cast<double>(s.len_w);
            r.margin = beta * (s.logp_w - s.logp_l);
            const double g = sigmoid(r.margin) - 1.0;
            r.loss = neg_log_sigmoid(r.margin) - cfg.cpo_lambda * s.logp_w / len_w;
            r.dlogp_w = g * beta - cfg.cpo_lambda / len_w;
            r.dlogp_l = -g * beta;
            break;
        }
        case LossKind::kSimpo: {
            const double bw = beta / static_cast<double>(s.len_w);
            const double bl = beta / static_cast<double>(s.len_l);
            r.margin = bw * s.logp_w - bl * s.logp_l - cfg.simpo_gamma;
            const double g = sigmoid(r.margin) - 1.0;
            r.loss = neg_log_sigmoid(r.margin);
            r.dlogp_w = g * bw;
            r.dlogp_l = -g * bl;
            break;
        }
    }
    return r;
}

std::pair<double, double> reference_scores(const Parameters& ref, const Vocab& vocab,
                                           const PreferenceTriplet& t) {
    return {log_prob(ref, t.input, vocab.encode_entity(t.preferred)),
            log_prob(ref, t.input, vocab.encode_entity(t.dispreferred))};
}

double preference_loss(const Parameters& params, const Vocab& vocab,
                       std::pair<double, double> ref_scores, const PreferenceTriplet& t,
                       const PreferenceConfig& cfg, Parameters* grad, double grad_scale,
                       double* margin) {
    const auto tokens_w = vocab.encode_entity(t.preferred);
    const auto tokens_l = vocab.encode_entity(t.dispreferred);
    const SequenceTrace tw = forward(params, t.input, tokens_w);
    const SequenceTrace tl = forward(params, t.input, tokens_l);
    PairScores s;
    s.logp_w = tw.log_prob;
    s.logp_l = tl.log_prob;
    s.ref_w = ref_scores.first;
    s.ref_l = ref_scores.second;
    s.len_w = tokens_w.size();
    s.len_l = tokens_l.size();
    const PairLoss r = pair_objective(s, cfg);
    if (!std::isfinite(r.loss)) {
        throw NumericError("preference loss is not finite");
    }
    if (margin != nullptr) {
        *margin = r.margin;
    }
    if (grad != nullptr) {
        backward(params, tw, log_prob_dlogits(tw, r.dlogp_w * grad_scale), *grad);
        backward(params, tl, log_prob_dlogits(tl, r.dlogp_l * grad_scale), *grad);
    }
    return r.loss;
}

double preference_loss(const Parameters& params, const Parameters& ref, const Vocab& vocab,
                       const PreferenceTriplet& t, const PreferenceConfig& cfg, Parameters* grad,
                       double grad_scale) {
    const auto refs = cfg.loss == LossKind::kDpo ? reference_scores(ref, vocab, t)
                                                 : std::pair<double, double>{0.0, 0.0};
    return preference_loss(params, vocab, refs, t, cfg, grad, grad_scale);
}

PreferenceStats evaluate_preference(const Parameters& params, const Parameters& ref,
                                    const Vocab& vocab, std::span<const PreferenceTriplet> triplets,
                                    const PreferenceConfig& cfg) {
    PreferenceStats st;
    if (triplets.empty()) {
        return st;
    }
    for (const auto& t : triplets) {
        const auto refs = cfg.loss == LossKind::kDpo ? reference_scores(ref, vocab, t)
                                                     : std::pair<double, double>{0.0, 0.0};
        double margin = 0.0;
        st.mean_loss += preference_loss(params, vocab, refs, t, cfg, nullptr, 1.0, &margin);
        st.mean_margin += margin;
    }
    st.mean_loss /= static_cast<double>(triplets.size());
    st.mean_margin /= static_cast<double>(triplets.size());
    return st;
}

TrainResult train_preference(const Checkpoint& init, std::span<const PreferenceTriplet> triplets,
                             const PreferenceConfig& cfg, std::uint64_t seed,
                             const StepCallback& on_step) {
    cfg.validate();
    if (triplets.empty()) {
        throw UsageError("preference training needs at least one triplet");
    }
    TrainResult result{init, {}};
    Checkpoint& ckpt = result.checkpoint;

    // The reference is the frozen input model; its scores never change.
    std::vector<std::pair<double, double>> refs(triplets.size(), {0.0, 0.0});
    if (cfg.loss == LossKind::kDpo) {
        for (std::size_t i = 0; i < triplets.size(); ++i) {
            refs[i] = reference_scores(init.params, init.vocab, triplets[i]);
        }
    }

    AdamState state;
    Parameters grad = ckpt.params.zeros_like();
    Rng rng(seed);
    std::vector<std::size_t> order(triplets.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = cfg.opt.batch_size;
    std::int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        for (std::size_t begin = 0; begin < order.size(); begin += batch) {
            const std::size_t end = std::min(order.size(), begin + batch);
            const double scale = 1.0 / static_cast<double>(end - begin);
            grad.set_zero();
            double loss = 0.0;
            for (std::size_t b = begin; b < end; ++b) {
                const std::size_t i = order[b];
                loss += scale * preference_loss(ckpt.params, ckpt.vocab, refs[i], triplets[i], cfg,
                                                &grad, scale);
            }
            ++step;
            if (!std::isfinite(loss) || !grad.all_finite()) {
                throw NumericError("preference training diverged at step " + std::to_string(step));
            }
            clip_global_norm(grad, cfg.opt.grad_clip);
            adamw_step(ckpt.params, grad, state, cfg.opt);
            const LossPoint point{step, loss};
            result.losses.push_back(point);
            if (on_step) {
                on_step(point);
            }
        }
    }
    ckpt.stage = Stage::kNegative;
    if (state.step > 0) {
        ckpt.optimizer = std::move(state);
    }
    return result;
}

}  // namespace synlink
