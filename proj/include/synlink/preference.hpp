#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synlink/corpus.hpp"
#include "synlink/decoder.hpp"
#include "synlink/kb.hpp"
#include "synlink/model.hpp"
#include "synlink/optim.hpp"
#include "synlink/tfidf.hpp"
#include "synlink/train_positive.hpp"
#include "synlink/trie.hpp"

namespace synlink {

enum class LossKind { kPairwise, kDpo, kCpo, kSimpo };
enum class NegativeSource { kPredictions, kTfIdf };
enum class PairPolicy { kFiltered, kAll };

std::string_view loss_kind_name(LossKind k);
LossKind parse_loss_kind(std::string_view s);

/// (x, preferred e_w, dispreferred e_l). Ranks are 1-based positions in the
/// model's top-k list, absent when the entity did not come from it.
struct PreferenceTriplet {
    std::size_t example_index = 0;
    EncodedInput input;
    std::string preferred;
    std::string dispreferred;
    std::optional<std::size_t> rank_w;
    std::optional<std::size_t> rank_l;
};

struct PreferenceConfig {
    LossKind loss = LossKind::kDpo;
    double beta = 0.1;
    double cpo_lambda = 1.0;
    double simpo_gamma = 0.5;
    int epochs = 1;
    OptimizerConfig opt{.learning_rate = 1e-5, .warmup_steps = 0, .batch_size = 16};

    void validate() const;
};

struct MiningConfig {
    std::size_t top_k = 5;
    std::size_t beam = 5;
    NegativeSource negatives = NegativeSource::kPredictions;
    PairPolicy pairs = PairPolicy::kFiltered;
    /// Negatives paired with the fallback positive when no correct entity is
    /// in the top-k (and the count used for TF-IDF negatives).
    std::size_t fallback_negatives = 3;
};

struct MinedPair {
    std::string preferred;
    std::string dispreferred;
    std::optional<std::size_t> rank_w;
    std::optional<std::size_t> rank_l;

    friend auto operator<=>(const MinedPair&, const MinedPair&) = default;
};

/// Pair-construction rules applied to one ranked prediction list:
///  (a) each correct prediction is paired with every incorrect one ranked above it;
///  (b) a correct rank-1 prediction is paired once with the best incorrect one;
///  (c) with no correct prediction, `fallback_positive` is paired with the
///      first `fallback_negatives` incorrect predictions.
/// PairPolicy::kAll replaces (a)/(b) with every (correct, incorrect) pair.
/// Output is deduplicated on (e_w, e_l), in order of first emission.
std::vector<MinedPair> pairs_from_predictions(std::span<const Prediction> predictions,
                                              std::span<const ConceptId> gold,
                                              const std::string& fallback_positive,
                                              PairPolicy policy = PairPolicy::kFiltered,
                                              std::size_t fallback_negatives = 3);

/// Runs constrained beam search over every example and applies the pair
/// rules (or TF-IDF negatives) to build the preference dataset.
std::vector<PreferenceTriplet> mine_pairs(const Checkpoint& ckpt,
                                          std::span<const MentionExample> examples,
                                          const KnowledgeBase& kb, const TokenTrie& trie,
                                          const TfIdfIndex& idx, const MiningConfig& cfg,
                                          std::size_t max_ctx = kDefaultMaxContext);

/// Sequence-level quantities a preference objective depends on.
struct PairScores {
    double logp_w = 0.0;
    double logp_l = 0.0;
    double ref_w = 0.0;  // reference log-probs; used by dpo only
    double ref_l = 0.0;
    std::size_t len_w = 1;  // token counts including [EOS]
    std::size_t len_l = 1;
};

struct PairLoss {
    double loss = 0.0;
    double margin = 0.0;   // the argument of σ
    double dlogp_w = 0.0;  // ∂loss/∂log p_θ(e_w|x)
    double dlogp_l = 0.0;
};

/// Closed-form objective: pairwise and dpo use −log σ(β(r_w − r_l)) with
/// r = log p_θ (pairwise) or log p_θ − log p_ref (dpo); cpo adds
/// −λ·log p_θ(e_w)/|e_w|; simpo uses −log σ(β·lp_w/|e_w| − β·lp_l/|e_l| − γ).
PairLoss pair_objective(const PairScores& s, const PreferenceConfig& cfg);

/// Reference log-probs (log p_ref(e_w|x), log p_ref(e_l|x)).
std::pair<double, double> reference_scores(const Parameters& ref, const Vocab& vocab,
                                           const PreferenceTriplet& t);

/// Loss of one triplet. `ref` supplies reference log-probs for dpo (either a
/// model or precomputed values). Accumulates grad × grad_scale when `grad`
/// is non-null.
double preference_loss(const Parameters& params, const Vocab& vocab,
                       std::pair<double, double> ref_scores, const PreferenceTriplet& t,
                       const PreferenceConfig& cfg, Parameters* grad = nullptr,
                       double grad_scale = 1.0, double* margin = nullptr);

double preference_loss(const Parameters& params, const Parameters& ref, const Vocab& vocab,
                       const PreferenceTriplet& t, const PreferenceConfig& cfg,
                       Parameters* grad = nullptr, double grad_scale = 1.0);

struct PreferenceStats {
    double mean_loss = 0.0;
    double mean_margin = 0.0;
};

/// Mean loss and margin over a triplet set against a fixed reference.
PreferenceStats evaluate_preference(const Parameters& params, const Parameters& ref,
                                    const Vocab& vocab, std::span<const PreferenceTriplet> triplets,
                                    const PreferenceConfig& cfg);

/// Stage-2 training against a frozen copy of `init` as reference.
TrainResult train_preference(const Checkpoint& init, std::span<const PreferenceTriplet> triplets,
                             const PreferenceConfig& cfg, std::uint64_t seed,
                             const StepCallback& on_step = {});

}  // namespace synlink
