#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synlink/corpus.hpp"
#include "synlink/decoder.hpp"
#include "synlink/kb.hpp"
#include "synlink/model.hpp"
#include "synlink/tfidf.hpp"

namespace synlink {

using GoldRank = std::optional<std::size_t>;

struct EvalReport {
    std::map<std::size_t, double> acc_at;  // k → accuracy
    std::size_t n = 0;
    std::vector<GoldRank> per_example;
};

/// Fraction of examples whose gold rank is ≤ k. Throws UsageError when empty.
double acc_at_k(std::span<const GoldRank> ranks, std::size_t k);

/// Gold ranks computed from prediction lists, then acc_at_k per requested k.
double acc_at_k(std::span<const std::vector<Prediction>> predictions,
                std::span<const ConceptIdSet> gold, std::size_t k);

EvalReport make_report(std::vector<GoldRank> ranks, std::span<const std::size_t> ks = {});

/// Unweighted mean of acc_at across folds. Throws when k sets differ.
EvalReport kfold_aggregate(std::span<const EvalReport> reports);

struct PairedTestResult {
    double mean_diff = 0.0;  // mean over resamples of Acc@k(A) − Acc@k(B)
    double t_statistic = 0.0;
    double p_value = 1.0;    // two-sided
    std::vector<double> differences;
};

/// Draws `resamples` bootstrap samples of the example indices (n with
/// replacement), records the Acc@k difference A − B on each, then runs a
/// one-sample t-test of the differences against zero. Zero variance gives
/// p = 1 when the mean is 0 and p = 0 otherwise.
PairedTestResult bootstrap_paired_test(std::span<const GoldRank> ranks_a,
                                       std::span<const GoldRank> ranks_b, std::size_t k,
                                       std::size_t resamples, std::uint64_t seed);

struct Bin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    std::size_t errors = 0;
    std::optional<double> accuracy;  // absent for an empty bin
};

struct BinnedReport {
    std::vector<Bin> bins;
};

/// Index of the equal-width bin over [0, 1] holding `s`; 1.0 goes to the last bin.
std::size_t bin_index(double s, std::size_t n_bins);

/// Acc@1 binned by the best TF-IDF similarity between each mention and its
/// gold synonyms, over five bins.
BinnedReport binned_error_report(std::span<const MentionExample> examples,
                                 std::span<const std::vector<Prediction>> predictions,
                                 const KnowledgeBase& kb, const TfIdfIndex& idx);

struct GapPair {
    std::size_t example_index = 0;
    std::string negative;
    double similarity = 0.0;
    double gap = 0.0;  // log p(best positive) − log p(negative)
};

struct GapBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    std::optional<double> mean_gap;
};

struct GapReport {
    std::vector<GapBin> bins;
    std::vector<GapPair> pairs;
};

inline constexpr std::size_t kGapBins = 10;

/// For every incorrect name in each top-k list, the log-prob gap between the
/// highest-ranked correct prediction and that name, binned by the name's
/// TF-IDF similarity to the mention. When no correct name is in the list the
/// positive is the gold synonym most similar to the mention, scored by the model.
GapReport logprob_gap_report(const Checkpoint& ckpt, std::span<const MentionExample> examples,
                             std::span<const std::vector<Prediction>> predictions,
                             const KnowledgeBase& kb, const TfIdfIndex& idx,
                             std::size_t max_ctx = kDefaultMaxContext);

/// Constrained beam search over every example.
std::vector<std::vector<Prediction>> predict_all(const Checkpoint& ckpt,
                                                 std::span<const MentionExample> examples,
                                                 const TokenTrie& trie, const KnowledgeBase& kb,
                                                 BeamConfig cfg,
                                                 std::size_t max_ctx = kDefaultMaxContext);

std::vector<GoldRank> gold_ranks(std::span<const std::vector<Prediction>> predictions,
                                 std::span<const MentionExample> examples);

}  // namespace synlink
