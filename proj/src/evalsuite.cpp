#include "synlink/evalsuite.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "synlink/error.hpp"
#include "synlink/random.hpp"

namespace synlink {

double acc_at_k(std::span<const GoldRank> ranks, std::size_t k) {
    if (ranks.empty()) {
        throw UsageError("accuracy over zero examples is undefined");
    }
    const auto hits = std::count_if(ranks.begin(), ranks.end(),
                                    [k](const GoldRank& r) { return r && *r <= k; });
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double acc_at_k(std::span<const std::vector<Prediction>> predictions,
                std::span<const ConceptIdSet> gold, std::size_t k) {
    if (predictions.size() != gold.size()) {
        throw UsageError("prediction and gold lists differ in length");
    }
    std::vector<GoldRank> ranks;
    ranks.reserve(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        ranks.push_back(rank_of_gold(predictions[i], gold[i]));
    }
    return acc_at_k(ranks, k);
}

EvalReport make_report(std::vector<GoldRank> ranks, std::span<const std::size_t> ks) {
    static constexpr std::size_t kDefaultKs[] = {1, 5};
    if (ks.empty()) {
        ks = kDefaultKs;
    }
    EvalReport r;
    r.n = ranks.size();
    for (std::size_t k : ks) {
        r.acc_at[k] = acc_at_k(ranks, k);
    }
    r.per_example = std::move(ranks);
    return r;
}

EvalReport kfold_aggregate(std::span<const EvalReport> reports) {
    if (reports.empty()) {
        throw UsageError("k-fold aggregation needs at least one report");
    }
    EvalReport out;
    for (const auto& [k, acc] : reports.front().acc_at) {
        out.acc_at[k] = 0.0;
    }
    for (const auto& r : reports) {
        if (r.acc_at.size() != out.acc_at.size() ||
            !std::equal(r.acc_at.begin(), r.acc_at.end(), out.acc_at.begin(),
                        [](const auto& a, const auto& b) { return a.first == b.first; })) {
            throw UsageError("fold reports disagree on their k values");
        }
        for (const auto& [k, acc] : r.acc_at) {
            out.acc_at[k] += acc;
        }
        out.n += r.n;
        out.per_example.insert(out.per_example.end(), r.per_example.begin(), r.per_example.end());
    }
    for (auto& [k, acc] : out.acc_at) {
        acc /= static_cast<double>(reports.size());
    }
    return out;
}

PairedTestResult bootstrap_paired_test(std::span<const GoldRank> ranks_a,
                                       std::span<const GoldRank> ranks_b, std::size_t k,
                                       std::size_t resamples, std::uint64_t seed) {
    if (ranks_a.size() != ranks_b.size()) {
        throw UsageError("paired test needs rank lists of equal length");
    }
    if (ranks_a.empty()) {
        throw UsageError("paired test over zero examples");
    }
    if (resamples < 2) {
        throw UsageError("paired test needs at least two resamples");
    }
    const std::size_t n = ranks_a.size();
    const auto hit = [k](const GoldRank& r) { return r && *r <= k ? 1 : 0; };

    PairedTestResult res;
    res.differences.reserve(resamples);
    Rng rng(seed);
    for (std::size_t s = 0; s < resamples; ++s) {
        long diff = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = rng.below(n);
            diff += hit(ranks_a[j]) - hit(ranks_b[j]);
        }
        res.differences.push_back(static_cast<double>(diff) / static_cast<double>(n));
    }

    const double m = static_cast<double>(resamples);
    double mean = 0.0;
    for (double d : res.differences) {
        mean += d;
    }
    mean /= m;
    double ss = 0.0;
    for (double d : res.differences) {
        ss += (d - mean) * (d - mean);
    }
    res.mean_diff = mean;
    const double sd = std::sqrt(ss / (m - 1.0));
    if (sd == 0.0) {
        res.t_statistic = 0.0;
        res.p_value = mean == 0.0 ? 1.0 : 0.0;
        return res;
    }
    res.t_statistic = mean / (sd / std::sqrt(m));
    const boost::math::students_t dist(m - 1.0);
    res.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(res.t_statistic)));
    return res;
}

std::size_t bin_index(double s, std::size_t n_bins) {
    if (!(s >= 0.0)) {
        return 0;
    }
    const auto b = static_cast<std::size_t>(std::floor(s * static_cast<double>(n_bins)));
    return std::min(b, n_bins - 1);
}

namespace {

template <class BinT>
std::vector<BinT> make_bins(std::size_t n) {
    std::vector<BinT> bins(n);
    for (std::size_t i = 0; i < n; ++i) {
        bins[i].lo = static_cast<double>(i) / static_cast<double>(n);
        bins[i].hi = static_cast<double>(i + 1) / static_cast<double>(n);
    }
    return bins;
}

}  // namespace

BinnedReport binned_error_report(std::span<const MentionExample> examples,
                                 std::span<const std::vector<Prediction>> predictions,
                                 const KnowledgeBase& kb, const TfIdfIndex& idx) {
    if (examples.size() != predictions.size()) {
        throw UsageError("binned report: examples and predictions differ in length");
    }
    BinnedReport r;
    r.bins = make_bins<Bin>(5);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        double best = 0.0;
        for (const auto& syn : kb.synonyms_of(ex.gold_ids)) {
            best = std::max(best, idx.similarity(ex.mention, syn));
        }
        Bin& b = r.bins[bin_index(best, r.bins.size())];
        ++b.count;
        if (rank_of_gold(predictions[i], ex.gold_ids) != std::optional<std::size_t>{1}) {
            ++b.errors;
        }
    }
    for (auto& b : r.bins) {
        if (b.count > 0) {
            b.accuracy = static_cast<double>(b.count - b.errors) / static_cast<double>(b.count);
        }
    }
    return r;
}

GapReport logprob_gap_report(const Checkpoint& ckpt, std::span<const MentionExample> examples,
                             std::span<const std::vector<Prediction>> predictions,
                             const KnowledgeBase& kb, const TfIdfIndex& idx, std::size_t max_ctx) {
    if (examples.size() != predictions.size()) {
        throw UsageError("gap report: examples and predictions differ in length");
    }
    GapReport r;
    r.bins = make_bins<GapBin>(kGapBins);
    std::vector<double> sums(kGapBins, 0.0);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        const auto& preds = predictions[i];
        std::optional<double> positive;
        for (const auto& p : preds) {
            if (intersects(p.ids, ex.gold_ids)) {
                positive = p.score;
                break;
            }
        }
        bool has_negative = std::any_of(preds.begin(), preds.end(), [&](const Prediction& p) {
            return !intersects(p.ids, ex.gold_ids);
        });
        if (!has_negative) {
            continue;
        }
        if (!positive) {
            const auto nearest = idx.rank_synonyms(ex.mention, kb.synonyms_of(ex.gold_ids), 1);
            if (nearest.empty()) {
                continue;
            }
            positive = log_prob(ckpt.params, render(ex, ckpt.vocab, max_ctx),
                                ckpt.vocab.encode_entity(nearest.front()));
        }
        for (const auto& p : preds) {
            if (intersects(p.ids, ex.gold_ids)) {
                continue;
            }
            GapPair g{i, p.name, idx.similarity(ex.mention, p.name), *positive - p.score};
            const std::size_t b = bin_index(g.similarity, kGapBins);
            ++r.bins[b].count;
            sums[b] += g.gap;
            r.pairs.push_back(std::move(g));
        }
    }
    for (std::size_t b = 0; b < kGapBins; ++b) {
        if (r.bins[b].count > 0) {
            r.bins[b].mean_gap = sums[b] / static_cast<double>(r.bins[b].count);
        }
    }
    return r;
}

std::vector<std::vector<Prediction>> predict_all(const Checkpoint& ckpt,
                                                 std::span<const MentionExample> examples,
                                                 const TokenTrie& trie, const KnowledgeBase& kb,
                                                 BeamConfig cfg, std::size_t max_ctx) {
    std::vector<std::vector<Prediction>> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
        out.push_back(constrained_beam_search(ckpt.params, ckpt.vocab, render(ex, ckpt.vocab, max_ctx),
                                              trie, kb, cfg));
    }
    return out;
}

std::vector<GoldRank> gold_ranks(std::span<const std::vector<Prediction>> predictions,
                                 std::span<const MentionExample> examples) {
    if (predictions.size() != examples.size()) {
        throw UsageError("gold_ranks: examples and predictions differ in length");
    }
    std::vector<GoldRank> out;
    out.reserve(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        out.push_back(rank_of_gold(predictions[i], examples[i].gold_ids));
    }
    return out;
}

}  // namespace synlink
