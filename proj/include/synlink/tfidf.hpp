#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "synlink/kb.hpp"

namespace synlink {

/// Sparse unit-norm vector, entries sorted by trigram.
using TrigramVector = std::vector<std::pair<std::string, double>>;

/// Character trigrams of `s` padded with one '#' on each side, in order of
/// occurrence (a multiset). Empty input gives no trigrams.
std::vector<std::string> trigrams(std::string_view s);

/// Character-trigram TF-IDF over a fixed document set (the KB names).
/// Weights are raw tf times smoothed idf ln((1+N)/(1+df))+1, L2-normalized.
class TfIdfIndex {
public:
    /// Throws UsageError on an empty list. Duplicate names are collapsed.
    static TfIdfIndex build(std::span<const std::string> names);
    static TfIdfIndex build(const KnowledgeBase& kb) { return build(kb.all_names()); }

    std::size_t n_docs() const noexcept { return n_docs_; }
    std::size_t df(const std::string& trigram) const;
    double idf(const std::string& trigram) const;

    /// Vector of an arbitrary string; unseen trigrams use df = 0.
    TrigramVector vectorize(std::string_view s) const;

    double similarity(std::string_view a, std::string_view b) const;

    /// Cosine of two vectors, summed in ascending trigram order.
    static double cosine(const TrigramVector& a, const TrigramVector& b);

    /// `candidates` sorted by similarity to `mention` (descending, ties by
    /// name ascending), truncated to k.
    std::vector<std::string> rank_synonyms(std::string_view mention,
                                           std::span<const std::string> candidates,
                                           std::size_t k) const;

    /// Scored variant of rank_synonyms.
    std::vector<std::pair<std::string, double>> rank_scored(
        std::string_view mention, std::span<const std::string> candidates, std::size_t k) const;

    /// The k indexed names most similar to `mention` whose identifiers are
    /// disjoint from `exclude`. Requires the index to be built over `kb`.
    std::vector<std::string> hard_negatives(std::string_view mention, const KnowledgeBase& kb,
                                            std::span<const ConceptId> exclude,
                                            std::size_t k) const;

    const std::vector<std::string>& names() const noexcept { return names_; }

private:
    const TrigramVector* cached(std::string_view name) const;

    std::size_t n_docs_ = 0;
    std::map<std::string, std::size_t, std::less<>> df_;
    std::vector<std::string> names_;  // sorted, unique
    std::vector<TrigramVector> vectors_;
    std::unordered_map<std::string, std::vector<std::size_t>> postings_;  // trigram -> name indices
};

}  // namespace synlink
