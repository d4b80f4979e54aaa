#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synlink/corpus.hpp"
#include "synlink/kb.hpp"
#include "synlink/model.hpp"
#include "synlink/trie.hpp"

namespace synlink {

struct Prediction {
    std::string name;
    ConceptIdSet ids;
    double score = 0.0;  // log p(name | input), prompt excluded
};

struct BeamConfig {
    std::size_t beam = 5;
    std::size_t top_k = 5;
};

/// Beam search whose expansions are masked by the trie, so every finished
/// hypothesis is a KB name. The prompt is consumed unconstrained first.
/// Returns at most top_k hypotheses ordered by descending summed log-prob,
/// ties broken by name.
std::vector<Prediction> constrained_beam_search(const Parameters& params, const Vocab& vocab,
                                                const EncodedInput& input, const TokenTrie& trie,
                                                const KnowledgeBase& kb, BeamConfig cfg);

/// 1-based rank of the first prediction whose ids meet `gold`.
std::optional<std::size_t> rank_of_gold(std::span<const Prediction> predictions,
                                        std::span<const ConceptId> gold);

}  // namespace synlink
