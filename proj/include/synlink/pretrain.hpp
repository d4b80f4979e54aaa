#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "synlink/corpus.hpp"
#include "synlink/kb.hpp"
#include "synlink/preference.hpp"
#include "synlink/tfidf.hpp"

namespace synlink {

enum class SynthSource { kDefinition, kSynonym };

/// A KB-only training example. `example` is in the ordinary mention format:
/// the clause text sits in the right context and `example.target` holds the
/// synonym to generate.
struct SyntheticExample {
    MentionExample example;
    ConceptId concept_id;
    SynthSource source = SynthSource::kDefinition;
};

struct SynthConfig {
    std::size_t max_definition_examples = 8;  // per concept
    std::size_t max_synonym_examples = 8;     // per concept
};

/// `[ST] s [ET] is defined as d` for every synonym s of a concept with a
/// definition; the target is the most TF-IDF-similar other synonym (the name
/// itself for single-name concepts).
std::vector<SyntheticExample> gen_definition_examples(const KnowledgeBase& kb, const TfIdfIndex& idx,
                                                      const SynthConfig& cfg = {});

/// `[ST] s1 [ET] has synonyms such as s2` for concepts without a definition
/// and at least two names. s2 is the synonym nearest s1; the target is the
/// synonym nearest s1 among the rest, or s2 when only two names exist.
std::vector<SyntheticExample> gen_synonym_examples(const KnowledgeBase& kb, const TfIdfIndex& idx,
                                                   const SynthConfig& cfg = {});

/// Both generators, definitions first.
std::vector<SyntheticExample> gen_synthetic_examples(const KnowledgeBase& kb, const TfIdfIndex& idx,
                                                     const SynthConfig& cfg = {});

/// One triplet per (synthetic example, negative) where the negatives are the
/// k names nearest the marked synonym under other identifiers. The example
/// index refers to the position in `examples`.
std::vector<PreferenceTriplet> gen_pretrain_pairs(std::span<const SyntheticExample> examples,
                                                  const KnowledgeBase& kb, const TfIdfIndex& idx,
                                                  const Vocab& vocab, std::size_t k,
                                                  std::size_t max_ctx = kDefaultMaxContext);

}  // namespace synlink
