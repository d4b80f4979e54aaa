#include "synlink/pretrain.hpp"

#include <algorithm>

#include "synlink/error.hpp"

namespace synlink {

namespace {

std::vector<std::string> others(const std::vector<std::string>& names,
                                std::initializer_list<std::string_view> skip) {
    std::vector<std::string> out;
    for (const auto& n : names) {
        if (std::find(skip.begin(), skip.end(), n) == skip.end()) {
            out.push_back(n);
        }
    }
    return out;
}

SyntheticExample make_example(const Concept& c, const std::string& marked, std::string clause,
                              std::string target, SynthSource source) {
    SyntheticExample s;
    s.example.mention = marked;
    s.example.right = std::move(clause);
    s.example.gold_ids = {c.id};
    s.example.target = std::move(target);
    s.concept_id = c.id;
    s.source = source;
    return s;
}

}  // namespace

std::vector<SyntheticExample> gen_definition_examples(const KnowledgeBase& kb, const TfIdfIndex& idx,
                                                      const SynthConfig& cfg) {
    std::vector<SyntheticExample> out;
    const std::string phrase(template_texts()[1]);
    for (const auto& [id, c] : kb.concepts()) {
        if (!c.definition || c.definition->empty()) {
            continue;
        }
        const std::size_t n = std::min(c.names.size(), cfg.max_definition_examples);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s = c.names[i];
            const auto rest = others(c.names, {s});
            std::string target = rest.empty() ? s : idx.rank_synonyms(s, rest, 1).front();
            out.push_back(make_example(c, s, phrase + *c.definition, std::move(target),
                                       SynthSource::kDefinition));
        }
    }
    return out;
}

std::vector<SyntheticExample> gen_synonym_examples(const KnowledgeBase& kb, const TfIdfIndex& idx,
                                                   const SynthConfig& cfg) {
    std::vector<SyntheticExample> out;
    const std::string phrase(template_texts()[2]);
    for (const auto& [id, c] : kb.concepts()) {
        if ((c.definition && !c.definition->empty()) || c.names.size() < 2) {
            continue;
        }
        const std::size_t n = std::min(c.names.size(), cfg.max_synonym_examples);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s1 = c.names[i];
            const std::string s2 = idx.rank_synonyms(s1, others(c.names, {s1}), 1).front();
            const auto rest = others(c.names, {s1, s2});
            std::string target = rest.empty() ? s2 : idx.rank_synonyms(s1, rest, 1).front();
            out.push_back(make_example(c, s1, phrase + s2, std::move(target), SynthSource::kSynonym));
        }
    }
    return out;
}

std::vector<SyntheticExample> gen_synthetic_examples(const KnowledgeBase& kb, const TfIdfIndex& idx,
                                                     const SynthConfig& cfg) {
    auto out = gen_definition_examples(kb, idx, cfg);
    auto syn = gen_synonym_examples(kb, idx, cfg);
    out.insert(out.end(), std::make_move_iterator(syn.begin()), std::make_move_iterator(syn.end()));
    return out;
}

std::vector<PreferenceTriplet> gen_pretrain_pairs(std::span<const SyntheticExample> examples,
                                                  const KnowledgeBase& kb, const TfIdfIndex& idx,
                                                  const Vocab& vocab, std::size_t k,
                                                  std::size_t max_ctx) {
    if (k == 0) {
        throw UsageError("negative count k must be at least 1");
    }
    std::vector<PreferenceTriplet> out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& s = examples[i];
        const ConceptId exclude[] = {s.concept_id};
        const auto negatives = idx.hard_negatives(s.example.mention, kb, exclude, k);
        if (negatives.empty()) {
            continue;
        }
        const EncodedInput input = render(s.example, vocab, max_ctx);
        for (const auto& neg : negatives) {
            PreferenceTriplet t;
            t.example_index = i;
            t.input = input;
            t.preferred = *s.example.target;
            t.dispreferred = neg;
            out.push_back(std::move(t));
        }
    }
    return out;
}

}  // namespace synlink
