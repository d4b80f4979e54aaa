#include <catch_amalgamated.hpp>

#include <set>

#include "fixtures.hpp"
#include "synlink/error.hpp"
#include "synlink/pretrain.hpp"
#include "synlink/trie.hpp"

using namespace synlink;

TEST_CASE("definition clause examples") {
    KnowledgeBase kb;
    kb.add(ConceptId("C1"), std::vector<std::string>{"adhd", "hyperkinetic disorder"},
           std::string("a disorder of attention"));
    kb.add(ConceptId("C2"), std::vector<std::string>{"aspirin"}, std::string("a drug"));
    kb.add(ConceptId("C3"), std::vector<std::string>{"cold", "common cold"});
    const auto idx = TfIdfIndex::build(kb);
    const auto ex = gen_definition_examples(kb, idx);
    REQUIRE(ex.size() == 3);
    CHECK(ex[0].example.mention == "adhd");
    CHECK(ex[0].example.target == "hyperkinetic disorder");
    CHECK(ex[1].example.target == "adhd");
    CHECK(ex[2].example.mention == "aspirin");
    CHECK(ex[2].example.target == "aspirin");
    for (const auto& s : ex) {
        CHECK(s.source == SynthSource::kDefinition);
    }
    const auto v = synlink::testing::vocab_for(kb, {"a disorder of attention", "a drug"});
    CHECK(v.decode(render(ex[0].example, v).encoder_tokens) ==
          "[BOS][ST]adhd[ET] is defined as a disorder of attention[EOS]");
}

TEST_CASE("synonym clause examples") {
    KnowledgeBase kb;
    kb.add(ConceptId("A"), std::vector<std::string>{"kidney stone", "kidney stones", "nephrolithiasis"});
    kb.add(ConceptId("B"), std::vector<std::string>{"cold", "common cold"});
    kb.add(ConceptId("C"), std::vector<std::string>{"lonely"});
    const auto idx = TfIdfIndex::build(kb);
    const auto ex = gen_synonym_examples(kb, idx);
    // three from A (one per marked name), two from B, none from C
    REQUIRE(ex.size() == 5);
    CHECK(ex[0].example.mention == "kidney stone");
    CHECK(ex[0].example.right == " has synonyms such as kidney stones");
    CHECK(ex[0].example.target == "nephrolithiasis");
    CHECK(ex[3].example.mention == "cold");
    CHECK(ex[3].example.right == " has synonyms such as common cold");
    CHECK(ex[3].example.target == "common cold");
    for (const auto& s : ex) {
        CHECK(s.source == SynthSource::kSynonym);
        CHECK(kb.is_correct(*s.example.target, ConceptIdSet{s.concept_id}));
    }
}

TEST_CASE("per-concept caps bound the output") {
    KnowledgeBase kb;
    std::vector<std::string> names;
    for (int i = 0; i < 20; ++i) names.push_back("name " + std::to_string(i));
    kb.add(ConceptId("A"), names);
    kb.add(ConceptId("B"), names, std::string("def"));
    const auto idx = TfIdfIndex::build(kb);
    SynthConfig cfg;
    cfg.max_definition_examples = 3;
    cfg.max_synonym_examples = 2;
    CHECK(gen_definition_examples(kb, idx, cfg).size() == 3);
    CHECK(gen_synonym_examples(kb, idx, cfg).size() == 2);
    CHECK(gen_synthetic_examples(kb, idx, cfg).size() == 5);
}

TEST_CASE("pre-training pairs use hard negatives from other concepts") {
    KnowledgeBase one;
    one.add(ConceptId("A"), std::vector<std::string>{"x ray", "xray"});
    const auto oidx = TfIdfIndex::build(one);
    const auto oex = gen_synthetic_examples(one, oidx);
    CHECK(gen_pretrain_pairs(oex, one, oidx, synlink::testing::vocab_for(one), 3).empty());

    KnowledgeBase twins;
    twins.add(ConceptId("A"), std::vector<std::string>{"breast cancer", "mammary cancer"});
    twins.add(ConceptId("B"), std::vector<std::string>{"breast cancers", "zz"});
    const auto tidx = TfIdfIndex::build(twins);
    const auto tex = gen_synthetic_examples(twins, tidx);
    const auto tv = synlink::testing::vocab_for(twins);
    const auto pairs = gen_pretrain_pairs(tex, twins, tidx, tv, 1);
    for (const auto& t : pairs) {
        if (tex[t.example_index].example.mention == "breast cancer") CHECK(t.dispreferred == "breast cancers");
        if (tex[t.example_index].example.mention == "breast cancers") CHECK(t.dispreferred == "breast cancer");
    }
}

TEST_CASE("k=1 negatives equal the nearest other-concept name") {
    Rng rng(12);
    KnowledgeBase kb;
    for (int c = 0; c < 20; ++c) {
        std::vector<std::string> names{synlink::testing::random_word(rng, 3, 8, "abcde "),
                                       synlink::testing::random_word(rng, 3, 8, "abcde ")};
        std::optional<std::string> def;
        if (c % 3 == 0) def = "defn";
        kb.add(ConceptId("C" + std::to_string(c)), names, def);
    }
    const auto idx = TfIdfIndex::build(kb);
    const auto ex = gen_synthetic_examples(kb, idx);
    const auto v = synlink::testing::vocab_for(kb, {"defn"});
    const auto trie = TokenTrie::build(kb.all_names(), v);
    const auto pairs = gen_pretrain_pairs(ex, kb, idx, v, 1);
    std::set<std::size_t> covered;
    for (const auto& t : pairs) {
        const auto& s = ex[t.example_index];
        covered.insert(t.example_index);
        // brute force: scan every name of another concept
        double best = -1.0;
        std::string best_name;
        for (const auto& [name, ids] : kb.name_index()) {
            if (std::binary_search(ids.begin(), ids.end(), s.concept_id)) continue;
            const double sim = idx.similarity(s.example.mention, name);
            if (sim > best || (sim == best && name < best_name)) {
                best = sim;
                best_name = name;
            }
        }
        CHECK(t.dispreferred == best_name);
        CHECK_FALSE(kb.is_correct(t.dispreferred, ConceptIdSet{s.concept_id}));
        CHECK(trie.contains(v.encode(t.preferred)));
    }
    CHECK(covered.size() == ex.size());
}
