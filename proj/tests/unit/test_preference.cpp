#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "synlink/error.hpp"
#include "synlink/preference.hpp"

using namespace synlink;
using synlink::testing::random_params;

namespace {

using synlink::testing::as_set;
using synlink::testing::mining_oracle;
using synlink::testing::PairSet;

Prediction pred(const std::string& name, const char* id) {
    return Prediction{name, {ConceptId(id)}, 0.0};
}

PreferenceConfig dpo() {
    PreferenceConfig c;
    c.loss = LossKind::kDpo;
    return c;
}

}  // namespace

TEST_CASE("mining rule examples") {
    const ConceptIdSet gold{ConceptId("G")};
    SECTION("correct below an incorrect prediction") {
        const std::vector p{pred("wrong1", "X"), pred("gold", "G"), pred("wrong2", "Y")};
        const auto pairs = pairs_from_predictions(p, gold, "gold");
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].preferred == "gold");
        CHECK(pairs[0].dispreferred == "wrong1");
        CHECK(pairs[0].rank_w == 2);
        CHECK(pairs[0].rank_l == 1);
    }
    SECTION("correct at rank one") {
        const std::vector p{pred("gold", "G"), pred("wrong1", "X"), pred("wrong2", "Y")};
        CHECK(as_set(pairs_from_predictions(p, gold, "gold")) == PairSet{{"gold", "wrong1"}});
    }
    SECTION("rank one correct and nothing incorrect") {
        const std::vector p{pred("gold", "G"), pred("gold2", "G")};
        CHECK(pairs_from_predictions(p, gold, "gold").empty());
    }
    SECTION("no correct prediction falls back to the nearest synonym") {
        const std::vector p{pred("w1", "X"), pred("w2", "X"), pred("w3", "Y"), pred("w4", "Z")};
        const auto pairs = pairs_from_predictions(p, gold, "g");
        CHECK(as_set(pairs) == PairSet{{"g", "w1"}, {"g", "w2"}, {"g", "w3"}});
        for (const auto& mp : pairs) CHECK_FALSE(mp.rank_w.has_value());
    }
}

TEST_CASE("all-pairs policy pairs every correct with every incorrect") {
    const ConceptIdSet gold{ConceptId("G")};
    const std::vector p{pred("a", "G"), pred("b", "X"), pred("c", "G"), pred("d", "Y")};
    CHECK(as_set(pairs_from_predictions(p, gold, "a", PairPolicy::kAll)) ==
          PairSet{{"a", "b"}, {"a", "d"}, {"c", "b"}, {"c", "d"}});
}

TEST_CASE("mining matches the rule oracle on random prediction lists") {
    Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(10);
        std::vector<Prediction> preds;
        std::set<std::string> used;
        while (preds.size() < n) {
            auto name = synlink::testing::random_word(rng, 1, 3, "abc");
            if (!used.insert(name).second) continue;
            const char* id = rng.uniform() < 0.35 ? "G" : (rng.uniform() < 0.5 ? "X" : "Y");
            preds.push_back(pred(name, id));
        }
        const ConceptIdSet gold{ConceptId("G")};
        const auto got = pairs_from_predictions(preds, gold, "zz");
        CHECK(as_set(got) == mining_oracle(preds, gold, "zz"));
        CHECK(as_set(got).size() == got.size());  // no duplicates
        for (const auto& p : got) {
            CHECK(p.preferred != p.dispreferred);
        }
    }
}

TEST_CASE("hand-computed preference losses") {
    PairScores s;
    s.logp_w = s.ref_w = -1.3;
    s.logp_l = s.ref_l = -0.4;
    CHECK(std::abs(pair_objective(s, dpo()).loss - std::log(2.0)) <= 1e-15);

    s.logp_w = -1.0;
    s.logp_l = -2.0;
    s.ref_w = -1.5;
    s.ref_l = -1.5;
    const auto r = pair_objective(s, dpo());
    CHECK(r.margin == Catch::Approx(0.1).epsilon(1e-14));
    CHECK(r.loss == Catch::Approx(0.644396660073571).epsilon(1e-12));
    CHECK(r.loss == Catch::Approx(-std::log(0.524979187478940)).epsilon(1e-12));

    auto pw = dpo();
    pw.loss = LossKind::kPairwise;
    CHECK(pair_objective(s, pw).margin == Catch::Approx(0.1));  // references ignored

    auto cpo = dpo();
    cpo.loss = LossKind::kCpo;
    s.len_w = 4;
    CHECK(pair_objective(s, cpo).loss == Catch::Approx(0.644396660073571 + 1.0 / 4.0).epsilon(1e-12));

    auto simpo = dpo();
    simpo.loss = LossKind::kSimpo;
    s.len_w = 2;
    s.len_l = 4;
    // margin = 0.1/2·(−1) − 0.1/4·(−2) − 0.5 = −0.5
    CHECK(pair_objective(s, simpo).margin == Catch::Approx(-0.5));
    CHECK(pair_objective(s, simpo).loss == Catch::Approx(std::log1p(std::exp(0.5))).epsilon(1e-12));
}

TEST_CASE("dpo depends only on the log-ratio differences") {
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        PairScores s{rng.uniform(-9, 0), rng.uniform(-9, 0), rng.uniform(-9, 0), rng.uniform(-9, 0), 3, 5};
        PairScores t = s;
        const double c = rng.uniform(-5, 5);
        t.logp_w += c;
        t.logp_l += c;
        t.ref_w += c;
        t.ref_l += c;
        CHECK(std::abs(pair_objective(s, dpo()).loss - pair_objective(t, dpo()).loss) <= 1e-12);
    }
}

TEST_CASE("losses stay finite for extreme margins") {
    PairScores s{-1e3, -1.0, 0, 0, 2, 2};
    auto cfg = dpo();
    cfg.beta = 10.0;
    const auto r = pair_objective(s, cfg);
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss == Catch::Approx(-r.margin).epsilon(1e-12));
    s.logp_w = -1.0;
    s.logp_l = -1e3;
    CHECK(pair_objective(s, cfg).loss >= 0.0);
    CHECK(pair_objective(s, cfg).loss < 1e-12);
    CHECK_THROWS_AS(parse_loss_kind("ppo"), UsageError);
    for (auto k : {LossKind::kPairwise, LossKind::kDpo, LossKind::kCpo, LossKind::kSimpo}) {
        CHECK(parse_loss_kind(loss_kind_name(k)) == k);
    }
}

namespace {

struct World {
    KnowledgeBase kb = synlink::testing::toy_kb();
    Vocab vocab = synlink::testing::vocab_for(kb, {"breast lump", "colon tumour"});
    TfIdfIndex idx = TfIdfIndex::build(kb);
    TokenTrie trie = TokenTrie::build(kb.all_names(), vocab);
    std::vector<MentionExample> examples;
    World() {
        MentionExample a;
        a.mention = "breast lump";
        a.gold_ids = {ConceptId("D002")};
        MentionExample b;
        b.mention = "colon tumour";
        b.gold_ids = {ConceptId("D003")};
        examples = {a, b, a};
    }
};

}  // namespace

TEST_CASE("mine_pairs applies the rules to beam output") {
    World w;
    auto ck = Checkpoint::initialize(w.vocab, {.hidden_dim = 6, .seed = 4});
    ck.params = random_params(w.vocab.size(), 6, 4, 1.0);
    CHECK_THROWS_AS(mine_pairs(ck, w.examples, w.kb, w.trie, w.idx, {}), UsageError);  // stage init
    ck.stage = Stage::kPositive;
    MiningConfig cfg;
    cfg.top_k = 1;
    CHECK_THROWS_AS(mine_pairs(ck, w.examples, w.kb, w.trie, w.idx, cfg), UsageError);
    cfg.top_k = 5;
    const auto triplets = mine_pairs(ck, w.examples, w.kb, w.trie, w.idx, cfg);
    for (std::size_t i = 0; i < w.examples.size(); ++i) {
        const auto& ex = w.examples[i];
        const auto in = render(ex, w.vocab);
        const auto preds = constrained_beam_search(ck.params, w.vocab, in, w.trie, w.kb, {5, 5});
        const auto nearest = w.idx.rank_synonyms(ex.mention, w.kb.synonyms_of(ex.gold_ids), 1)[0];
        PairSet got;
        for (const auto& t : triplets) {
            if (t.example_index != i) continue;
            got.emplace(t.preferred, t.dispreferred);
            CHECK(t.input == in);
            CHECK(w.kb.is_correct(t.preferred, ex.gold_ids));
            CHECK_FALSE(w.kb.is_correct(t.dispreferred, ex.gold_ids));
        }
        CHECK(got == mining_oracle(preds, ex.gold_ids, nearest));
    }
    // deterministic
    const auto again = mine_pairs(ck, w.examples, w.kb, w.trie, w.idx, cfg);
    REQUIRE(again.size() == triplets.size());
    for (std::size_t i = 0; i < again.size(); ++i) {
        CHECK(again[i].preferred == triplets[i].preferred);
        CHECK(again[i].dispreferred == triplets[i].dispreferred);
    }
}

TEST_CASE("tf-idf negatives come from the hard-negative ranking") {
    World w;
    auto ck = Checkpoint::initialize(w.vocab, {.hidden_dim = 6, .seed = 4});
    ck.stage = Stage::kPositive;
    MiningConfig cfg;
    cfg.negatives = NegativeSource::kTfIdf;
    const auto triplets = mine_pairs(ck, w.examples, w.kb, w.trie, w.idx, cfg);
    for (const auto& t : triplets) {
        const auto& ex = w.examples[t.example_index];
        const auto hard = w.idx.hard_negatives(ex.mention, w.kb, ex.gold_ids, 3);
        CHECK(std::find(hard.begin(), hard.end(), t.dispreferred) != hard.end());
        CHECK(w.kb.is_correct(t.preferred, ex.gold_ids));
    }
    CHECK(triplets.size() == 9);
}

TEST_CASE("dpo at the reference is ln 2 and training with zero rate keeps it there") {
    World w;
    auto ck = Checkpoint::initialize(w.vocab, {.hidden_dim = 6, .seed = 5});
    ck.params = random_params(w.vocab.size(), 6, 5, 0.5);
    ck.stage = Stage::kPositive;
    const auto triplets = mine_pairs(ck, w.examples, w.kb, w.trie, w.idx, {});
    REQUIRE_FALSE(triplets.empty());
    for (const auto& t : triplets) {
        CHECK(preference_loss(ck.params, ck.params, w.vocab, t, dpo()) == std::log(2.0));
    }
    auto cfg = dpo();
    cfg.opt.learning_rate = 0.0;
    cfg.epochs = 2;
    const auto run = train_preference(ck, triplets, cfg, 3);
    CHECK(run.checkpoint.params == ck.params);
    CHECK(run.checkpoint.stage == Stage::kNegative);
    for (const auto& p : run.losses) {
        CHECK(p.loss == Catch::Approx(std::log(2.0)).epsilon(1e-15));  // batch mean of exact ln 2 terms
    }
}

TEST_CASE("preference training is seeded and raises the margin") {
    World w;
    auto ck = Checkpoint::initialize(w.vocab, {.hidden_dim = 6, .seed = 6});
    ck.params = random_params(w.vocab.size(), 6, 6, 0.5);
    ck.stage = Stage::kPositive;
    const auto triplets = mine_pairs(ck, w.examples, w.kb, w.trie, w.idx, {});
    REQUIRE_FALSE(triplets.empty());
    for (auto kind : {LossKind::kPairwise, LossKind::kDpo, LossKind::kCpo, LossKind::kSimpo}) {
        auto cfg = dpo();
        cfg.loss = kind;
        cfg.opt.learning_rate = 1e-3;
        cfg.opt.batch_size = 64;  // one step over the frozen batch
        const auto a = train_preference(ck, triplets, cfg, 9);
        const auto b = train_preference(ck, triplets, cfg, 9);
        CHECK(a.checkpoint.params == b.checkpoint.params);
        const auto before = evaluate_preference(ck.params, ck.params, w.vocab, triplets, cfg);
        const auto after = evaluate_preference(a.checkpoint.params, ck.params, w.vocab, triplets, cfg);
        INFO(loss_kind_name(kind));
        CHECK(after.mean_margin > before.mean_margin);
        CHECK(after.mean_loss < before.mean_loss);
    }
}

TEST_CASE("preference configuration is validated") {
    auto cfg = dpo();
    cfg.beta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = dpo();
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    World w;
    const auto ck = Checkpoint::initialize(w.vocab, {.hidden_dim = 4, .seed = 1});
    CHECK_THROWS_AS(train_preference(ck, std::vector<PreferenceTriplet>{}, dpo(), 1), UsageError);
}
