#include "synlink/benchmark.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "synlink/error.hpp"
#include "synlink/random.hpp"
#include "synlink/tfidf.hpp"
#include "synlink/trie.hpp"

namespace synlink {

namespace {

struct Modifier {
    const char* canonical;
    const char* synonym;
};

// Pairs of interchangeable words; a concept uses one pair.
constexpr std::array<Modifier, 8> kModifiers = {{
    {"type 1", "type i"},
    {"type 2", "type ii"},
    {"type 3", "type iii"},
    {"type 4", "type iv"},
    {"type 5", "type v"},
    {"type 6", "type vi"},
    {"type 7", "type vii"},
    {"type 8", "type viii"},
}};

constexpr std::array<const char*, 12> kOnsets = {"b", "br", "c", "d", "f", "g", "k", "l", "m", "p", "t", "v"};
constexpr std::array<const char*, 5> kVowels = {"a", "e", "i", "o", "u"};
constexpr std::array<const char*, 6> kSuffixes = {"ine", "ase", "ol", "ide", "ate", "one"};

std::string make_stem(Rng& rng) {
    std::string s;
    const std::size_t syllables = 4 + rng.below(2);
    for (std::size_t i = 0; i < syllables; ++i) {
        s += kOnsets[rng.below(kOnsets.size())];
        s += kVowels[rng.below(kVowels.size())];
    }
    s += kSuffixes[rng.below(kSuffixes.size())];
    return s;
}

std::string typo(const std::string& s, Rng& rng) {
    if (s.size() < 4) {
        return s;
    }
    std::string out = s;
    const std::size_t pos = 1 + rng.below(out.size() - 2);
    switch (rng.below(3)) {
        case 0:
            out.erase(pos, 1);
            break;
        case 1:
            std::swap(out[pos], out[pos - 1]);
            break;
        default:
            out[pos] = kVowels[rng.below(kVowels.size())][0];
            break;
    }
    return out;
}

struct ConceptSpec {
    ConceptId id;
    std::string stem;
    Modifier mod;
};

MentionExample make_mention(const ConceptSpec& c, Rng& rng) {
    MentionExample ex;
    ex.gold_ids = {c.id};
    const std::string stem = rng.uniform() < 0.5 ? typo(c.stem, rng) : c.stem;
    switch (rng.below(4)) {
        case 0:
            ex.mention = std::string(c.mod.synonym) + " of " + stem;
            break;
        case 1:
            ex.mention = stem + " " + c.mod.synonym;
            break;
        case 2:
            ex.mention = stem + " " + typo(c.mod.canonical, rng);
            break;
        default:
            ex.mention = std::string(c.mod.canonical) + " of " + stem;
            break;
    }
    return ex;
}

}  // namespace

Benchmark make_confusable_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.concepts_per_family == 0 || cfg.concepts_per_family > kModifiers.size()) {
        throw UsageError("concepts_per_family must be in [1, 8]");
    }
    Rng rng(cfg.seed);
    Benchmark b;
    std::vector<ConceptSpec> specs;
    std::set<std::string> stems;
    for (std::size_t f = 0; f < cfg.families; ++f) {
        std::string stem;
        do {
            stem = make_stem(rng);
        } while (!stems.insert(stem).second);
        std::vector<std::size_t> mods(kModifiers.size());
        for (std::size_t i = 0; i < mods.size(); ++i) {
            mods[i] = i;
        }
        rng.shuffle(std::span(mods));
        for (std::size_t c = 0; c < cfg.concepts_per_family; ++c) {
            const Modifier m = kModifiers[mods[c]];
            char id[48];
            std::snprintf(id, sizeof id, "C%03zu%02zu", f, c);
            ConceptSpec spec{ConceptId(id), stem, m};
            const std::vector<std::string> names = {
                stem + " " + m.canonical,
                stem + " " + m.synonym,
                std::string(m.canonical) + " of " + stem,
            };
            b.kb.add(spec.id, names);
            specs.push_back(std::move(spec));
        }
    }
    for (std::size_t i = 0; i < cfg.train_mentions; ++i) {
        b.train.push_back(make_mention(specs[rng.below(specs.size())], rng));
    }
    for (std::size_t i = 0; i < cfg.test_mentions; ++i) {
        b.test.push_back(make_mention(specs[rng.below(specs.size())], rng));
    }
    return b;
}

void write_benchmark(const Benchmark& b, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "kb.jsonl");
        for (const auto& [id, c] : b.kb.concepts()) {
            nlohmann::json rec{{"id", id.str()}, {"names", c.names}};
            if (c.definition) {
                rec["definition"] = *c.definition;
            }
            out << rec.dump() << '\n';
        }
    }
    for (const auto& [name, list] : {std::pair{"train.jsonl", &b.train}, {"test.jsonl", &b.test}}) {
        std::ofstream out(dir / name);
        for (const auto& ex : *list) {
            write_mention_record(out, ex);
        }
    }
}

}  // namespace synlink

namespace synlink {

TwoStageOutcome run_two_stage(const Benchmark& b, const TwoStageConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> texts = b.kb.all_names();
    for (const auto* split : {&b.train, &b.test}) {
        for (const auto& ex : *split) {
            texts.push_back(ex.left + ex.mention + ex.right);
        }
    }
    const Vocab vocab = Vocab::from_texts(texts);
    const TfIdfIndex idx = TfIdfIndex::build(b.kb);
    const TokenTrie trie = TokenTrie::build(b.kb.all_names(), vocab);

    const Checkpoint init = Checkpoint::initialize(vocab, {.hidden_dim = cfg.hidden_dim, .seed = cfg.seed});
    const auto positives = build_positive_set(b.train, b.kb, idx, vocab);
    const Checkpoint stage1 = train_positive(init, positives, cfg.positive, cfg.seed).checkpoint;

    const auto triplets = mine_pairs(stage1, b.train, b.kb, trie, idx, cfg.mining);
    const Checkpoint stage2 = train_preference(stage1, triplets, cfg.preference, cfg.seed).checkpoint;

    TwoStageOutcome out;
    out.pairs = triplets.size();
    const auto preds1 = predict_all(stage1, b.test, trie, b.kb, cfg.beam);
    const auto preds2 = predict_all(stage2, b.test, trie, b.kb, cfg.beam);
    out.stage1 = make_report(gold_ranks(preds1, b.test));
    out.stage2 = make_report(gold_ranks(preds2, b.test));
    out.gaps1 = logprob_gap_report(stage1, b.test, preds1, b.kb, idx);
    out.gaps2 = logprob_gap_report(stage2, b.test, preds2, b.kb, idx);
    out.model1 = stage1;
    out.model2 = stage2;
    out.predictions1 = preds1;
    out.predictions2 = preds2;
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace synlink
