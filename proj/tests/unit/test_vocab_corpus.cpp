#include <catch_amalgamated.hpp>

#include <sstream>

#include "fixtures.hpp"
#include "synlink/corpus.hpp"
#include "synlink/error.hpp"

using namespace synlink;
using synlink::testing::TempDir;

namespace {

Vocab letters() {
    return Vocab::from_texts(std::vector<std::string>{"abcdefghijklmnopqrstuvwxyz"});
}

}  // namespace

TEST_CASE("vocabulary reserves the special ids and sorts bytes") {
    const auto v = Vocab::from_texts(std::vector<std::string>{"ba"});
    CHECK(v.id_of('a') == Vocab::kNumSpecial + static_cast<int>(std::find(v.bytes().begin(), v.bytes().end(), 'a') - v.bytes().begin()));
    CHECK(v.id_of('a') < v.id_of('b'));
    CHECK(std::is_sorted(v.bytes().begin(), v.bytes().end()));
    for (auto t : template_texts()) {
        for (char c : t) {
            CHECK(v.has_char(c));
        }
    }
    CHECK_THROWS_AS(v.id_of('Z'), FormatError);
    CHECK(v.encode("aZb", Vocab::Unknown::kSkip) == std::vector<TokenId>{v.id_of('a'), v.id_of('b')});
}

TEST_CASE("vocabulary round trips text and bytes") {
    const auto v = letters();
    CHECK(v.decode(v.encode("hello world")) == "hello world");
    CHECK(Vocab::from_bytes(v.bytes()) == v);
    const auto e = v.encode_entity("ab");
    CHECK(e.back() == Vocab::kEos);
    CHECK(v.decode(e) == "ab[EOS]");
}

TEST_CASE("mention file loads in order with folds and rejects bad records") {
    TempDir dir("corpus");
    const auto path = dir.write("m.jsonl",
                                R"({"header":{"tool":"x"}})" "\n"
                                R"({"left":"l","mention":"a","right":"r","gold_ids":["C1"]})" "\n"
                                R"({"mention":"b","gold_ids":["C2","C1"],"fold":7})" "\n"
                                R"({"mention":"c","gold_ids":["C3"]})" "\n");
    const auto ex = load_mentions(path);
    REQUIRE(ex.size() == 3);
    CHECK(ex[0].mention == "a");
    CHECK(ex[1].fold == 7);
    CHECK(ex[1].gold_ids == ConceptIdSet{ConceptId("C1"), ConceptId("C2")});
    CHECK(ex[2].mention == "c");

    const auto bad = dir.write("bad.jsonl", R"({"left":"x","gold_ids":["C1"]})" "\n");
    CHECK_THROWS_AS(load_mentions(bad), FormatError);
    const auto nogold = dir.write("nogold.jsonl", R"({"mention":"x","gold_ids":[]})" "\n");
    CHECK_THROWS_AS(load_mentions(nogold), FormatError);
}

TEST_CASE("mention records round trip through the writer") {
    TempDir dir("corpus_rt");
    MentionExample ex{"left ", "men", " right", {ConceptId("A")}, 3, std::string("tgt")};
    {
        std::ofstream out(dir.path / "m.jsonl");
        write_mention_record(out, ex);
    }
    const auto back = load_mentions(dir.path / "m.jsonl");
    REQUIRE(back.size() == 1);
    CHECK(back[0].left == ex.left);
    CHECK(back[0].right == ex.right);
    CHECK(back[0].fold == 3);
    CHECK(back[0].target == "tgt");
}

TEST_CASE("abbreviations expand on whole words only") {
    const AbbreviationMap ab{{"aspd", "antisocial personality disorder"}};
    MentionExample ex{"", "ASPD", "", {ConceptId("C")}, std::nullopt, std::nullopt};
    CHECK(preprocess(ex, ab).mention == "antisocial personality disorder");
    CHECK(preprocess(ex, {}).mention == "aspd");
    ex.mention = "raspd X";
    CHECK(preprocess(ex, ab).mention == "raspd x");
    CHECK(expand_abbreviations("aspd, aspd-like", ab) ==
          "antisocial personality disorder, antisocial personality disorder-like");
}

TEST_CASE("longest abbreviation key wins") {
    const AbbreviationMap ab{{"ad", "alzheimer disease"}, {"ad hd", "wrong"}, {"adhd", "attention deficit"}};
    CHECK(expand_abbreviations("adhd and ad", ab) == "attention deficit and alzheimer disease");
}

TEST_CASE("abbreviation file loads tab separated pairs") {
    TempDir dir("abbr");
    const auto p = dir.write("a.tsv", "ASPD\tantisocial personality disorder\n\n");
    const auto ab = load_abbreviations(p);
    CHECK(ab.at("aspd") == "antisocial personality disorder");
    CHECK_THROWS_AS(load_abbreviations(dir.write("b.tsv", "no tab here\n")), FormatError);
}

TEST_CASE("filter_linkable drops mentions with unknown gold ids") {
    const auto kb = synlink::testing::toy_kb();
    std::vector<MentionExample> ex(5);
    const char* ids[] = {"D001", "NOPE", "D002", "D003", "GONE"};
    for (int i = 0; i < 5; ++i) {
        ex[i].mention = "m";
        ex[i].gold_ids = {ConceptId(ids[i])};
    }
    const auto r = filter_linkable(ex, kb);
    CHECK(r.kept.size() == 3);
    CHECK(r.dropped == 2);
    CHECK(r.kept_indices == std::vector<std::size_t>{0, 2, 3});
}

TEST_CASE("render produces the marked encoder input and prompt") {
    const auto v = letters();
    MentionExample ex{"", "adhd", "", {ConceptId("C")}, std::nullopt, std::nullopt};
    const auto in = render(ex, v);
    CHECK(v.decode(in.encoder_tokens) == "[BOS][ST]adhd[ET][EOS]");
    CHECK(v.decode(in.prompt_tokens) == "[BOS]adhd is");
    CHECK(in.prompt_tokens == render_prompt("adhd", v));

    ex.left = "chronic ";
    ex.mention = "pain";
    const auto in2 = render(ex, v);
    CHECK(v.decode(in2.encoder_tokens) == "[BOS]chronic [ST]pain[ET][EOS]");
}

TEST_CASE("render keeps max_ctx characters of context per side") {
    const auto v = letters();
    Rng rng(3);
    MentionExample ex;
    ex.left = synlink::testing::random_word(rng, 500, 500);
    ex.right = synlink::testing::random_word(rng, 500, 500);
    ex.mention = "m";
    const auto in = render(ex, v, 128);
    // [BOS] + 128 + [ST] + 1 + [ET] + 128 + [EOS]
    REQUIRE(in.encoder_tokens.size() == 1 + 128 + 1 + 1 + 1 + 128 + 1);
    CHECK(v.decode(std::span(in.encoder_tokens).subspan(1, 128)) == ex.left.substr(372));
    CHECK(v.decode(std::span(in.encoder_tokens).subspan(132, 128)) == ex.right.substr(0, 128));
}

TEST_CASE("rendered inputs keep the marker invariants") {
    const auto v = letters();
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        MentionExample ex;
        ex.left = synlink::testing::random_word(rng, 0, 200);
        ex.mention = synlink::testing::random_word(rng, 1, 10);
        ex.right = synlink::testing::random_word(rng, 0, 200);
        const auto in = render(ex, v, 64);
        const auto& t = in.encoder_tokens;
        CHECK(t.front() == Vocab::kBos);
        CHECK(t.back() == Vocab::kEos);
        CHECK(std::count(t.begin(), t.end(), Vocab::kStart) == 1);
        CHECK(std::count(t.begin(), t.end(), Vocab::kEnd) == 1);
        CHECK(std::find(t.begin(), t.end(), Vocab::kStart) < std::find(t.begin(), t.end(), Vocab::kEnd));
        CHECK(in.prompt_tokens.front() == Vocab::kBos);
    }
}
