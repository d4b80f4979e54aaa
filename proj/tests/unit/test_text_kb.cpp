#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "synlink/error.hpp"
#include "synlink/kb.hpp"
#include "synlink/text.hpp"

using namespace synlink;
using synlink::testing::TempDir;

TEST_CASE("normalize_name lowercases, trims and collapses") {
    CHECK(normalize_name("  Attention   Deficit ") == "attention deficit");
    CHECK(normalize_name("ADHD") == "adhd");
    CHECK(normalize_name("") == "");
    CHECK(normalize_name("a\t\tb\nc") == "a b c");
}

TEST_CASE("normalize_name is idempotent") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const auto s = synlink::testing::random_word(rng, 0, 12, "aB \tc");
        const auto once = normalize_name(s);
        CHECK(normalize_name(once) == once);
    }
}

TEST_CASE("collapse_whitespace_lower keeps edge spaces") {
    CHECK(collapse_whitespace_lower("  Chronic   PAIN ") == " chronic pain ");
}

TEST_CASE("single record builds one concept with two index entries") {
    TempDir dir("kb1");
    const auto path = dir.write("kb.jsonl", R"({"id":"C1","names":["ADHD","hyperkinetic disorder"]})" "\n");
    KbLoadSummary summary;
    const auto kb = KnowledgeBase::load(path, &summary);
    CHECK(kb.size() == 1);
    CHECK(kb.name_index().size() == 2);
    CHECK(summary.records == 1);
    CHECK(kb.align("adhd") == ConceptIdSet{ConceptId("C1")});
    CHECK(kb.align("unseen name").empty());
}

TEST_CASE("shared name maps to both identifiers") {
    TempDir dir("kb2");
    const auto path = dir.write("kb.jsonl",
                                R"({"id":"C2","names":["cold","common cold"]})" "\n"
                                R"({"id":"C1","names":["Cold","low temperature"]})" "\n");
    const auto kb = KnowledgeBase::load(path);
    CHECK(kb.align("cold") == ConceptIdSet{ConceptId("C1"), ConceptId("C2")});
    CHECK(kb.is_correct("cold", ConceptIdSet{ConceptId("C2")}));
    CHECK_FALSE(kb.is_correct("common cold", ConceptIdSet{ConceptId("C1")}));
}

TEST_CASE("record with no usable names is rejected") {
    TempDir dir("kb3");
    const auto path = dir.write("kb.jsonl", R"({"id":"C1","names":[]})" "\n" R"({"id":"C2","names":["  "]})" "\n");
    KbLoadSummary summary;
    const auto kb = KnowledgeBase::load(path, &summary);
    CHECK(kb.size() == 0);
    CHECK(summary.rejected == 2);
}

TEST_CASE("malformed knowledge base lines report their line number") {
    TempDir dir("kb4");
    const auto path = dir.write("kb.jsonl", R"({"id":"C1","names":["a"]})" "\n" "{oops\n");
    try {
        (void)KnowledgeBase::load(path);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
    const auto dup = dir.write("dup.jsonl", R"({"id":"C1","names":["a"]})" "\n" R"({"id":"C1","names":["b"]})" "\n");
    CHECK_THROWS_AS(KnowledgeBase::load(dup), FormatError);
    const auto noid = dir.write("noid.jsonl", R"({"names":["a"]})" "\n");
    CHECK_THROWS_AS(KnowledgeBase::load(noid), FormatError);
    CHECK_THROWS_AS(KnowledgeBase::load(dir.path / "missing.jsonl"), FormatError);
}

TEST_CASE("names are normalized and deduplicated per concept") {
    KnowledgeBase kb;
    REQUIRE(kb.add(ConceptId("X"), std::vector<std::string>{"Foo", "foo ", "Bar"}));
    CHECK(kb.find(ConceptId("X"))->names == std::vector<std::string>{"foo", "bar"});
}

TEST_CASE("every indexed name points back at concepts that list it") {
    const auto kb = synlink::testing::toy_kb();
    for (const auto& [name, ids] : kb.name_index()) {
        REQUIRE_FALSE(ids.empty());
        CHECK(std::is_sorted(ids.begin(), ids.end()));
        for (const auto& id : ids) {
            const auto& names = kb.find(id)->names;
            CHECK(std::find(names.begin(), names.end(), name) != names.end());
        }
    }
    for (const auto& [id, c] : kb.concepts()) {
        for (const auto& n : c.names) {
            CHECK(std::binary_search(kb.align(n).begin(), kb.align(n).end(), id));
        }
    }
}

TEST_CASE("all_names and synonyms_of are sorted and unique") {
    const auto kb = synlink::testing::toy_kb();
    const auto names = kb.all_names();
    CHECK(std::is_sorted(names.begin(), names.end()));
    CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
    const auto syn = kb.synonyms_of(ConceptIdSet{ConceptId("D005"), ConceptId("D006")});
    CHECK(syn == std::vector<std::string>{"neoplasm", "new growth", "tumor"});
}

TEST_CASE("intersects tests sorted sets") {
    const ConceptIdSet a{ConceptId("A"), ConceptId("C")};
    CHECK(intersects(a, ConceptIdSet{ConceptId("B"), ConceptId("C")}));
    CHECK_FALSE(intersects(a, ConceptIdSet{ConceptId("B")}));
    CHECK_FALSE(intersects(a, ConceptIdSet{}));
}

TEST_CASE("empty concept id is rejected") {
    CHECK_THROWS_AS(ConceptId(""), UsageError);
}
