#include <catch_amalgamated.hpp>

#include <set>

#include "fixtures.hpp"
#include "synlink/error.hpp"
#include "synlink/trie.hpp"

using namespace synlink;

namespace {

const Vocab& vocab() {
    static const Vocab v = Vocab::from_texts(std::vector<std::string>{"abcdefghijklmnopqrstuvwxyz "});
    return v;
}

std::vector<TokenId> enc(const std::string& s) { return vocab().encode(s); }

std::vector<std::string> random_names(Rng& rng, std::size_t n) {
    std::set<std::string> s;
    while (s.size() < n) {
        s.insert(synlink::testing::random_word(rng, 1, 12, "abcdef g"));
    }
    return {s.begin(), s.end()};
}

// Allowed continuations computed straight from the name list.
std::vector<TokenId> brute_allowed(const std::vector<std::string>& names, const std::string& prefix) {
    std::set<TokenId> out;
    for (const auto& n : names) {
        if (n.compare(0, prefix.size(), prefix) != 0) continue;
        out.insert(n.size() == prefix.size() ? Vocab::kEos : vocab().id_of(n[prefix.size()]));
    }
    return {out.begin(), out.end()};
}

}  // namespace

TEST_CASE("single name forms a chain") {
    const auto t = TokenTrie::build(std::vector<std::string>{"aspirin"}, vocab());
    CHECK(t.node_count() - 1 == 7);  // one node per character below the root
    CHECK(t.allowed_next(enc("asp")) == std::vector<TokenId>{vocab().id_of('i')});
    CHECK(t.allowed_next(enc("aspirin")) == std::vector<TokenId>{Vocab::kEos});
    CHECK(t.name_count() == 1);
}

TEST_CASE("shared prefix branches") {
    const auto t = TokenTrie::build(std::vector<std::string>{"ada", "adhd"}, vocab());
    CHECK(t.allowed_next(enc("ad")) == std::vector<TokenId>{vocab().id_of('a'), vocab().id_of('h')});
    CHECK(t.allowed_next(enc("ada")) == std::vector<TokenId>{Vocab::kEos});
    CHECK(t.find(enc("adx")) == -1);
    CHECK_THROWS_AS(t.allowed_next(enc("x")), UsageError);
}

TEST_CASE("a name that prefixes another allows both EOS and continuation") {
    const auto t = TokenTrie::build(std::vector<std::string>{"type i", "type ii"}, vocab());
    CHECK(t.allowed_next(enc("type i")) == std::vector<TokenId>{Vocab::kEos, vocab().id_of('i')});
}

TEST_CASE("out-of-vocabulary name is rejected at build") {
    CHECK_THROWS_AS(TokenTrie::build(std::vector<std::string>{"ABC"}, vocab()), FormatError);
}

TEST_CASE("membership and allowed sets agree with the name list") {
    Rng rng(42);
    const auto names = random_names(rng, 1000);
    const auto t = TokenTrie::build(names, vocab());
    const std::set<std::string> set(names.begin(), names.end());
    CHECK(t.name_count() == names.size());
    for (const auto& n : names) {
        CHECK(t.contains(enc(n)));
        // every prefix has a non-empty allowed set
        for (std::size_t i = 0; i <= n.size(); ++i) {
            const auto got = t.allowed_next(enc(n.substr(0, i)));
            REQUIRE_FALSE(got.empty());
            if (i % 3 == 0) {
                CHECK(got == brute_allowed(names, n.substr(0, i)));
            }
        }
    }
    for (int i = 0; i < 2000; ++i) {
        const auto probe = synlink::testing::random_word(rng, 1, 12, "abcdef g");
        CHECK(t.contains(enc(probe)) == (set.count(probe) == 1));
    }
}

TEST_CASE("serialization round trips") {
    const std::vector<std::string> two{"ada", "adhd"};
    const auto t = TokenTrie::build(two, vocab());
    const auto back = TokenTrie::deserialize(t.serialize());
    CHECK(back == t);
    for (const auto& p : {"", "a", "ad", "ada", "adh", "adhd"}) {
        CHECK(back.allowed_next(enc(p)) == t.allowed_next(enc(p)));
    }
    CHECK(back.serialize() == t.serialize());

    Rng rng(8);
    const auto names = random_names(rng, 1000);
    const auto big = TokenTrie::build(names, vocab());
    const auto big2 = TokenTrie::deserialize(big.serialize());
    for (int i = 0; i < 10000; ++i) {
        const auto probe = i % 2 ? names[rng.below(names.size())]
                                 : synlink::testing::random_word(rng, 1, 12, "abcdef g");
        CHECK(big2.contains(enc(probe)) == big.contains(enc(probe)));
    }
}

TEST_CASE("corrupted byte streams are rejected") {
    const auto bytes = TokenTrie::build(std::vector<std::string>{"ada", "adhd"}, vocab()).serialize();
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(TokenTrie::deserialize(bad_magic), FormatError);
    for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() - 1}) {
        CHECK_THROWS_AS(TokenTrie::deserialize(std::span(bytes).first(cut)), FormatError);
    }
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(TokenTrie::deserialize(trailing), FormatError);
    auto bad_version = bytes;
    bad_version[4] = 9;
    CHECK_THROWS_AS(TokenTrie::deserialize(bad_version), FormatError);
}
