#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "synlink/kb.hpp"
#include "synlink/model.hpp"
#include "synlink/random.hpp"
#include "synlink/vocab.hpp"

namespace synlink::testing {

/// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("synlink_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::filesystem::path write(const std::string& name, const std::string& content) const {
        std::ofstream(path / name) << content;
        return path / name;
    }
};

inline std::string random_word(Rng& rng, std::size_t min_len, std::size_t max_len,
                               std::string_view alphabet = "abcde") {
    const std::size_t n = min_len + rng.below(max_len - min_len + 1);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        s += alphabet[rng.below(alphabet.size())];
    }
    return s;
}

/// A small KB with shared prefixes and one name shared by two concepts.
inline KnowledgeBase toy_kb() {
    KnowledgeBase kb;
    kb.add(ConceptId("D001"), std::vector<std::string>{"breast cancer", "mammary carcinoma", "breast tumor"});
    kb.add(ConceptId("D002"), std::vector<std::string>{"breast cyst", "mammary cyst"});
    kb.add(ConceptId("D003"), std::vector<std::string>{"colon cancer", "colorectal carcinoma"},
           std::string("a malignant tumor of the colon"));
    kb.add(ConceptId("D004"), std::vector<std::string>{"cancer", "malignancy"});
    kb.add(ConceptId("D005"), std::vector<std::string>{"tumor", "neoplasm"});
    kb.add(ConceptId("D006"), std::vector<std::string>{"neoplasm", "new growth"});
    return kb;
}

inline Vocab vocab_for(const KnowledgeBase& kb, std::vector<std::string> extra = {}) {
    std::vector<std::string> texts = kb.all_names();
    texts.insert(texts.end(), extra.begin(), extra.end());
    return Vocab::from_texts(texts);
}

/// Parameters drawn from a wide uniform so nonlinearities are exercised.
inline Parameters random_params(int vocab_size, int hidden, std::uint64_t seed, double range = 0.5) {
    Parameters p(vocab_size, hidden);
    Rng rng(seed);
    for (auto& a : p.arrays()) {
        for (double& x : a.values()) {
            x = rng.uniform(-range, range);
        }
    }
    return p;
}

}  // namespace synlink::testing
