#include "synlink/tfidf.hpp"

#include <algorithm>
#include <cmath>

#include "synlink/error.hpp"

namespace synlink {

std::vector<std::string> trigrams(std::string_view s) {
    std::vector<std::string> out;
    if (s.empty()) {
        return out;
    }
    std::string padded;
    padded.reserve(s.size() + 2);
    padded.push_back('#');
    padded.append(s);
    padded.push_back('#');
    out.reserve(s.size());
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        out.push_back(padded.substr(i, 3));
    }
    return out;
}

TfIdfIndex TfIdfIndex::build(std::span<const std::string> names) {
    if (names.empty()) {
        throw UsageError("cannot build a TF-IDF index over zero names");
    }
    TfIdfIndex idx;
    idx.names_.assign(names.begin(), names.end());
    std::sort(idx.names_.begin(), idx.names_.end());
    idx.names_.erase(std::unique(idx.names_.begin(), idx.names_.end()), idx.names_.end());
    idx.n_docs_ = idx.names_.size();

    for (const auto& name : idx.names_) {
        auto grams = trigrams(name);
        std::sort(grams.begin(), grams.end());
        grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
        for (auto& g : grams) {
            ++idx.df_[g];
        }
    }
    idx.vectors_.reserve(idx.n_docs_);
    for (std::size_t i = 0; i < idx.names_.size(); ++i) {
        idx.vectors_.push_back(idx.vectorize(idx.names_[i]));
        for (const auto& [g, w] : idx.vectors_.back()) {
            idx.postings_[g].push_back(i);
        }
    }
    return idx;
}

std::size_t TfIdfIndex::df(const std::string& trigram) const {
    auto it = df_.find(trigram);
    return it == df_.end() ? 0 : it->second;
}

double TfIdfIndex::idf(const std::string& trigram) const {
    const double n = static_cast<double>(n_docs_);
    return std::log((1.0 + n) / (1.0 + static_cast<double>(df(trigram)))) + 1.0;
}

TrigramVector TfIdfIndex::vectorize(std::string_view s) const {
    std::map<std::string, std::size_t> tf;
    for (auto& g : trigrams(s)) {
        ++tf[std::move(g)];
    }
    TrigramVector v;
    v.reserve(tf.size());
    double sq = 0.0;
    for (const auto& [g, count] : tf) {
        const double w = static_cast<double>(count) * idf(g);
        v.emplace_back(g, w);
        sq += w * w;
    }
    if (sq > 0.0) {
        const double norm = std::sqrt(sq);
        for (auto& [g, w] : v) {
            w /= norm;
        }
    }
    return v;
}

double TfIdfIndex::cosine(const TrigramVector& a, const TrigramVector& b) {
    double dot = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        const int c = ia->first.compare(ib->first);
        if (c < 0) {
            ++ia;
        } else if (c > 0) {
            ++ib;
        } else {
            dot += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return std::clamp(dot, 0.0, 1.0);
}

const TrigramVector* TfIdfIndex::cached(std::string_view name) const {
    auto it = std::lower_bound(names_.begin(), names_.end(), name);
    if (it == names_.end() || *it != name) {
        return nullptr;
    }
    return &vectors_[static_cast<std::size_t>(it - names_.begin())];
}

double TfIdfIndex::similarity(std::string_view a, std::string_view b) const {
    const TrigramVector* va = cached(a);
    const TrigramVector* vb = cached(b);
    TrigramVector tmp_a;
    TrigramVector tmp_b;
    if (va == nullptr) {
        tmp_a = vectorize(a);
        va = &tmp_a;
    }
    if (vb == nullptr) {
        tmp_b = vectorize(b);
        vb = &tmp_b;
    }
    return cosine(*va, *vb);
}

namespace {

bool by_score_then_name(const std::pair<std::string, double>& x,
                        const std::pair<std::string, double>& y) {
    if (x.second != y.second) {
        return x.second > y.second;
    }
    return x.first < y.first;
}

}  // namespace

std::vector<std::pair<std::string, double>> TfIdfIndex::rank_scored(
    std::string_view mention, std::span<const std::string> candidates, std::size_t k) const {
    const TrigramVector query = vectorize(mention);
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(candidates.size());
    for (const auto& c : candidates) {
        const TrigramVector* v = cached(c);
        scored.emplace_back(c, v != nullptr ? cosine(query, *v) : cosine(query, vectorize(c)));
    }
    std::sort(scored.begin(), scored.end(), by_score_then_name);
    scored.erase(std::unique(scored.begin(), scored.end(),
                             [](const auto& x, const auto& y) { return x.first == y.first; }),
                 scored.end());
    if (scored.size() > k) {
        scored.resize(k);
    }
    return scored;
}

std::vector<std::string> TfIdfIndex::rank_synonyms(std::string_view mention,
                                                   std::span<const std::string> candidates,
                                                   std::size_t k) const {
    std::vector<std::string> out;
    for (auto& [name, score] : rank_scored(mention, candidates, k)) {
        out.push_back(std::move(name));
    }
    return out;
}

std::vector<std::string> TfIdfIndex::hard_negatives(std::string_view mention,
                                                    const KnowledgeBase& kb,
                                                    std::span<const ConceptId> exclude,
                                                    std::size_t k) const {
    const auto eligible = [&](std::size_t i) {
        const auto& ids = kb.align(names_[i]);
        return !ids.empty() && !intersects(ids, exclude);
    };

    // Names sharing at least one trigram with the query get an exact cosine;
    // every other eligible name scores 0 and is ordered by name.
    const TrigramVector query = vectorize(mention);
    std::vector<char> touched(names_.size(), 0);
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& [g, w] : query) {
        auto it = postings_.find(g);
        if (it == postings_.end()) {
            continue;
        }
        for (std::size_t i : it->second) {
            if (touched[i] != 0) {
                continue;
            }
            touched[i] = 1;
            if (eligible(i)) {
                scored.emplace_back(names_[i], cosine(query, vectors_[i]));
            }
        }
    }
    std::sort(scored.begin(), scored.end(), by_score_then_name);
    std::vector<std::string> out;
    for (auto& [name, score] : scored) {
        if (out.size() == k) {
            return out;
        }
        if (score > 0.0) {
            out.push_back(std::move(name));
        }
    }
    // Zero-similarity fill in lexicographic order (names_ is sorted).
    std::vector<std::pair<std::string, double>> zeros;
    for (std::size_t i = 0; i < names_.size() && out.size() < k; ++i) {
        const bool zero_from_touched =
            touched[i] != 0 && eligible(i) && cosine(query, vectors_[i]) == 0.0;
        if ((touched[i] == 0 && eligible(i)) || zero_from_touched) {
            out.push_back(names_[i]);
        }
    }
    return out;
}

}  // namespace synlink
