#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace synlink {

/// Knowledge-base identifier, e.g. a CUI such as "C1263846".
class ConceptId {
public:
    ConceptId() = default;
    explicit ConceptId(std::string value);

    const std::string& str() const noexcept { return value_; }

    friend auto operator<=>(const ConceptId&, const ConceptId&) = default;

private:
    std::string value_;
};

using ConceptIdSet = std::vector<ConceptId>;  // sorted, unique

struct Concept {
    ConceptId id;
    std::vector<std::string> names;  // normalized, deduplicated, in file order
    std::optional<std::string> definition;
};

struct KbLoadSummary {
    std::size_t records = 0;
    std::size_t rejected = 0;  // records whose names were all empty
};

/// Concepts plus the inverted name index. Immutable once built; the alignment
/// function maps a generated surface form back to identifiers.
class KnowledgeBase {
public:
    KnowledgeBase() = default;

    /// Adds a concept. Names are normalized and deduplicated; returns false
    /// (and adds nothing) when no non-empty name remains. Throws FormatError
    /// on a duplicate id.
    bool add(ConceptId id, std::span<const std::string> raw_names,
             std::optional<std::string> definition = std::nullopt);

    static KnowledgeBase load(const std::filesystem::path& path,
                              KbLoadSummary* summary = nullptr);

    /// Identifiers for a normalized name; empty when the name is unknown.
    const ConceptIdSet& align(std::string_view name) const;

    /// True iff align(name) shares an identifier with gold.
    bool is_correct(std::string_view name, std::span<const ConceptId> gold) const;

    const Concept* find(const ConceptId& id) const;
    bool contains(const ConceptId& id) const { return find(id) != nullptr; }

    const std::map<ConceptId, Concept>& concepts() const noexcept { return concepts_; }
    const std::map<std::string, ConceptIdSet, std::less<>>& name_index() const noexcept {
        return name_index_;
    }

    /// All distinct names in lexicographic order.
    std::vector<std::string> all_names() const;

    /// Union of the synonym sets of the given concepts, lexicographic order.
    std::vector<std::string> synonyms_of(std::span<const ConceptId> ids) const;

    std::size_t size() const noexcept { return concepts_.size(); }

    friend bool operator==(const KnowledgeBase&, const KnowledgeBase&);

private:
    std::map<ConceptId, Concept> concepts_;
    std::map<std::string, ConceptIdSet, std::less<>> name_index_;
};

bool operator==(const Concept& a, const Concept& b);

/// Sorted-set intersection test.
bool intersects(std::span<const ConceptId> a, std::span<const ConceptId> b);

}  // namespace synlink
