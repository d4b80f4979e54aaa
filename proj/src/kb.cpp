#include "synlink/kb.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "synlink/error.hpp"
#include "synlink/text.hpp"

namespace synlink {

using nlohmann::json;

ConceptId::ConceptId(std::string value) : value_(std::move(value)) {
    if (value_.empty()) {
        throw UsageError("ConceptId must be non-empty");
    }
}

bool KnowledgeBase::add(ConceptId id, std::span<const std::string> raw_names,
                        std::optional<std::string> definition) {
    if (concepts_.contains(id)) {
        throw FormatError("duplicate concept id '" + id.str() + "'");
    }
    Concept c{id, {}, std::move(definition)};
    for (const auto& raw : raw_names) {
        std::string name = normalize_name(raw);
        if (name.empty()) {
            continue;
        }
        if (std::find(c.names.begin(), c.names.end(), name) == c.names.end()) {
            c.names.push_back(std::move(name));
        }
    }
    if (c.names.empty()) {
        return false;
    }
    for (const auto& name : c.names) {
        auto& ids = name_index_[name];
        ids.insert(std::upper_bound(ids.begin(), ids.end(), id), id);
    }
    concepts_.emplace(std::move(id), std::move(c));
    return true;
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path, KbLoadSummary* summary) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open knowledge base file " + path.string());
    }
    KnowledgeBase kb;
    KbLoadSummary local;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto where = [&] { return path.string() + ":" + std::to_string(line_no) + ": "; };
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError(where() + "malformed record: " + e.what());
        }
        if (rec.contains("header")) {
            continue;
        }
        if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() ||
            rec["id"].get<std::string>().empty()) {
            throw FormatError(where() + "record needs a non-empty string \"id\"");
        }
        if (!rec.contains("names") || !rec["names"].is_array()) {
            throw FormatError(where() + "record needs a \"names\" array");
        }
        std::vector<std::string> names;
        for (const auto& n : rec["names"]) {
            if (!n.is_string()) {
                throw FormatError(where() + "names must be strings");
            }
            names.push_back(n.get<std::string>());
        }
        std::optional<std::string> definition;
        if (rec.contains("definition") && !rec["definition"].is_null()) {
            if (!rec["definition"].is_string()) {
                throw FormatError(where() + "definition must be a string");
            }
            definition = rec["definition"].get<std::string>();
        }
        ++local.records;
        try {
            if (!kb.add(ConceptId(rec["id"].get<std::string>()), names, std::move(definition))) {
                ++local.rejected;
            }
        } catch (const FormatError& e) {
            throw FormatError(where() + e.what());
        }
    }
    if (summary != nullptr) {
        *summary = local;
    }
    return kb;
}

const ConceptIdSet& KnowledgeBase::align(std::string_view name) const {
    static const ConceptIdSet empty;
    auto it = name_index_.find(name);
    return it == name_index_.end() ? empty : it->second;
}

bool KnowledgeBase::is_correct(std::string_view name, std::span<const ConceptId> gold) const {
    return intersects(align(name), gold);
}

const Concept* KnowledgeBase::find(const ConceptId& id) const {
    auto it = concepts_.find(id);
    return it == concepts_.end() ? nullptr : &it->second;
}

std::vector<std::string> KnowledgeBase::all_names() const {
    std::vector<std::string> out;
    out.reserve(name_index_.size());
    for (const auto& [name, ids] : name_index_) {
        out.push_back(name);
    }
    return out;
}

std::vector<std::string> KnowledgeBase::synonyms_of(std::span<const ConceptId> ids) const {
    std::vector<std::string> out;
    for (const auto& id : ids) {
        if (const Concept* c = find(id)) {
            out.insert(out.end(), c->names.begin(), c->names.end());
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool operator==(const Concept& a, const Concept& b) {
    return a.id == b.id && a.names == b.names && a.definition == b.definition;
}

bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    return a.concepts_ == b.concepts_ && a.name_index_ == b.name_index_;
}

bool intersects(std::span<const ConceptId> a, std::span<const ConceptId> b) {
    return std::any_of(a.begin(), a.end(), [&](const ConceptId& x) {
        return std::find(b.begin(), b.end(), x) != b.end();
    });
}

}  // namespace synlink
