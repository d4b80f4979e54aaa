#include "synlink/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

#include "synlink/error.hpp"
#include "synlink/text.hpp"

namespace synlink {

using nlohmann::json;

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::string required_string(const json& rec, const char* key, const std::string& where) {
    if (!rec.contains(key) || !rec[key].is_string()) {
        throw FormatError(where + "record needs a string \"" + key + "\"");
    }
    return rec[key].get<std::string>();
}

}  // namespace

std::vector<MentionExample> load_mentions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open mention file " + path.string());
    }
    std::vector<MentionExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError(where + "malformed record: " + e.what());
        }
        if (!rec.is_object()) {
            throw FormatError(where + "record must be an object");
        }
        if (rec.contains("header")) {
            continue;
        }
        MentionExample ex;
        ex.mention = required_string(rec, "mention", where);
        ex.left = rec.contains("left") ? required_string(rec, "left", where) : std::string{};
        ex.right = rec.contains("right") ? required_string(rec, "right", where) : std::string{};
        if (!rec.contains("gold_ids") || !rec["gold_ids"].is_array() || rec["gold_ids"].empty()) {
            throw FormatError(where + "record needs a non-empty \"gold_ids\" array");
        }
        for (const auto& id : rec["gold_ids"]) {
            if (!id.is_string() || id.get<std::string>().empty()) {
                throw FormatError(where + "gold_ids must be non-empty strings");
            }
            ex.gold_ids.emplace_back(id.get<std::string>());
        }
        std::sort(ex.gold_ids.begin(), ex.gold_ids.end());
        ex.gold_ids.erase(std::unique(ex.gold_ids.begin(), ex.gold_ids.end()), ex.gold_ids.end());
        if (rec.contains("fold") && !rec["fold"].is_null()) {
            if (!rec["fold"].is_number_integer()) {
                throw FormatError(where + "fold must be an integer");
            }
            ex.fold = rec["fold"].get<int>();
        }
        if (rec.contains("target") && !rec["target"].is_null()) {
            ex.target = required_string(rec, "target", where);
        }
        out.push_back(std::move(ex));
    }
    return out;
}

void write_mention_record(std::ostream& out, const MentionExample& ex) {
    json rec;
    rec["left"] = ex.left;
    rec["mention"] = ex.mention;
    rec["right"] = ex.right;
    json ids = json::array();
    for (const auto& id : ex.gold_ids) {
        ids.push_back(id.str());
    }
    rec["gold_ids"] = std::move(ids);
    if (ex.fold) {
        rec["fold"] = *ex.fold;
    }
    if (ex.target) {
        rec["target"] = *ex.target;
    }
    out << rec.dump() << '\n';
}

AbbreviationMap load_abbreviations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open abbreviation file " + path.string());
    }
    AbbreviationMap out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": expected two tab-separated columns");
        }
        std::string key = normalize_name(line.substr(0, tab));
        std::string value = normalize_name(line.substr(tab + 1));
        if (key.empty() || value.empty()) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": empty column");
        }
        out[std::move(key)] = std::move(value);
    }
    return out;
}

std::string expand_abbreviations(const std::string& text, const AbbreviationMap& abbrev) {
    if (abbrev.empty()) {
        return text;
    }
    std::vector<const std::pair<const std::string, std::string>*> keys;
    for (const auto& kv : abbrev) {
        keys.push_back(&kv);
    }
    std::stable_sort(keys.begin(), keys.end(), [](auto* a, auto* b) {
        return a->first.size() > b->first.size();
    });

    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const bool at_boundary = pos == 0 || !is_word_char(text[pos - 1]);
        bool replaced = false;
        if (at_boundary && is_word_char(text[pos])) {
            for (const auto* kv : keys) {
                const auto& key = kv->first;
                if (text.compare(pos, key.size(), key) != 0) {
                    continue;
                }
                const std::size_t end = pos + key.size();
                if (end < text.size() && is_word_char(text[end])) {
                    continue;
                }
                out += kv->second;
                pos = end;
                replaced = true;
                break;
            }
        }
        if (!replaced) {
            out.push_back(text[pos]);
            ++pos;
        }
    }
    return out;
}

MentionExample preprocess(const MentionExample& ex, const AbbreviationMap& abbrev) {
    MentionExample out = ex;
    const auto clean = [&](const std::string& s) {
        return collapse_whitespace_lower(expand_abbreviations(collapse_whitespace_lower(s), abbrev));
    };
    out.left = clean(ex.left);
    out.right = clean(ex.right);
    out.mention = normalize_name(clean(ex.mention));
    if (ex.target) {
        out.target = normalize_name(*ex.target);
    }
    return out;
}

FilterResult filter_linkable(const std::vector<MentionExample>& examples, const KnowledgeBase& kb) {
    FilterResult r;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        const bool linkable =
            !ex.mention.empty() && !ex.gold_ids.empty() &&
            std::all_of(ex.gold_ids.begin(), ex.gold_ids.end(),
                        [&](const ConceptId& id) { return kb.contains(id); });
        if (linkable) {
            r.kept.push_back(ex);
            r.kept_indices.push_back(i);
        } else {
            ++r.dropped;
        }
    }
    return r;
}

std::vector<TokenId> render_prompt(const std::string& text, const Vocab& vocab) {
    std::vector<TokenId> prompt{Vocab::kBos};
    const auto body = vocab.encode(text + std::string(template_texts()[0]), Vocab::Unknown::kSkip);
    prompt.insert(prompt.end(), body.begin(), body.end());
    return prompt;
}

EncodedInput render(const MentionExample& ex, const Vocab& vocab, std::size_t max_ctx) {
    const std::size_t left_keep = std::min(max_ctx, ex.left.size());
    const std::string left = ex.left.substr(ex.left.size() - left_keep);
    const std::string right = ex.right.substr(0, std::min(max_ctx, ex.right.size()));

    EncodedInput in;
    auto& enc = in.encoder_tokens;
    const auto append = [&](const std::string& s) {
        const auto ids = vocab.encode(s, Vocab::Unknown::kSkip);
        enc.insert(enc.end(), ids.begin(), ids.end());
    };
    enc.push_back(Vocab::kBos);
    append(left);
    enc.push_back(Vocab::kStart);
    append(ex.mention);
    enc.push_back(Vocab::kEnd);
    append(right);
    enc.push_back(Vocab::kEos);

    in.prompt_tokens = render_prompt(ex.mention, vocab);
    return in;
}

}  // namespace synlink
