#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "synlink/kb.hpp"
#include "synlink/vocab.hpp"

namespace synlink {

struct MentionExample {
    std::string left;   // context preceding the mention
    std::string mention;
    std::string right;  // context following the mention
    ConceptIdSet gold_ids;
    std::optional<int> fold;
    /// Explicit training target (a KB name); set by pre-training synthesis.
    std::optional<std::string> target;
};

/// Encoder token sequence plus the forced decoder prefix.
struct EncodedInput {
    std::vector<TokenId> encoder_tokens;
    std::vector<TokenId> prompt_tokens;

    friend bool operator==(const EncodedInput&, const EncodedInput&) = default;
};

using AbbreviationMap = std::map<std::string, std::string>;

inline constexpr std::size_t kDefaultMaxContext = 128;

std::vector<MentionExample> load_mentions(const std::filesystem::path& path);

/// Writes the line-delimited mention format (no header line).
void write_mention_record(std::ostream& out, const MentionExample& ex);

/// Two-column `short<TAB>long` file; keys are normalized.
AbbreviationMap load_abbreviations(const std::filesystem::path& path);

/// Lowercases, expands whole-word abbreviations (longest key first) and
/// collapses whitespace. The mention is also trimmed.
MentionExample preprocess(const MentionExample& ex, const AbbreviationMap& abbrev);

/// Replaces whole-word occurrences of abbreviation keys in already-lowercased text.
std::string expand_abbreviations(const std::string& text, const AbbreviationMap& abbrev);

struct FilterResult {
    std::vector<MentionExample> kept;
    std::vector<std::size_t> kept_indices;  // positions in the input list
    std::size_t dropped = 0;
};

/// Keeps examples whose gold identifiers all exist in the KB.
FilterResult filter_linkable(const std::vector<MentionExample>& examples, const KnowledgeBase& kb);

/// Encoder input `[BOS] left[-max_ctx:] [ST] mention [ET] right[:max_ctx] [EOS]`
/// and decoder prompt `[BOS] mention is`. Bytes missing from the vocabulary
/// are dropped.
EncodedInput render(const MentionExample& ex, const Vocab& vocab,
                    std::size_t max_ctx = kDefaultMaxContext);

/// Prompt for a bare surface form: `[BOS] text is`.
std::vector<TokenId> render_prompt(const std::string& text, const Vocab& vocab);

}  // namespace synlink
