#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace synlink {

using TokenId = int;

/// Character-level vocabulary: the five special tokens at ids 0..4, then
/// every byte value seen in the construction corpus in ascending order.
class Vocab {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kBos = 1;
    static constexpr TokenId kEos = 2;
    static constexpr TokenId kStart = 3;  // [ST], opens the marked mention
    static constexpr TokenId kEnd = 4;    // [ET]
    static constexpr int kNumSpecial = 5;

    enum class Unknown { kThrow, kSkip };

    Vocab();

    /// Builds a vocabulary over every byte occurring in `texts`, plus the
    /// characters of the fixed prompt and clause templates.
    static Vocab from_texts(std::span<const std::string> texts);

    /// Rebuilds from the byte list returned by bytes().
    static Vocab from_bytes(std::span<const std::uint8_t> bytes);

    int size() const noexcept { return static_cast<int>(id_to_byte_.size()) + kNumSpecial; }

    bool has_char(char c) const noexcept;
    TokenId id_of(char c) const;  // throws FormatError naming the character

    /// Tokenizes text byte-by-byte. kThrow raises FormatError on an unknown
    /// byte; kSkip drops it.
    std::vector<TokenId> encode(std::string_view text, Unknown policy = Unknown::kThrow) const;

    /// Tokenization of an entity name followed by [EOS].
    std::vector<TokenId> encode_entity(std::string_view name) const;

    /// Inverse of encode for ordinary tokens; specials render as "[BOS]" etc.
    std::string decode(std::span<const TokenId> tokens) const;

    static std::string_view special_name(TokenId id);

    const std::vector<std::uint8_t>& bytes() const noexcept { return id_to_byte_; }

    friend bool operator==(const Vocab& a, const Vocab& b) {
        return a.id_to_byte_ == b.id_to_byte_;
    }

private:
    std::vector<std::uint8_t> id_to_byte_;  // index i ↔ token id i + kNumSpecial
    std::array<int, 256> byte_to_id_{};     // -1 when absent
};

/// Texts whose characters every vocabulary must cover: the decoder prompt
/// suffix and the two pre-training clause templates.
std::span<const std::string_view> template_texts();

}  // namespace synlink
