#include "synlink/vocab.hpp"

#include <algorithm>
#include <cstdio>

#include "synlink/error.hpp"

namespace synlink {

namespace {

constexpr std::array<std::string_view, 3> kTemplates = {
    " is",
    " is defined as ",
    " has synonyms such as ",
};

constexpr std::array<std::string_view, Vocab::kNumSpecial> kSpecialNames = {
    "[PAD]", "[BOS]", "[EOS]", "[ST]", "[ET]",
};

std::string describe_byte(unsigned char c) {
    char buf[16];
    if (c >= 0x20 && c < 0x7f) {
        std::snprintf(buf, sizeof buf, "'%c'", c);
    } else {
        std::snprintf(buf, sizeof buf, "byte 0x%02x", c);
    }
    return buf;
}

}  // namespace

std::span<const std::string_view> template_texts() {
    return kTemplates;
}

Vocab::Vocab() {
    byte_to_id_.fill(-1);
}

Vocab Vocab::from_texts(std::span<const std::string> texts) {
    std::array<bool, 256> seen{};
    const auto mark = [&](std::string_view s) {
        for (char c : s) {
            seen[static_cast<unsigned char>(c)] = true;
        }
    };
    for (const auto& t : texts) {
        mark(t);
    }
    for (auto t : kTemplates) {
        mark(t);
    }
    std::vector<std::uint8_t> bytes;
    for (int b = 0; b < 256; ++b) {
        if (seen[b]) {
            bytes.push_back(static_cast<std::uint8_t>(b));
        }
    }
    return from_bytes(bytes);
}

Vocab Vocab::from_bytes(std::span<const std::uint8_t> bytes) {
    Vocab v;
    for (std::uint8_t b : bytes) {
        if (v.byte_to_id_[b] >= 0) {
            throw FormatError("vocabulary lists " + describe_byte(b) + " twice");
        }
        if (!v.id_to_byte_.empty() && b < v.id_to_byte_.back()) {
            throw FormatError("vocabulary bytes must be ascending");
        }
        v.byte_to_id_[b] = static_cast<int>(v.id_to_byte_.size()) + kNumSpecial;
        v.id_to_byte_.push_back(b);
    }
    return v;
}

bool Vocab::has_char(char c) const noexcept {
    return byte_to_id_[static_cast<unsigned char>(c)] >= 0;
}

TokenId Vocab::id_of(char c) const {
    const int id = byte_to_id_[static_cast<unsigned char>(c)];
    if (id < 0) {
        throw FormatError("character " + describe_byte(static_cast<unsigned char>(c)) +
                          " is not in the vocabulary");
    }
    return id;
}

std::vector<TokenId> Vocab::encode(std::string_view text, Unknown policy) const {
    std::vector<TokenId> out;
    out.reserve(text.size());
    for (char c : text) {
        if (policy == Unknown::kSkip && !has_char(c)) {
            continue;
        }
        out.push_back(id_of(c));
    }
    return out;
}

std::vector<TokenId> Vocab::encode_entity(std::string_view name) const {
    auto out = encode(name);
    out.push_back(kEos);
    return out;
}

std::string Vocab::decode(std::span<const TokenId> tokens) const {
    std::string out;
    for (TokenId t : tokens) {
        if (t >= 0 && t < kNumSpecial) {
            out += special_name(t);
        } else if (t >= kNumSpecial && t < size()) {
            out.push_back(static_cast<char>(id_to_byte_[t - kNumSpecial]));
        } else {
            throw FormatError("token id " + std::to_string(t) + " out of range");
        }
    }
    return out;
}

std::string_view Vocab::special_name(TokenId id) {
    return kSpecialNames.at(static_cast<std::size_t>(id));
}

}  // namespace synlink
