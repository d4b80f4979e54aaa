#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synlink/vocab.hpp"

namespace synlink {

/// Prefix tree over tokenized KB names. Nodes live in a flat array (root at
/// index 0) and keep their children sorted by token id. Immutable after build.
class TokenTrie {
public:
    using NodeIndex = std::uint32_t;
    static constexpr NodeIndex kRoot = 0;
    static constexpr std::uint32_t kFormatVersion = 1;

    struct Child {
        TokenId token;
        NodeIndex node;
    };

    TokenTrie();

    /// Throws FormatError naming the first out-of-vocabulary character.
    static TokenTrie build(std::span<const std::string> names, const Vocab& vocab);

    /// Node reached by walking `prefix` from the root, or -1 if off-trie.
    std::int64_t find(std::span<const TokenId> prefix) const;

    /// Child tokens of the node at `prefix`, plus [EOS] when the node ends a
    /// name. Sorted ascending. Throws UsageError if the prefix is off-trie.
    std::vector<TokenId> allowed_next(std::span<const TokenId> prefix) const;

    /// Same as allowed_next for a node index.
    std::vector<TokenId> allowed_at(NodeIndex node) const;

    /// True iff `tokens` (without [EOS]) is exactly a stored name.
    bool contains(std::span<const TokenId> tokens) const;

    std::span<const Child> children(NodeIndex node) const;
    bool is_terminal(NodeIndex node) const { return nodes_[node].terminal; }
    /// Child node for `token`, or -1.
    std::int64_t step(NodeIndex node, TokenId token) const;

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t name_count() const noexcept { return terminals_; }

    /// Byte stream: "ATRI", u32 version, u32 node count, then nodes in
    /// preorder as (u8 terminal, u32 child count, child token ids as u32,
    /// each followed by that child's subtree). All integers little-endian.
    std::vector<std::uint8_t> serialize() const;
    static TokenTrie deserialize(std::span<const std::uint8_t> bytes);

    friend bool operator==(const TokenTrie& a, const TokenTrie& b);

private:
    struct Node {
        std::vector<Child> children;
        bool terminal = false;
    };

    NodeIndex insert_child(NodeIndex parent, TokenId token);

    std::vector<Node> nodes_;
    std::size_t terminals_ = 0;
};

}  // namespace synlink
