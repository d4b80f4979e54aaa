#include "synlink/trie.hpp"

#include <algorithm>
#include <functional>

#include "synlink/error.hpp"

namespace synlink {

namespace {

constexpr std::uint8_t kMagic[4] = {'A', 'T', 'R', 'I'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        }
        return v;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw FormatError("trie stream truncated at byte " + std::to_string(pos_));
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

TokenTrie::TokenTrie() : nodes_(1) {}

TokenTrie::NodeIndex TokenTrie::insert_child(NodeIndex parent, TokenId token) {
    auto& kids = nodes_[parent].children;
    auto it = std::lower_bound(kids.begin(), kids.end(), token,
                               [](const Child& c, TokenId t) { return c.token < t; });
    if (it != kids.end() && it->token == token) {
        return it->node;
    }
    const auto idx = static_cast<NodeIndex>(nodes_.size());
    kids.insert(it, Child{token, idx});
    nodes_.emplace_back();  // invalidates `kids`
    return idx;
}

TokenTrie TokenTrie::build(std::span<const std::string> names, const Vocab& vocab) {
    TokenTrie trie;
    for (const auto& name : names) {
        if (name.empty()) {
            throw UsageError("cannot insert an empty name into the trie");
        }
        const auto tokens = vocab.encode(name);
        NodeIndex node = kRoot;
        for (TokenId t : tokens) {
            node = trie.insert_child(node, t);
        }
        if (!trie.nodes_[node].terminal) {
            trie.nodes_[node].terminal = true;
            ++trie.terminals_;
        }
    }
    return trie;
}

std::span<const TokenTrie::Child> TokenTrie::children(NodeIndex node) const {
    return nodes_[node].children;
}

std::int64_t TokenTrie::step(NodeIndex node, TokenId token) const {
    const auto& kids = nodes_[node].children;
    auto it = std::lower_bound(kids.begin(), kids.end(), token,
                               [](const Child& c, TokenId t) { return c.token < t; });
    if (it == kids.end() || it->token != token) {
        return -1;
    }
    return it->node;
}

std::int64_t TokenTrie::find(std::span<const TokenId> prefix) const {
    std::int64_t node = kRoot;
    for (TokenId t : prefix) {
        node = step(static_cast<NodeIndex>(node), t);
        if (node < 0) {
            return -1;
        }
    }
    return node;
}

std::vector<TokenId> TokenTrie::allowed_at(NodeIndex node) const {
    std::vector<TokenId> out;
    const auto& n = nodes_.at(node);
    out.reserve(n.children.size() + 1);
    for (const auto& c : n.children) {
        out.push_back(c.token);
    }
    if (n.terminal) {
        out.push_back(Vocab::kEos);
        std::sort(out.begin(), out.end());
    }
    return out;
}

std::vector<TokenId> TokenTrie::allowed_next(std::span<const TokenId> prefix) const {
    const auto node = find(prefix);
    if (node < 0) {
        throw UsageError("prefix is not a path in the trie");
    }
    return allowed_at(static_cast<NodeIndex>(node));
}

bool TokenTrie::contains(std::span<const TokenId> tokens) const {
    const auto node = find(tokens);
    return node >= 0 && nodes_[static_cast<std::size_t>(node)].terminal;
}

std::vector<std::uint8_t> TokenTrie::serialize() const {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(nodes_.size()));
    // Explicit stack: name length bounds recursion depth only loosely.
    std::vector<NodeIndex> stack{kRoot};
    while (!stack.empty()) {
        const NodeIndex n = stack.back();
        stack.pop_back();
        const auto& node = nodes_[n];
        out.push_back(node.terminal ? 1 : 0);
        put_u32(out, static_cast<std::uint32_t>(node.children.size()));
        for (const auto& c : node.children) {
            put_u32(out, static_cast<std::uint32_t>(c.token));
        }
        for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) {
            stack.push_back(it->node);
        }
    }
    return out;
}

TokenTrie TokenTrie::deserialize(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    for (std::uint8_t m : kMagic) {
        if (r.u8() != m) {
            throw FormatError("not a trie stream (bad magic)");
        }
    }
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion) {
        throw FormatError("unsupported trie format version " + std::to_string(version));
    }
    const std::uint32_t count = r.u32();
    if (count == 0) {
        throw FormatError("trie stream declares zero nodes");
    }
    TokenTrie trie;
    trie.nodes_.clear();
    trie.nodes_.reserve(count);

    // Preorder: each pending entry is (parent, token) awaiting its node record.
    struct Pending {
        std::int64_t parent;
        TokenId token;
    };
    std::vector<Pending> stack{{-1, 0}};
    while (!stack.empty()) {
        const Pending p = stack.back();
        stack.pop_back();
        if (trie.nodes_.size() >= count) {
            throw FormatError("trie stream has more nodes than declared");
        }
        const auto idx = static_cast<NodeIndex>(trie.nodes_.size());
        trie.nodes_.emplace_back();
        const std::uint8_t terminal = r.u8();
        if (terminal > 1) {
            throw FormatError("corrupt terminal flag in trie stream");
        }
        trie.nodes_[idx].terminal = terminal == 1;
        trie.terminals_ += terminal;
        if (p.parent >= 0) {
            trie.nodes_[static_cast<std::size_t>(p.parent)].children.push_back({p.token, idx});
        }
        const std::uint32_t n_children = r.u32();
        if (n_children > count) {
            throw FormatError("corrupt child count in trie stream");
        }
        std::vector<TokenId> tokens(n_children);
        for (auto& t : tokens) {
            t = static_cast<TokenId>(r.u32());
            if (t < Vocab::kNumSpecial) {
                throw FormatError("trie edge labelled with a special token");
            }
        }
        if (!std::is_sorted(tokens.begin(), tokens.end()) ||
            std::adjacent_find(tokens.begin(), tokens.end()) != tokens.end()) {
            throw FormatError("trie children out of order");
        }
        for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
            stack.push_back({idx, *it});
        }
    }
    if (trie.nodes_.size() != count) {
        throw FormatError("trie stream has fewer nodes than declared");
    }
    if (!r.done()) {
        throw FormatError("trailing bytes after trie stream");
    }
    for (std::size_t i = 1; i < trie.nodes_.size(); ++i) {
        const auto& n = trie.nodes_[i];
        if (n.children.empty() && !n.terminal) {
            throw FormatError("trie leaf is not terminal");
        }
    }
    return trie;
}

bool operator==(const TokenTrie& a, const TokenTrie& b) {
    if (a.nodes_.size() != b.nodes_.size()) {
        return false;
    }
    // Structural comparison by simultaneous walk; node numbering may differ.
    std::vector<std::pair<TokenTrie::NodeIndex, TokenTrie::NodeIndex>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        const auto& nx = a.nodes_[x];
        const auto& ny = b.nodes_[y];
        if (nx.terminal != ny.terminal || nx.children.size() != ny.children.size()) {
            return false;
        }
        for (std::size_t i = 0; i < nx.children.size(); ++i) {
            if (nx.children[i].token != ny.children[i].token) {
                return false;
            }
            stack.emplace_back(nx.children[i].node, ny.children[i].node);
        }
    }
    return true;
}

}  // namespace synlink
