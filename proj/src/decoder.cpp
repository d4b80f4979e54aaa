#include "synlink/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "synlink/error.hpp"

namespace synlink {

namespace {

struct Hypothesis {
    std::vector<TokenId> tokens;
    TokenTrie::NodeIndex node = TokenTrie::kRoot;
    double score = 0.0;
    Vector state;
    Vector logits;
};

struct Candidate {
    std::size_t parent;
    TokenId token;
    double score;
};

}  // namespace

std::vector<Prediction> constrained_beam_search(const Parameters& params, const Vocab& vocab,
                                                const EncodedInput& input, const TokenTrie& trie,
                                                const KnowledgeBase& kb, BeamConfig cfg) {
    if (cfg.top_k == 0 || cfg.beam < cfg.top_k) {
        throw UsageError("beam search requires beam >= top_k >= 1");
    }
    const DecoderContext ctx = make_context(params, encode(params, input.encoder_tokens));
    StepOutput start = run_prompt(params, ctx, input.prompt_tokens);

    std::vector<Hypothesis> live(1);
    live[0].state = std::move(start.state);
    live[0].logits = std::move(start.logits);

    std::vector<Prediction> finished;
    const auto kth_finished = [&]() {
        std::vector<double> s;
        for (const auto& f : finished) {
            s.push_back(f.score);
        }
        std::nth_element(s.begin(), s.begin() + static_cast<long>(cfg.top_k - 1), s.end(),
                         std::greater<>());
        return s[cfg.top_k - 1];
    };

    while (!live.empty()) {
        std::vector<Candidate> expansions;
        for (std::size_t h = 0; h < live.size(); ++h) {
            const Hypothesis& hyp = live[h];
            const Vector logp = log_softmax(hyp.logits);
            if (trie.is_terminal(hyp.node)) {
                Prediction p;
                p.name = vocab.decode(hyp.tokens);
                p.ids = kb.align(p.name);
                p.score = hyp.score + logp(Vocab::kEos);
                finished.push_back(std::move(p));
            }
            for (const auto& child : trie.children(hyp.node)) {
                expansions.push_back({h, child.token, hyp.score + logp(child.token)});
            }
        }
        // Deterministic pruning: score, then the extended token sequence.
        const auto better = [&](const Candidate& a, const Candidate& b) {
            if (a.score != b.score) {
                return a.score > b.score;
            }
            const auto& ta = live[a.parent].tokens;
            const auto& tb = live[b.parent].tokens;
            if (ta != tb) {
                return ta < tb;
            }
            return a.token < b.token;
        };
        if (expansions.size() > cfg.beam) {
            std::partial_sort(expansions.begin(), expansions.begin() + static_cast<long>(cfg.beam),
                              expansions.end(), better);
            expansions.resize(cfg.beam);
        } else {
            std::sort(expansions.begin(), expansions.end(), better);
        }
        // Log-probs only decrease, so no live hypothesis can overtake the
        // current k-th finished one once it falls strictly below it.
        if (finished.size() >= cfg.top_k && !expansions.empty() &&
            expansions.front().score < kth_finished()) {
            break;
        }
        std::vector<Hypothesis> next;
        next.reserve(expansions.size());
        for (const auto& c : expansions) {
            const Hypothesis& parent = live[c.parent];
            Hypothesis h;
            h.tokens = parent.tokens;
            h.tokens.push_back(c.token);
            h.node = static_cast<TokenTrie::NodeIndex>(trie.step(parent.node, c.token));
            h.score = c.score;
            StepOutput out = step(params, ctx, parent.state, c.token);
            h.state = std::move(out.state);
            h.logits = std::move(out.logits);
            next.push_back(std::move(h));
        }
        live = std::move(next);
    }

    std::sort(finished.begin(), finished.end(), [](const Prediction& a, const Prediction& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.name < b.name;
    });
    if (finished.size() > cfg.top_k) {
        finished.resize(cfg.top_k);
    }
    for (const auto& p : finished) {
        if (!std::isfinite(p.score)) {
            throw NumericError("beam search produced a non-finite score");
        }
    }
    return finished;
}

std::optional<std::size_t> rank_of_gold(std::span<const Prediction> predictions,
                                        std::span<const ConceptId> gold) {
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (intersects(predictions[i].ids, gold)) {
            return i + 1;
        }
    }
    return std::nullopt;
}

}  // namespace synlink
