#include "synlink/model.hpp"

#include <cmath>
#include <cstring>

#include "synlink/error.hpp"
#include "synlink/random.hpp"

namespace synlink {

namespace {

Vector sigmoid(const Vector& a) {
    return a.unaryExpr([](double x) {
        if (x >= 0.0) {
            return 1.0 / (1.0 + std::exp(-x));
        }
        const double e = std::exp(x);
        return e / (1.0 + e);
    });
}

Vector tanh_vec(const Vector& a) {
    return a.unaryExpr([](double x) { return std::tanh(x); });
}

void check_token(const Parameters& p, TokenId t) {
    if (t < 0 || t >= p.vocab_size()) {
        throw FormatError("token id " + std::to_string(t) + " outside vocabulary of size " +
                          std::to_string(p.vocab_size()));
    }
}

/// Gated-cell update given the input projections a_* = W_* x + b_*.
Vector gru_update(const GruWeights& w, const Vector& a_z, const Vector& a_r, const Vector& a_n,
                  const Vector& h, GruCache* cache) {
    Vector z = sigmoid(a_z + w.u_z * h);
    Vector r = sigmoid(a_r + w.u_r * h);
    Vector rh = r.cwiseProduct(h);
    Vector n = tanh_vec(a_n + w.u_n * rh);
    Vector next = n + z.cwiseProduct(h - n);
    if (cache != nullptr) {
        cache->h_prev = h;
        cache->z = std::move(z);
        cache->r = std::move(r);
        cache->rh = std::move(rh);
        cache->n = std::move(n);
    }
    return next;
}

struct GateGrads {
    Vector da_z, da_r, da_n;
};

/// Backward through the recurrent part of one cell step. Accumulates U
/// gradients, returns pre-activation gradients and writes dh_prev.
GateGrads gru_backward(const GruWeights& w, const GruCache& c, const Vector& dh_next,
                       GruWeights& gw, Vector& dh_prev) {
    const Vector& h = c.h_prev;
    const Vector dn = dh_next.cwiseProduct(Vector::Ones(h.size()) - c.z);
    const Vector dz = dh_next.cwiseProduct(h - c.n);
    dh_prev = dh_next.cwiseProduct(c.z);

    GateGrads g;
    g.da_n = dn.cwiseProduct(Vector::Ones(h.size()) - c.n.cwiseProduct(c.n));
    const Vector d_rh = w.u_n.transpose() * g.da_n;
    gw.u_n.noalias() += g.da_n * c.rh.transpose();
    const Vector dr = d_rh.cwiseProduct(h);
    dh_prev += d_rh.cwiseProduct(c.r);

    g.da_z = dz.cwiseProduct(c.z.cwiseProduct(Vector::Ones(h.size()) - c.z));
    gw.u_z.noalias() += g.da_z * h.transpose();
    dh_prev.noalias() += w.u_z.transpose() * g.da_z;

    g.da_r = dr.cwiseProduct(c.r.cwiseProduct(Vector::Ones(h.size()) - c.r));
    gw.u_r.noalias() += g.da_r * h.transpose();
    dh_prev.noalias() += w.u_r.transpose() * g.da_r;
    return g;
}

template <class Self, class View>
std::vector<View> list_arrays(Self& p) {
    std::vector<View> out;
    const auto add = [&](std::string_view name, auto& a) {
        out.push_back(View{name, a.data(), a.rows(), a.cols()});
    };
    add("embedding", p.embedding);
    add("encoder.w_z", p.encoder.w_z);
    add("encoder.w_r", p.encoder.w_r);
    add("encoder.w_n", p.encoder.w_n);
    add("encoder.u_z", p.encoder.u_z);
    add("encoder.u_r", p.encoder.u_r);
    add("encoder.u_n", p.encoder.u_n);
    add("encoder.b_z", p.encoder.b_z);
    add("encoder.b_r", p.encoder.b_r);
    add("encoder.b_n", p.encoder.b_n);
    add("decoder.w_z", p.decoder.w_z);
    add("decoder.w_r", p.decoder.w_r);
    add("decoder.w_n", p.decoder.w_n);
    add("decoder.u_z", p.decoder.u_z);
    add("decoder.u_r", p.decoder.u_r);
    add("decoder.u_n", p.decoder.u_n);
    add("decoder.b_z", p.decoder.b_z);
    add("decoder.b_r", p.decoder.b_r);
    add("decoder.b_n", p.decoder.b_n);
    add("head.w", p.head_w);
    add("head.b", p.head_b);
    return out;
}

}  // namespace

GruWeights::GruWeights(int hidden, int input)
    : w_z(Matrix::Zero(hidden, input)),
      w_r(Matrix::Zero(hidden, input)),
      w_n(Matrix::Zero(hidden, input)),
      u_z(Matrix::Zero(hidden, hidden)),
      u_r(Matrix::Zero(hidden, hidden)),
      u_n(Matrix::Zero(hidden, hidden)),
      b_z(Vector::Zero(hidden)),
      b_r(Vector::Zero(hidden)),
      b_n(Vector::Zero(hidden)) {}

Parameters::Parameters(int vocab_size, int hidden)
    : embedding(Matrix::Zero(vocab_size, hidden)),
      encoder(hidden, hidden),
      decoder(hidden, 2 * hidden),
      head_w(Matrix::Zero(vocab_size, hidden)),
      head_b(Vector::Zero(vocab_size)) {}

std::vector<ArrayView> Parameters::arrays() {
    return list_arrays<Parameters, ArrayView>(*this);
}

std::vector<ConstArrayView> Parameters::arrays() const {
    return list_arrays<const Parameters, ConstArrayView>(*this);
}

void Parameters::set_zero() {
    for (auto& a : arrays()) {
        std::fill(a.values().begin(), a.values().end(), 0.0);
    }
}

void Parameters::add_scaled(const Parameters& other, double scale) {
    auto dst = arrays();
    const auto src = other.arrays();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        auto d = dst[i].values();
        auto s = src[i].values();
        for (std::size_t j = 0; j < d.size(); ++j) {
            d[j] += scale * s[j];
        }
    }
}

double Parameters::squared_norm() const {
    double total = 0.0;
    for (const auto& a : arrays()) {
        for (double x : a.values()) {
            total += x * x;
        }
    }
    return total;
}

bool Parameters::all_finite() const {
    for (const auto& a : arrays()) {
        for (double x : a.values()) {
            if (!std::isfinite(x)) {
                return false;
            }
        }
    }
    return true;
}

bool operator==(const Parameters& a, const Parameters& b) {
    const auto x = a.arrays();
    const auto y = b.arrays();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].rows != y[i].rows || x[i].cols != y[i].cols) {
            return false;
        }
        const auto vx = x[i].values();
        const auto vy = y[i].values();
        // Bitwise comparison: +0.0/-0.0 and NaN payloads count as different.
        if (std::memcmp(vx.data(), vy.data(), vx.size_bytes()) != 0) {
            return false;
        }
    }
    return true;
}

std::string_view stage_name(Stage s) {
    switch (s) {
        case Stage::kInit:
            return "init";
        case Stage::kPositive:
            return "positive";
        case Stage::kNegative:
            return "negative";
    }
    return "init";
}

Stage parse_stage(std::string_view s) {
    if (s == "init") {
        return Stage::kInit;
    }
    if (s == "positive") {
        return Stage::kPositive;
    }
    if (s == "negative") {
        return Stage::kNegative;
    }
    throw FormatError("unknown stage tag '" + std::string(s) + "'");
}

Checkpoint Checkpoint::zeros(Vocab vocab, ModelConfig config) {
    if (config.hidden_dim < 2) {
        throw UsageError("hidden_dim must be at least 2");
    }
    Checkpoint c;
    c.params = Parameters(vocab.size(), config.hidden_dim);
    c.vocab = std::move(vocab);
    c.config = config;
    return c;
}

Checkpoint Checkpoint::initialize(Vocab vocab, ModelConfig config) {
    Checkpoint c = zeros(std::move(vocab), config);
    Rng rng(config.seed);
    for (auto& a : c.params.arrays()) {
        for (double& x : a.values()) {
            x = rng.uniform(-kInitRange, kInitRange);
        }
    }
    return c;
}

// ---------------------------------------------------------------------------

Vector softmax(const Vector& logits) {
    const double m = logits.maxCoeff();
    Vector e = (logits.array() - m).exp();
    return e / e.sum();
}

Vector log_softmax(const Vector& logits) {
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    return logits.array() - lse;
}

Vector encode(const Parameters& p, std::span<const TokenId> tokens) {
    const int d = p.hidden();
    if (tokens.empty()) {
        throw UsageError("cannot encode an empty token sequence");
    }
    const auto& w = p.encoder;
    Vector h = Vector::Zero(d);
    Vector sum = Vector::Zero(d);
    for (TokenId t : tokens) {
        check_token(p, t);
        const Vector x = p.embedding.row(t).transpose();
        h = gru_update(w, w.w_z * x + w.b_z, w.w_r * x + w.b_r, w.w_n * x + w.b_n, h, nullptr);
        sum += h;
    }
    return sum / static_cast<double>(tokens.size());
}

DecoderContext make_context(const Parameters& p, const Vector& summary) {
    const int d = p.hidden();
    const auto& w = p.decoder;
    DecoderContext ctx;
    ctx.summary = summary;
    ctx.proj_z = w.w_z.rightCols(d) * summary + w.b_z;
    ctx.proj_r = w.w_r.rightCols(d) * summary + w.b_r;
    ctx.proj_n = w.w_n.rightCols(d) * summary + w.b_n;
    return ctx;
}

namespace {

Vector decoder_cell(const Parameters& p, const DecoderContext& ctx, const Vector& state,
                    TokenId token, GruCache* cache) {
    check_token(p, token);
    const int d = p.hidden();
    const auto& w = p.decoder;
    const Vector x = p.embedding.row(token).transpose();
    return gru_update(w, w.w_z.leftCols(d) * x + ctx.proj_z, w.w_r.leftCols(d) * x + ctx.proj_r,
                      w.w_n.leftCols(d) * x + ctx.proj_n, state, cache);
}

Vector head(const Parameters& p, const Vector& state) {
    return p.head_w * state + p.head_b;
}

}  // namespace

StepOutput step(const Parameters& p, const DecoderContext& ctx, const Vector& state,
                TokenId token) {
    StepOutput out;
    out.state = decoder_cell(p, ctx, state, token, nullptr);
    out.logits = head(p, out.state);
    return out;
}

StepOutput step(const Parameters& p, const Vector& state, TokenId token, const Vector& summary) {
    return step(p, make_context(p, summary), state, token);
}

StepOutput run_prompt(const Parameters& p, const DecoderContext& ctx,
                      std::span<const TokenId> prompt) {
    if (prompt.empty()) {
        throw UsageError("decoder prompt must not be empty");
    }
    Vector state = Vector::Zero(p.hidden());
    for (TokenId t : prompt) {
        state = decoder_cell(p, ctx, state, t, nullptr);
    }
    StepOutput out;
    out.logits = head(p, state);
    out.state = std::move(state);
    return out;
}

double log_prob(const Parameters& p, const EncodedInput& input, std::span<const TokenId> entity) {
    if (entity.empty()) {
        throw UsageError("entity token sequence is empty");
    }
    const DecoderContext ctx = make_context(p, encode(p, input.encoder_tokens));
    StepOutput cur = run_prompt(p, ctx, input.prompt_tokens);
    double total = 0.0;
    for (std::size_t t = 0; t < entity.size(); ++t) {
        check_token(p, entity[t]);
        total += log_softmax(cur.logits)(entity[t]);
        if (t + 1 < entity.size()) {
            cur = step(p, ctx, cur.state, entity[t]);
        }
    }
    return total;
}

// ---------------------------------------------------------------------------

SequenceTrace forward(const Parameters& p, const EncodedInput& input,
                      std::span<const TokenId> entity) {
    if (entity.empty()) {
        throw UsageError("entity token sequence is empty");
    }
    if (input.encoder_tokens.empty() || input.prompt_tokens.empty()) {
        throw UsageError("encoded input is missing encoder tokens or prompt");
    }
    const int d = p.hidden();
    SequenceTrace tr;
    tr.encoder_tokens = input.encoder_tokens;
    tr.targets.assign(entity.begin(), entity.end());

    const auto& we = p.encoder;
    Vector h = Vector::Zero(d);
    Vector sum = Vector::Zero(d);
    tr.encoder_steps.resize(tr.encoder_tokens.size());
    for (std::size_t i = 0; i < tr.encoder_tokens.size(); ++i) {
        const TokenId t = tr.encoder_tokens[i];
        check_token(p, t);
        const Vector x = p.embedding.row(t).transpose();
        h = gru_update(we, we.w_z * x + we.b_z, we.w_r * x + we.b_r, we.w_n * x + we.b_n, h,
                       &tr.encoder_steps[i]);
        sum += h;
    }
    tr.summary = sum / static_cast<double>(tr.encoder_tokens.size());
    const DecoderContext ctx = make_context(p, tr.summary);

    tr.decoder_inputs = input.prompt_tokens;
    tr.decoder_inputs.insert(tr.decoder_inputs.end(), entity.begin(), entity.end() - 1);
    tr.first_scored = input.prompt_tokens.size() - 1;

    const std::size_t steps = tr.decoder_inputs.size();
    tr.decoder_steps.resize(steps);
    tr.decoder_states.resize(steps);
    tr.probs.reserve(entity.size());
    Vector state = Vector::Zero(d);
    for (std::size_t j = 0; j < steps; ++j) {
        state = decoder_cell(p, ctx, state, tr.decoder_inputs[j], &tr.decoder_steps[j]);
        tr.decoder_states[j] = state;
        if (j >= tr.first_scored) {
            const std::size_t t = j - tr.first_scored;
            check_token(p, tr.targets[t]);
            Vector logp = log_softmax(head(p, state));
            tr.log_prob += logp(tr.targets[t]);
            tr.probs.push_back(logp.array().exp());
            tr.log_probs.push_back(std::move(logp));
        }
    }
    return tr;
}

std::vector<Vector> log_prob_dlogits(const SequenceTrace& trace, double scale) {
    std::vector<Vector> out;
    out.reserve(trace.probs.size());
    for (std::size_t t = 0; t < trace.probs.size(); ++t) {
        Vector g = -scale * trace.probs[t];
        g(trace.targets[t]) += scale;
        out.push_back(std::move(g));
    }
    return out;
}

void backward(const Parameters& p, const SequenceTrace& tr, std::span<const Vector> dlogits,
              Parameters& grad) {
    if (dlogits.size() != tr.scored_steps()) {
        throw UsageError("backward: one logit gradient per scored step is required");
    }
    const int d = p.hidden();
    const auto& wd = p.decoder;
    auto& gd = grad.decoder;

    Vector dg = Vector::Zero(d);
    Vector sum_da_z = Vector::Zero(d);
    Vector sum_da_r = Vector::Zero(d);
    Vector sum_da_n = Vector::Zero(d);
    Vector dh_prev(d);
    for (std::size_t j = tr.decoder_inputs.size(); j-- > 0;) {
        if (j >= tr.first_scored) {
            const Vector& dl = dlogits[j - tr.first_scored];
            grad.head_w.noalias() += dl * tr.decoder_states[j].transpose();
            grad.head_b += dl;
            dg.noalias() += p.head_w.transpose() * dl;
        }
        const GateGrads g = gru_backward(wd, tr.decoder_steps[j], dg, gd, dh_prev);
        const TokenId tok = tr.decoder_inputs[j];
        const Vector x = p.embedding.row(tok).transpose();
        gd.w_z.leftCols(d).noalias() += g.da_z * x.transpose();
        gd.w_r.leftCols(d).noalias() += g.da_r * x.transpose();
        gd.w_n.leftCols(d).noalias() += g.da_n * x.transpose();
        Vector dx = wd.w_z.leftCols(d).transpose() * g.da_z;
        dx.noalias() += wd.w_r.leftCols(d).transpose() * g.da_r;
        dx.noalias() += wd.w_n.leftCols(d).transpose() * g.da_n;
        grad.embedding.row(tok) += dx.transpose();
        sum_da_z += g.da_z;
        sum_da_r += g.da_r;
        sum_da_n += g.da_n;
        dg = dh_prev;
    }
    gd.b_z += sum_da_z;
    gd.b_r += sum_da_r;
    gd.b_n += sum_da_n;
    gd.w_z.rightCols(d).noalias() += sum_da_z * tr.summary.transpose();
    gd.w_r.rightCols(d).noalias() += sum_da_r * tr.summary.transpose();
    gd.w_n.rightCols(d).noalias() += sum_da_n * tr.summary.transpose();
    Vector dsummary = wd.w_z.rightCols(d).transpose() * sum_da_z;
    dsummary.noalias() += wd.w_r.rightCols(d).transpose() * sum_da_r;
    dsummary.noalias() += wd.w_n.rightCols(d).transpose() * sum_da_n;

    // Mean pooling: every encoder state receives dsummary / L.
    const auto& we = p.encoder;
    auto& ge = grad.encoder;
    const Vector dpool = dsummary / static_cast<double>(tr.encoder_tokens.size());
    Vector carry = Vector::Zero(d);
    for (std::size_t i = tr.encoder_tokens.size(); i-- > 0;) {
        const Vector dh = dpool + carry;
        const GateGrads g = gru_backward(we, tr.encoder_steps[i], dh, ge, dh_prev);
        const TokenId tok = tr.encoder_tokens[i];
        const Vector x = p.embedding.row(tok).transpose();
        ge.w_z.noalias() += g.da_z * x.transpose();
        ge.w_r.noalias() += g.da_r * x.transpose();
        ge.w_n.noalias() += g.da_n * x.transpose();
        ge.b_z += g.da_z;
        ge.b_r += g.da_r;
        ge.b_n += g.da_n;
        Vector dx = we.w_z.transpose() * g.da_z;
        dx.noalias() += we.w_r.transpose() * g.da_r;
        dx.noalias() += we.w_n.transpose() * g.da_n;
        grad.embedding.row(tok) += dx.transpose();
        carry = dh_prev;
    }
}

}  // namespace synlink
