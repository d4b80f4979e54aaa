#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "synlink/corpus.hpp"
#include "synlink/vocab.hpp"

namespace synlink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Weights of one gated recurrent cell (update z, reset r, candidate n):
///   z = σ(W_z x + U_z h + b_z),  r = σ(W_r x + U_r h + b_r)
///   n = tanh(W_n x + U_n (r ⊙ h) + b_n),  h' = (1 − z) ⊙ n + z ⊙ h
struct GruWeights {
    Matrix w_z, w_r, w_n;  // hidden × input
    Matrix u_z, u_r, u_n;  // hidden × hidden
    Vector b_z, b_r, b_n;

    GruWeights() = default;
    GruWeights(int hidden, int input);
};

/// Mutable view of one named parameter array (column-major storage).
struct ArrayView {
    std::string_view name;
    double* data;
    Eigen::Index rows;
    Eigen::Index cols;

    std::span<double> values() const { return {data, static_cast<std::size_t>(rows * cols)}; }
};

struct ConstArrayView {
    std::string_view name;
    const double* data;
    Eigen::Index rows;
    Eigen::Index cols;

    std::span<const double> values() const {
        return {data, static_cast<std::size_t>(rows * cols)};
    }
};

/// All trainable arrays. The decoder cell reads [embedding(token) ⧺ summary],
/// so its W matrices are hidden × 2·hidden.
struct Parameters {
    Matrix embedding;  // V × d, shared by encoder and decoder
    GruWeights encoder;
    GruWeights decoder;
    Matrix head_w;  // V × d
    Vector head_b;  // V

    Parameters() = default;
    Parameters(int vocab_size, int hidden);  // all zeros

    int vocab_size() const { return static_cast<int>(embedding.rows()); }
    int hidden() const { return static_cast<int>(embedding.cols()); }

    /// Arrays in a fixed canonical order (used for I/O, optimizers, gradcheck).
    std::vector<ArrayView> arrays();
    std::vector<ConstArrayView> arrays() const;

    Parameters zeros_like() const { return Parameters(vocab_size(), hidden()); }
    void set_zero();
    /// this += scale · other
    void add_scaled(const Parameters& other, double scale);
    double squared_norm() const;
    bool all_finite() const;

    friend bool operator==(const Parameters& a, const Parameters& b);
};

struct ModelConfig {
    int hidden_dim = 64;
    std::uint64_t seed = 0;
};

enum class Stage { kInit, kPositive, kNegative };
std::string_view stage_name(Stage s);
Stage parse_stage(std::string_view s);

struct AdamState {
    Parameters m;
    Parameters v;
    std::int64_t step = 0;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

inline constexpr double kInitRange = 0.08;

struct Checkpoint {
    Vocab vocab;
    ModelConfig config;
    Parameters params;
    Stage stage = Stage::kInit;
    std::optional<AdamState> optimizer;
    /// Free-form provenance recorded in the file header (tool version, seed, digests).
    std::map<std::string, std::string> metadata;

    /// Parameters drawn uniformly from [−kInitRange, kInitRange] with config.seed.
    static Checkpoint initialize(Vocab vocab, ModelConfig config);
    /// All-zero parameters (the uniform-distribution model).
    static Checkpoint zeros(Vocab vocab, ModelConfig config);

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
    std::vector<std::uint8_t> to_bytes() const;
    static Checkpoint from_bytes(std::span<const std::uint8_t> bytes);
};

// ---------------------------------------------------------------------------
// Inference

/// Mean of the encoder cell's hidden states over `tokens`.
Vector encode(const Parameters& p, std::span<const TokenId> tokens);

/// Per-input decoder constants: the summary and its projection through the
/// decoder input weights (plus biases), reused at every step.
struct DecoderContext {
    Vector summary;
    Vector proj_z, proj_r, proj_n;
};

DecoderContext make_context(const Parameters& p, const Vector& summary);

struct StepOutput {
    Vector state;
    Vector logits;
};

/// One decoder step: consume `token` from `state`, return the next state
/// and the next-token logits.
StepOutput step(const Parameters& p, const DecoderContext& ctx, const Vector& state, TokenId token);
StepOutput step(const Parameters& p, const Vector& state, TokenId token, const Vector& summary);

/// Decoder state (and logits) after consuming the whole prompt.
StepOutput run_prompt(const Parameters& p, const DecoderContext& ctx,
                      std::span<const TokenId> prompt);

Vector softmax(const Vector& logits);
Vector log_softmax(const Vector& logits);

/// Teacher-forced log p(entity | input); `entity` must end with [EOS].
double log_prob(const Parameters& p, const EncodedInput& input, std::span<const TokenId> entity);

// ---------------------------------------------------------------------------
// Training

/// Cached activations of one gated-cell step.
struct GruCache {
    Vector h_prev, z, r, rh, n;
};

/// Forward record of one teacher-forced (input, entity) pass.
struct SequenceTrace {
    std::vector<TokenId> encoder_tokens;
    std::vector<GruCache> encoder_steps;
    Vector summary;
    std::vector<TokenId> decoder_inputs;  // prompt followed by entity[:-1]
    std::vector<GruCache> decoder_steps;
    std::vector<Vector> decoder_states;  // state after each decoder step
    std::size_t first_scored = 0;        // decoder step whose logits predict targets[0]
    std::vector<TokenId> targets;        // the entity tokens
    std::vector<Vector> probs;           // softmax at each scored step
    std::vector<Vector> log_probs;       // log-softmax at each scored step
    double log_prob = 0.0;

    std::size_t scored_steps() const { return targets.size(); }
};

SequenceTrace forward(const Parameters& p, const EncodedInput& input,
                      std::span<const TokenId> entity);

/// Accumulates into `grad` the gradient of a scalar loss whose derivative
/// with respect to the logits at scored step t is dlogits[t].
void backward(const Parameters& p, const SequenceTrace& trace, std::span<const Vector> dlogits,
              Parameters& grad);

/// Logit gradients of log p(entity | input): onehot(target) − probs, scaled.
std::vector<Vector> log_prob_dlogits(const SequenceTrace& trace, double scale);

}  // namespace synlink
