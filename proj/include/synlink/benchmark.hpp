#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "synlink/corpus.hpp"
#include "synlink/evalsuite.hpp"
#include "synlink/kb.hpp"
#include "synlink/optim.hpp"
#include "synlink/preference.hpp"

namespace synlink {

struct BenchmarkConfig {
    std::size_t families = 50;            // shared stems
    std::size_t concepts_per_family = 4;  // siblings differing only by a modifier
    std::size_t train_mentions = 500;
    std::size_t test_mentions = 200;
    std::uint64_t seed = 2024;
};

/// A synthetic linking task whose concepts come in families of confusable
/// siblings: every sibling shares the family stem, so names of distinct
/// identifiers overlap heavily in character trigrams.
struct Benchmark {
    KnowledgeBase kb;
    std::vector<MentionExample> train;
    std::vector<MentionExample> test;
};

Benchmark make_confusable_benchmark(const BenchmarkConfig& cfg = {});

/// Writes kb.jsonl, train.jsonl and test.jsonl into `dir`.
void write_benchmark(const Benchmark& b, const std::filesystem::path& dir);

/// Settings of the positive-then-preference comparison run on a benchmark.
/// Defaults were chosen on benchmark instances generated with other data
/// seeds, never on the default instance.
struct TwoStageConfig {
    int hidden_dim = 32;
    std::uint64_t seed = 1;
    OptimizerConfig positive{.learning_rate = 1e-2, .weight_decay = 0.0, .warmup_steps = 0,
                             .batch_size = 16, .steps = 2000, .label_smoothing = 0.1};
    PreferenceConfig preference{.epochs = 1, .opt = {.learning_rate = 1e-4, .batch_size = 16}};
    MiningConfig mining{};
    BeamConfig beam{};
};

struct TwoStageOutcome {
    Checkpoint model1;
    Checkpoint model2;
    std::vector<std::vector<Prediction>> predictions1;
    std::vector<std::vector<Prediction>> predictions2;
    EvalReport stage1;
    EvalReport stage2;
    GapReport gaps1;
    GapReport gaps2;
    std::size_t pairs = 0;
    double seconds = 0.0;
};

TwoStageOutcome run_two_stage(const Benchmark& b, const TwoStageConfig& cfg);

}  // namespace synlink
