// synlink command-line driver. Every pipeline stage is a subcommand; data
// goes to files, logs go to stderr.
//
// Settings resolve in four layers: built-in defaults, then --preset, then
// the --config file, then individual flags. A key in the config file and
// the flag overriding it share one name (`pos-lr = 3e-7` / `--pos-lr 3e-7`).

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "synlink/artifact.hpp"
#include "synlink/benchmark.hpp"
#include "synlink/corpus.hpp"
#include "synlink/decoder.hpp"
#include "synlink/error.hpp"
#include "synlink/evalsuite.hpp"
#include "synlink/gradcheck.hpp"
#include "synlink/kb.hpp"
#include "synlink/model.hpp"
#include "synlink/optim.hpp"
#include "synlink/preference.hpp"
#include "synlink/pretrain.hpp"
#include "synlink/text.hpp"
#include "synlink/tfidf.hpp"
#include "synlink/train_positive.hpp"
#include "synlink/trie.hpp"
#include "synlink/vocab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace synlink;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitFormat = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitGradcheck = 4;

template <class... Args>
void log(const char* fmt, Args... args) {
    std::fprintf(stderr, "[synlink] ");
    std::fprintf(stderr, fmt, args...);
    std::fputc('\n', stderr);
}

// ---------------------------------------------------------------------------
// Settings

struct Key {
    const char* name;
    const char* value;  // built-in default; "" means unset
    const char* help;
    bool path = false;  // paths stay out of artifact headers
};

const std::vector<Key>& keys() {
    static const std::vector<Key> k = {
        // inputs and outputs
        {"kb", "", "knowledge base (JSONL)", true},
        {"mentions", "", "mention file (JSONL)", true},
        {"abbrev", "", "abbreviation table, short<TAB>long", true},
        {"vocab", "", "vocabulary written by `kb build`", true},
        {"trie", "", "trie written by `kb build`", true},
        {"ckpt", "", "input checkpoint", true},
        {"init", "", "checkpoint to continue from instead of a fresh init", true},
        {"pairs-file", "", "preference pairs written by `mine` or `synth`", true},
        {"predictions", "", "predictions written by `link`", true},
        {"baseline", "", "second predictions file for the paired bootstrap test", true},
        {"out", "", "output file or directory", true},
        // model and decoding
        {"seed", "1", "random seed"},
        {"hidden-dim", "64", "hidden width of the recurrent cells"},
        {"max-ctx", "128", "characters of left and right context kept"},
        {"k-synonyms", "3", "gold synonyms used as generation targets per mention"},
        {"beam", "5", "beam width"},
        {"topk", "5", "predictions kept per mention"},
        // positive-only training
        {"pos-lr", "1e-3", "learning rate"},
        {"pos-steps", "1000", "optimizer steps"},
        {"pos-batch", "16", "batch size"},
        {"pos-warmup", "0", "linear warmup steps"},
        {"pos-weight-decay", "0.01", "decoupled weight decay"},
        {"label-smoothing", "0.1", "label smoothing of the cross-entropy"},
        // negative-aware training
        {"loss", "dpo", "pairwise | dpo | cpo | simpo"},
        {"negatives", "pred", "pred (model predictions) | tfidf (nearest names)"},
        {"pairs", "filtered", "filtered (ranking rules) | all (every correct x incorrect)"},
        {"fallback-negatives", "3", "negatives paired when no correct name is predicted"},
        {"neg-lr", "1e-5", "learning rate"},
        {"neg-epochs", "1", "passes over the pairs"},
        {"neg-batch", "16", "batch size"},
        {"neg-warmup", "0", "linear warmup steps"},
        {"neg-weight-decay", "0.01", "decoupled weight decay"},
        {"beta", "0.1", "preference temperature"},
        {"cpo-lambda", "1.0", "weight of the likelihood term of cpo"},
        {"simpo-gamma", "0.5", "target margin of simpo"},
        // shared optimizer settings
        {"grad-clip", "0.1", "global gradient-norm bound"},
        {"adam-beta1", "0.9", "first-moment decay"},
        {"adam-beta2", "0.999", "second-moment decay"},
        {"adam-eps", "1e-8", "denominator epsilon"},
        // synthesis
        {"synth-max-def", "8", "definition clauses per concept"},
        {"synth-max-syn", "8", "synonym clauses per concept"},
        {"synth-negatives", "3", "nearest foreign names paired with each synthetic example"},
        // evaluation
        {"eval-k", "1,5", "comma-separated k values for Acc@k"},
        {"resamples", "100", "bootstrap resamples"},
        // benchmark generator
        {"data-seed", "2024", "seed of the generated benchmark"},
        {"families", "50", "families of confusable concepts"},
        {"concepts-per-family", "4", "siblings per family"},
        {"train-mentions", "500", "training mentions"},
        {"test-mentions", "200", "test mentions"},
    };
    return k;
}

using Settings = std::map<std::string, std::string>;

// Per-dataset rows of the reference hyperparameter table, the KB-only
// pre-training column, and `bench`, the desk-scale settings used on the
// generated confusable benchmark.
const std::map<std::string, Settings>& presets() {
    static const std::map<std::string, Settings> p = [] {
        const Settings common = {
            {"pos-batch", "16"},        {"pos-weight-decay", "0.01"}, {"neg-weight-decay", "0.01"},
            {"grad-clip", "0.1"},       {"label-smoothing", "0.1"},   {"adam-eps", "1e-8"},
            {"adam-beta1", "0.9"},      {"adam-beta2", "0.999"},      {"beta", "0.1"},
            {"neg-epochs", "1"},        {"neg-warmup", "0"},
        };
        auto row = [&](Settings s) {
            for (const auto& [k, v] : common) {
                s.emplace(k, v);
            }
            return s;
        };
        std::map<std::string, Settings> m;
        m["ncbi"] = row({{"pos-steps", "20000"}, {"pos-lr", "3e-7"}, {"pos-warmup", "0"},
                         {"neg-lr", "1e-5"}, {"neg-batch", "16"}});
        m["bc5cdr"] = row({{"pos-steps", "30000"}, {"pos-lr", "5e-6"}, {"pos-warmup", "500"},
                           {"neg-lr", "1e-6"}, {"neg-batch", "16"}});
        m["cometa"] = row({{"pos-steps", "40000"}, {"pos-lr", "2e-5"}, {"pos-warmup", "1000"},
                           {"neg-lr", "5e-6"}, {"neg-batch", "32"}});
        m["aap"] = row({{"pos-steps", "30000"}, {"pos-lr", "5e-6"}, {"pos-warmup", "0"},
                        {"neg-lr", "5e-6"}, {"neg-batch", "8"}});
        m["mm"] = row({{"pos-steps", "40000"}, {"pos-lr", "3e-5"}, {"pos-warmup", "1000"},
                       {"neg-lr", "5e-6"}, {"neg-batch", "16"}});
        m["pretrain"] = row({{"pos-steps", "80000"}, {"pos-lr", "4e-5"}, {"pos-batch", "384"},
                             {"pos-warmup", "1600"}, {"neg-epochs", "5"}, {"neg-lr", "1e-5"},
                             {"neg-batch", "64"}, {"neg-warmup", "1000"}});
        m["bench"] = {{"hidden-dim", "32"},      {"pos-lr", "1e-2"},   {"pos-steps", "2000"},
                      {"pos-batch", "16"},       {"pos-warmup", "0"},  {"pos-weight-decay", "0"},
                      {"label-smoothing", "0.1"}, {"grad-clip", "0.1"}, {"neg-lr", "1e-4"},
                      {"neg-epochs", "1"}, {"neg-batch", "16"}, {"neg-warmup", "0"},
                      {"neg-weight-decay", "0.01"}, {"beta", "0.1"}};
        return m;
    }();
    return p;
}

bool is_key(const std::string& name) {
    for (const auto& k : keys()) {
        if (name == k.name) {
            return true;
        }
    }
    return false;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// `key = value` per line; '#' starts a comment. Underscores in keys are
// accepted in place of hyphens.
Settings read_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open config file " + path.string());
    }
    Settings s;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": expected `key = value`");
        }
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        if (key != "preset" && !is_key(key)) {
            throw UsageError(path.string() + ":" + std::to_string(line_no) + ": unknown key '" +
                             key + "'");
        }
        s[key] = trim(line.substr(eq + 1));
    }
    return s;
}

class Config {
public:
    std::string command;
    Settings values;
    std::vector<std::string> used;  // keys this command accepts

    bool has(const std::string& k) const { return !str(k).empty(); }

    const std::string& str(const std::string& k) const {
        const auto it = values.find(k);
        if (it == values.end()) {
            throw std::logic_error("unregistered key " + k);
        }
        return it->second;
    }

    fs::path input(const std::string& k) const {
        if (!has(k)) {
            throw UsageError(command + ": --" + k + " is required");
        }
        fs::path p = str(k);
        if (!fs::exists(p)) {
            throw UsageError(command + ": --" + k + " " + p.string() + " does not exist");
        }
        return p;
    }

    fs::path output() const {
        if (!has("out")) {
            throw UsageError(command + ": --out is required");
        }
        return str("out");
    }

    double real(const std::string& k) const {
        const std::string& s = str(k);
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size()) {
                return v;
            }
        } catch (const std::exception&) {
        }
        throw UsageError("--" + k + ": expected a number, got '" + s + "'");
    }

    std::int64_t integer(const std::string& k) const {
        const std::string& s = str(k);
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw UsageError("--" + k + ": expected an integer, got '" + s + "'");
        }
        return v;
    }

    std::size_t count(const std::string& k) const {
        const auto v = integer(k);
        if (v < 0) {
            throw UsageError("--" + k + " must be non-negative");
        }
        return static_cast<std::size_t>(v);
    }

    std::uint64_t seed() const { return count("seed"); }

    Provenance provenance() const {
        Provenance p;
        p.command = command;
        p.seed = seed();
        for (const auto& k : keys()) {
            if (!k.path && std::find(used.begin(), used.end(), k.name) != used.end()) {
                p.config[k.name] = values.at(k.name);
            }
        }
        if (const auto it = values.find("preset"); it != values.end() && !it->second.empty()) {
            p.config["preset"] = it->second;
        }
        return p;
    }
};

// Flags registered on one subcommand, bound to strings until resolution.
struct Bindings {
    std::string command;
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> opts;
    std::string config_file;
    std::string preset;

    void add(CLI::App* app, std::initializer_list<const char*> names) {
        for (const char* n : names) {
            const Key* key = nullptr;
            for (const auto& k : keys()) {
                if (std::string(k.name) == n) {
                    key = &k;
                }
            }
            if (key == nullptr) {
                throw std::logic_error(std::string("unknown key ") + n);
            }
            std::string help = key->help;
            if (*key->value) {
                help += " [default: " + std::string(key->value) + "]";
            }
            opts[n] = app->add_option(std::string("--") + n, raw[n], help);
        }
        app->add_option("--config", config_file, "key = value settings file");
        app->add_option("--preset", preset, "hyperparameter preset")
            ->check(CLI::IsMember({"ncbi", "bc5cdr", "cometa", "aap", "mm", "pretrain", "bench"}));
    }

    Config resolve() const {
        Config c;
        c.command = command;
        for (const auto& [k, opt] : opts) {
            c.used.push_back(k);
        }
        for (const auto& k : keys()) {
            c.values[k.name] = k.value;
        }
        Settings file;
        if (!config_file.empty()) {
            file = read_config_file(config_file);
        }
        std::string preset_name = preset;
        if (preset_name.empty() && file.count("preset")) {
            preset_name = file.at("preset");
        }
        if (!preset_name.empty()) {
            const auto it = presets().find(preset_name);
            if (it == presets().end()) {
                throw UsageError("unknown preset '" + preset_name + "'");
            }
            for (const auto& [k, v] : it->second) {
                c.values[k] = v;
            }
            c.values["preset"] = preset_name;
        }
        for (const auto& [k, v] : file) {
            if (k != "preset") {
                c.values[k] = v;
            }
        }
        for (const auto& [k, opt] : opts) {
            if (opt->count() > 0) {
                c.values[k] = raw.at(k);
            }
        }
        return c;
    }
};

OptimizerConfig positive_optimizer(const Config& c) {
    OptimizerConfig o;
    o.learning_rate = c.real("pos-lr");
    o.steps = c.integer("pos-steps");
    o.batch_size = c.count("pos-batch");
    o.warmup_steps = c.integer("pos-warmup");
    o.weight_decay = c.real("pos-weight-decay");
    o.label_smoothing = c.real("label-smoothing");
    o.grad_clip = c.real("grad-clip");
    o.adam_beta1 = c.real("adam-beta1");
    o.adam_beta2 = c.real("adam-beta2");
    o.adam_eps = c.real("adam-eps");
    o.validate();
    return o;
}

PreferenceConfig preference_config(const Config& c) {
    PreferenceConfig p;
    p.loss = parse_loss_kind(c.str("loss"));
    p.beta = c.real("beta");
    p.cpo_lambda = c.real("cpo-lambda");
    p.simpo_gamma = c.real("simpo-gamma");
    p.epochs = static_cast<int>(c.integer("neg-epochs"));
    p.opt.learning_rate = c.real("neg-lr");
    p.opt.batch_size = c.count("neg-batch");
    p.opt.warmup_steps = c.integer("neg-warmup");
    p.opt.weight_decay = c.real("neg-weight-decay");
    p.opt.grad_clip = c.real("grad-clip");
    p.opt.adam_beta1 = c.real("adam-beta1");
    p.opt.adam_beta2 = c.real("adam-beta2");
    p.opt.adam_eps = c.real("adam-eps");
    p.validate();
    return p;
}

MiningConfig mining_config(const Config& c) {
    MiningConfig m;
    m.top_k = c.count("topk");
    m.beam = c.count("beam");
    const std::string& neg = c.str("negatives");
    if (neg == "pred") {
        m.negatives = NegativeSource::kPredictions;
    } else if (neg == "tfidf") {
        m.negatives = NegativeSource::kTfIdf;
    } else {
        throw UsageError("--negatives must be pred or tfidf");
    }
    const std::string& pol = c.str("pairs");
    if (pol == "filtered") {
        m.pairs = PairPolicy::kFiltered;
    } else if (pol == "all") {
        m.pairs = PairPolicy::kAll;
    } else {
        throw UsageError("--pairs must be filtered or all");
    }
    m.fallback_negatives = c.count("fallback-negatives");
    return m;
}

BeamConfig beam_config(const Config& c) {
    BeamConfig b{.beam = c.count("beam"), .top_k = c.count("topk")};
    if (b.beam == 0 || b.top_k == 0) {
        throw UsageError("--beam and --topk must be positive");
    }
    return b;
}

// ---------------------------------------------------------------------------
// Shared loading

KnowledgeBase load_kb(const Config& c, Provenance& prov) {
    const fs::path path = c.input("kb");
    KbLoadSummary summary;
    KnowledgeBase kb = KnowledgeBase::load(path, &summary);
    if (kb.size() == 0) {
        throw FormatError(path.string() + ": no usable concepts");
    }
    if (summary.rejected > 0) {
        log("kb: %zu records rejected (no non-empty name)", summary.rejected);
    }
    prov.add_input("kb", path);
    return kb;
}

struct Mentions {
    std::vector<MentionExample> examples;   // preprocessed and linkable
    std::vector<std::size_t> file_indices;  // position of each in the input file
};

Mentions load_linkable(const Config& c, const KnowledgeBase& kb, Provenance& prov) {
    const fs::path path = c.input("mentions");
    prov.add_input("mentions", path);
    AbbreviationMap abbrev;
    if (c.has("abbrev")) {
        const fs::path a = c.input("abbrev");
        abbrev = load_abbreviations(a);
        prov.add_input("abbrev", a);
    }
    std::vector<MentionExample> raw = load_mentions(path);
    for (auto& ex : raw) {
        ex = preprocess(ex, abbrev);
    }
    FilterResult f = filter_linkable(raw, kb);
    if (f.dropped > 0) {
        log("mentions: dropped %zu of %zu with identifiers missing from the kb", f.dropped,
            raw.size());
    }
    return {std::move(f.kept), std::move(f.kept_indices)};
}

Checkpoint load_checkpoint(const Config& c, const std::string& key, Provenance& prov) {
    const fs::path path = c.input(key);
    prov.add_input(key, path);
    return Checkpoint::load(path.string());
}

Vocab read_vocab(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        try {
            const json rec = json::parse(line);
            if (rec.contains("bytes")) {
                return Vocab::from_bytes(rec.at("bytes").get<std::vector<std::uint8_t>>());
            }
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
    }
    throw FormatError(path.string() + ": no vocabulary record");
}

// The trie file is one JSON header line (including the vocabulary it was
// built with) followed by the serialized trie.
void write_trie(const fs::path& path, const TokenTrie& trie, const Vocab& vocab,
                const Provenance& prov) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("cannot write " + path.string());
    }
    out << json{{"header", prov.to_json()}, {"vocab", vocab.bytes()}}.dump() << '\n';
    const auto bytes = trie.serialize();
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

TokenTrie read_trie(const fs::path& path, const Vocab& expected) {
    std::ifstream in(path, std::ios::binary);
    std::string head;
    if (!std::getline(in, head)) {
        throw FormatError(path.string() + ": empty trie file");
    }
    try {
        const json h = json::parse(head);
        if (Vocab::from_bytes(h.at("vocab").get<std::vector<std::uint8_t>>()) != expected) {
            throw FormatError(path.string() + ": built with a different vocabulary");
        }
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": bad header: " + e.what());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
    return TokenTrie::deserialize(bytes);
}

TokenTrie trie_for(const Config& c, const KnowledgeBase& kb, const Vocab& vocab, Provenance& prov) {
    const auto names = kb.all_names();
    if (c.has("trie")) {
        const fs::path p = c.input("trie");
        TokenTrie t = read_trie(p, vocab);
        if (t.name_count() != names.size()) {
            throw FormatError(p.string() + ": holds " + std::to_string(t.name_count()) +
                              " names, kb has " + std::to_string(names.size()));
        }
        prov.add_input("trie", p);
        return t;
    }
    return TokenTrie::build(names, vocab);
}

Vocab vocab_for(const KnowledgeBase& kb, std::span<const MentionExample> examples) {
    std::vector<std::string> texts = kb.all_names();
    for (const auto& ex : examples) {
        texts.push_back(ex.left + ex.mention + ex.right);
    }
    return Vocab::from_texts(texts);
}

void write_report_line(std::ostream& out, const char* kind, json body) {
    out << json{{kind, std::move(body)}}.dump() << '\n';
}

std::vector<std::size_t> parse_ks(const std::string& s) {
    std::vector<std::size_t> ks;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size() || v == 0) {
            throw UsageError("--eval-k: bad value '" + item + "'");
        }
        ks.push_back(v);
    }
    if (ks.empty()) {
        throw UsageError("--eval-k is empty");
    }
    return ks;
}

// Predictions in file order, aligned to the linkable examples.
std::vector<std::vector<Prediction>> align_predictions(const fs::path& path, const Mentions& m) {
    auto by_index = read_predictions(path);
    std::vector<std::vector<Prediction>> out(m.examples.size());
    std::size_t matched = 0;
    for (std::size_t i = 0; i < m.examples.size(); ++i) {
        if (auto it = by_index.find(m.file_indices[i]); it != by_index.end()) {
            out[i] = std::move(it->second);
            ++matched;
        }
    }
    if (matched < m.examples.size()) {
        log("%s: %zu of %zu mentions have no predictions", path.string().c_str(),
            m.examples.size() - matched, m.examples.size());
    }
    return out;
}

StepCallback progress(const char* stage, std::int64_t total) {
    const std::int64_t every = std::max<std::int64_t>(1, total / 10);
    return [stage, every](const LossPoint& p) {
        if (p.step % every == 0) {
            log("%s step %lld loss %.6f", stage, static_cast<long long>(p.step), p.loss);
        }
    };
}

// ---------------------------------------------------------------------------
// Commands

int cmd_kb_build(const Config& c) {
    Provenance prov = c.provenance();
    const KnowledgeBase kb = load_kb(c, prov);
    std::vector<MentionExample> examples;
    if (c.has("mentions")) {
        examples = load_linkable(c, kb, prov).examples;
    }
    const Vocab vocab = vocab_for(kb, examples);
    const auto names = kb.all_names();
    const TokenTrie trie = TokenTrie::build(names, vocab);
    const TfIdfIndex idx = TfIdfIndex::build(names);

    const fs::path dir = c.output();
    fs::create_directories(dir);
    {
        auto out = open_artifact(dir / "vocab.jsonl", prov);
        out << json{{"bytes", vocab.bytes()}}.dump() << '\n';
    }
    write_trie(dir / "trie.bin", trie, vocab, prov);
    {
        auto out = open_artifact(dir / "kb_summary.jsonl", prov);
        json s{{"concepts", kb.size()},
               {"names", names.size()},
               {"trie_nodes", trie.node_count()},
               {"vocab_size", vocab.size()},
               {"trigrams_indexed", idx.n_docs()}};
        out << json{{"summary", s}}.dump() << '\n';
    }
    log("kb build: %zu concepts, %zu names, %zu trie nodes", kb.size(), names.size(),
        trie.node_count());
    return 0;
}

int cmd_synth(const Config& c) {
    Provenance prov = c.provenance();
    const KnowledgeBase kb = load_kb(c, prov);
    const TfIdfIndex idx = TfIdfIndex::build(kb);
    const SynthConfig sc{.max_definition_examples = c.count("synth-max-def"),
                         .max_synonym_examples = c.count("synth-max-syn")};
    const auto synthetic = gen_synthetic_examples(kb, idx, sc);
    const Vocab vocab = vocab_for(kb, {});
    const auto triplets = gen_pretrain_pairs(synthetic, kb, idx, vocab, c.count("synth-negatives"),
                                             c.count("max-ctx"));
    const fs::path dir = c.output();
    fs::create_directories(dir);
    {
        auto out = open_artifact(dir / "synthetic.jsonl", prov);
        for (const auto& s : synthetic) {
            write_mention_record(out, s.example);
        }
    }
    {
        auto out = open_artifact(dir / "synthetic_pairs.jsonl", prov);
        write_pairs(out, triplets, {});
    }
    log("synth: %zu examples, %zu pairs", synthetic.size(), triplets.size());
    return 0;
}

int cmd_train_positive(const Config& c) {
    Provenance prov = c.provenance();
    const KnowledgeBase kb = load_kb(c, prov);
    const Mentions m = load_linkable(c, kb, prov);
    if (m.examples.empty()) {
        throw FormatError("train-positive: no linkable training mentions");
    }
    Checkpoint init;
    if (c.has("init")) {
        init = load_checkpoint(c, "init", prov);
    } else {
        Vocab vocab;
        if (c.has("vocab")) {
            const fs::path vp = c.input("vocab");
            vocab = read_vocab(vp);
            prov.add_input("vocab", vp);
        } else {
            vocab = vocab_for(kb, m.examples);
        }
        const int d = static_cast<int>(c.integer("hidden-dim"));
        if (d <= 0) {
            throw UsageError("--hidden-dim must be positive");
        }
        init = Checkpoint::initialize(vocab, ModelConfig{.hidden_dim = d, .seed = c.seed()});
    }
    const TfIdfIndex idx = TfIdfIndex::build(kb);
    const auto instances = build_positive_set(m.examples, kb, idx, init.vocab,
                                              c.count("k-synonyms"), c.count("max-ctx"));
    const OptimizerConfig opt = positive_optimizer(c);
    log("train-positive: %zu instances, %lld steps", instances.size(),
        static_cast<long long>(opt.steps));
    TrainResult r = train_positive(init, instances, opt, c.seed(), progress("positive", opt.steps));
    r.checkpoint.metadata = prov.to_metadata();
    const fs::path out = c.output();
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    r.checkpoint.save(out.string());
    auto curve = open_artifact(out.string() + ".loss.jsonl", prov);
    write_loss_curve(curve, r.losses);
    return 0;
}

int cmd_mine(const Config& c) {
    Provenance prov = c.provenance();
    const KnowledgeBase kb = load_kb(c, prov);
    const Mentions m = load_linkable(c, kb, prov);
    const Checkpoint ckpt = load_checkpoint(c, "ckpt", prov);
    const TokenTrie trie = trie_for(c, kb, ckpt.vocab, prov);
    const TfIdfIndex idx = TfIdfIndex::build(kb);
    const auto triplets = mine_pairs(ckpt, m.examples, kb, trie, idx, mining_config(c),
                                     c.count("max-ctx"));
    auto out = open_artifact(c.output(), prov);
    write_pairs(out, triplets, m.file_indices);
    log("mine: %zu pairs from %zu mentions", triplets.size(), m.examples.size());
    return 0;
}

std::vector<PreferenceTriplet> triplets_from_file(const fs::path& path, const Mentions& m,
                                                  const KnowledgeBase& kb, const Vocab& vocab,
                                                  std::size_t max_ctx) {
    std::map<std::size_t, std::size_t> position;
    for (std::size_t i = 0; i < m.file_indices.size(); ++i) {
        position[m.file_indices[i]] = i;
    }
    std::vector<PreferenceTriplet> out;
    for (const auto& rec : read_pairs(path)) {
        const auto it = position.find(rec.mention_index);
        if (it == position.end()) {
            throw FormatError(path.string() + ": pair refers to mention " +
                              std::to_string(rec.mention_index) + ", which is not linkable");
        }
        for (const auto* name : {&rec.preferred, &rec.dispreferred}) {
            if (kb.align(*name).empty()) {
                throw FormatError(path.string() + ": '" + *name + "' is not a kb name");
            }
        }
        out.push_back({.example_index = it->second,
                       .input = render(m.examples[it->second], vocab, max_ctx),
                       .preferred = rec.preferred,
                       .dispreferred = rec.dispreferred,
                       .rank_w = rec.rank_w,
                       .rank_l = rec.rank_l});
    }
    return out;
}

int cmd_train_negative(const Config& c) {
    Provenance prov = c.provenance();
    const KnowledgeBase kb = load_kb(c, prov);
    const Mentions m = load_linkable(c, kb, prov);
    const Checkpoint ckpt = load_checkpoint(c, "ckpt", prov);
    std::vector<PreferenceTriplet> triplets;
    if (c.has("pairs-file")) {
        const fs::path pf = c.input("pairs-file");
        prov.add_input("pairs", pf);
        triplets = triplets_from_file(pf, m, kb, ckpt.vocab, c.count("max-ctx"));
    } else {
        const TokenTrie trie = trie_for(c, kb, ckpt.vocab, prov);
        const TfIdfIndex idx = TfIdfIndex::build(kb);
        triplets = mine_pairs(ckpt, m.examples, kb, trie, idx, mining_config(c), c.count("max-ctx"));
    }
    if (triplets.empty()) {
        throw FormatError("train-negative: no preference pairs");
    }
    const PreferenceConfig pc = preference_config(c);
    const auto steps_per_epoch =
        static_cast<std::int64_t>((triplets.size() + pc.opt.batch_size - 1) / pc.opt.batch_size);
    log("train-negative: %zu pairs, loss %s, %d epochs", triplets.size(),
        std::string(loss_kind_name(pc.loss)).c_str(), pc.epochs);
    TrainResult r = train_preference(ckpt, triplets, pc, c.seed(),
                                     progress("negative", steps_per_epoch * pc.epochs));
    r.checkpoint.metadata = prov.to_metadata();
    const fs::path out = c.output();
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    r.checkpoint.save(out.string());
    auto curve = open_artifact(out.string() + ".loss.jsonl", prov);
    write_loss_curve(curve, r.losses);
    return 0;
}

int cmd_link(const Config& c) {
    Provenance prov = c.provenance();
    const KnowledgeBase kb = load_kb(c, prov);
    const Mentions m = load_linkable(c, kb, prov);
    const Checkpoint ckpt = load_checkpoint(c, "ckpt", prov);
    const TokenTrie trie = trie_for(c, kb, ckpt.vocab, prov);
    const auto preds = predict_all(ckpt, m.examples, trie, kb, beam_config(c), c.count("max-ctx"));
    auto out = open_artifact(c.output(), prov);
    write_predictions(out, m.file_indices, preds);
    log("link: %zu mentions", m.examples.size());
    return 0;
}

int cmd_eval(const Config& c) {
    Provenance prov = c.provenance();
    const KnowledgeBase kb = load_kb(c, prov);
    const Mentions m = load_linkable(c, kb, prov);
    if (m.examples.empty()) {
        throw FormatError("eval: no linkable mentions");
    }
    const fs::path pred_path = c.input("predictions");
    prov.add_input("predictions", pred_path);
    const auto ks = parse_ks(c.str("eval-k"));
    const auto ranks = gold_ranks(align_predictions(pred_path, m), m.examples);
    const EvalReport report = make_report(ranks, ks);
    for (const auto& [k, acc] : report.acc_at) {
        std::printf("Acc@%zu = %s\n", k, json(acc).dump().c_str());
    }
    std::optional<PairedTestResult> test;
    if (c.has("baseline")) {
        const fs::path base_path = c.input("baseline");
        prov.add_input("baseline", base_path);
        const auto base = gold_ranks(align_predictions(base_path, m), m.examples);
        test = bootstrap_paired_test(ranks, base, ks.front(), c.count("resamples"), c.seed());
        std::printf("bootstrap Acc@%zu: mean diff = %s, t = %s, p = %s\n", ks.front(),
                    json(test->mean_diff).dump().c_str(), json(test->t_statistic).dump().c_str(),
                    json(test->p_value).dump().c_str());
    }
    if (c.has("out")) {
        auto out = open_artifact(c.output(), prov);
        write_report_line(out, "eval", to_json(report));
        if (test) {
            write_report_line(out, "paired_test", to_json(*test));
        }
    }
    return 0;
}

int cmd_analyze(const Config& c) {
    Provenance prov = c.provenance();
    const KnowledgeBase kb = load_kb(c, prov);
    const Mentions m = load_linkable(c, kb, prov);
    const fs::path pred_path = c.input("predictions");
    prov.add_input("predictions", pred_path);
    const Checkpoint ckpt = load_checkpoint(c, "ckpt", prov);
    const auto preds = align_predictions(pred_path, m);
    const TfIdfIndex idx = TfIdfIndex::build(kb);
    const BinnedReport binned = binned_error_report(m.examples, preds, kb, idx);
    const GapReport gaps = logprob_gap_report(ckpt, m.examples, preds, kb, idx, c.count("max-ctx"));
    const fs::path dir = c.output();
    fs::create_directories(dir);
    {
        auto out = open_artifact(dir / "binned_errors.jsonl", prov);
        write_report_line(out, "binned_errors", to_json(binned));
    }
    {
        auto out = open_artifact(dir / "logprob_gap.jsonl", prov);
        write_report_line(out, "logprob_gap", to_json(gaps));
    }
    log("analyze: %zu gap pairs", gaps.pairs.size());
    return 0;
}

int cmd_gradcheck(const Config& c) {
    GradCheckConfig gc;
    const auto results = run_gradcheck_suite(gc);
    bool ok = true;
    json rows = json::array();
    for (const auto& r : results) {
        ok = ok && r.passed;
        log("gradcheck %-14s seed %llu max rel error %.3e %s", r.loss.c_str(),
            static_cast<unsigned long long>(r.seed), r.max_rel_error, r.passed ? "ok" : "FAIL");
        rows.push_back({{"loss", r.loss},
                        {"seed", r.seed},
                        {"max_rel_error", r.max_rel_error},
                        {"passed", r.passed}});
    }
    if (c.has("out")) {
        auto out = open_artifact(c.output(), c.provenance());
        write_report_line(out, "gradcheck", rows);
    }
    return ok ? 0 : kExitGradcheck;
}

int cmd_benchmark(const Config& c) {
    const BenchmarkConfig bc{.families = c.count("families"),
                             .concepts_per_family = c.count("concepts-per-family"),
                             .train_mentions = c.count("train-mentions"),
                             .test_mentions = c.count("test-mentions"),
                             .seed = c.count("data-seed")};
    const Benchmark b = make_confusable_benchmark(bc);
    write_benchmark(b, c.output());
    log("benchmark: %zu concepts, %zu train, %zu test", b.kb.size(), b.train.size(), b.test.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generative entity linking with negative-aware preference training"};
    app.require_subcommand(1);

    std::vector<std::pair<CLI::App*, std::pair<Bindings*, int (*)(const Config&)>>> commands;
    std::vector<std::unique_ptr<Bindings>> owned;
    auto add = [&](CLI::App* parent, const char* name, const char* help,
                   std::initializer_list<const char*> names, int (*fn)(const Config&),
                   const char* full_name = nullptr) {
        CLI::App* sub = parent->add_subcommand(name, help);
        owned.push_back(std::make_unique<Bindings>());
        owned.back()->command = full_name ? full_name : name;
        owned.back()->add(sub, names);
        commands.push_back({sub, {owned.back().get(), fn}});
    };

    CLI::App* kb = app.add_subcommand("kb", "knowledge-base utilities");
    kb->require_subcommand(1);
    add(kb, "build", "validate a kb and cache its vocabulary and trie",
        {"kb", "mentions", "abbrev", "out", "seed"}, cmd_kb_build, "kb build");
    add(&app, "synth", "generate KB-only training examples and preference pairs",
        {"kb", "out", "seed", "max-ctx", "synth-max-def", "synth-max-syn", "synth-negatives"},
        cmd_synth);
    add(&app, "train-positive", "stage 1: train on gold synonyms with cross-entropy",
        {"kb", "mentions", "abbrev", "vocab", "init", "out", "seed", "hidden-dim", "max-ctx",
         "k-synonyms", "pos-lr", "pos-steps", "pos-batch", "pos-warmup", "pos-weight-decay",
         "label-smoothing", "grad-clip", "adam-beta1", "adam-beta2", "adam-eps"},
        cmd_train_positive);
    add(&app, "mine", "build preference pairs from a checkpoint's predictions",
        {"kb", "mentions", "abbrev", "ckpt", "trie", "out", "seed", "max-ctx", "beam", "topk",
         "negatives", "pairs", "fallback-negatives"},
        cmd_mine);
    add(&app, "train-negative", "stage 2: preference training against the input checkpoint",
        {"kb", "mentions", "abbrev", "ckpt", "trie", "pairs-file", "out", "seed", "max-ctx", "beam",
         "topk", "negatives", "pairs", "fallback-negatives", "loss", "beta", "cpo-lambda",
         "simpo-gamma", "neg-lr", "neg-epochs", "neg-batch", "neg-warmup", "neg-weight-decay",
         "grad-clip", "adam-beta1", "adam-beta2", "adam-eps"},
        cmd_train_negative);
    add(&app, "link", "predict kb names for every mention",
        {"kb", "mentions", "abbrev", "ckpt", "trie", "out", "seed", "max-ctx", "beam", "topk"},
        cmd_link);
    add(&app, "eval", "Acc@k of a predictions file, optionally tested against a baseline",
        {"kb", "mentions", "abbrev", "predictions", "baseline", "out", "seed", "eval-k",
         "resamples"},
        cmd_eval);
    add(&app, "analyze", "error rate and log-prob gap by TF-IDF similarity",
        {"kb", "mentions", "abbrev", "predictions", "ckpt", "out", "seed", "max-ctx"}, cmd_analyze);
    add(&app, "gradcheck", "finite-difference check of every loss gradient", {"out", "seed"},
        cmd_gradcheck);
    add(&app, "benchmark", "write the synthetic confusable benchmark (kb, train, test)",
        {"out", "data-seed", "families", "concepts-per-family", "train-mentions", "test-mentions"},
        cmd_benchmark);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        for (const auto& [sub, entry] : commands) {
            if (sub->parsed()) {
                return entry.second(entry.first->resolve());
            }
        }
        return kExitUsage;
    } catch (const UsageError& e) {
        log("error: %s", e.what());
        return kExitUsage;
    } catch (const FormatError& e) {
        log("input error: %s", e.what());
        return kExitFormat;
    } catch (const NumericError& e) {
        log("numeric failure: %s", e.what());
        return kExitNumeric;
    } catch (const json::exception& e) {
        log("input error: %s", e.what());
        return kExitFormat;
    } catch (const fs::filesystem_error& e) {
        log("input error: %s", e.what());
        return kExitFormat;
    }
}
