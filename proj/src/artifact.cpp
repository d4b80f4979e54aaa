#include "synlink/artifact.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include <openssl/evp.h>

#include "synlink/error.hpp"

namespace synlink {

using nlohmann::json;

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string() + " for hashing");
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md.data(), &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        char b[3];
        std::snprintf(b, sizeof b, "%02x", md[i]);
        hex += b;
    }
    return hex;
}

void Provenance::add_input(const std::string& role, const std::filesystem::path& path) {
    inputs[role] = file_digest(path);
}

json Provenance::to_json() const {
    json j{{"tool", kToolName},
           {"version", kToolVersion},
           {"command", command},
           {"seed", seed},
           {"inputs", inputs}};
    if (!config.empty()) {
        j["config"] = config;
    }
    return j;
}

std::map<std::string, std::string> Provenance::to_metadata() const {
    std::map<std::string, std::string> m{{"tool", kToolName},
                                         {"version", kToolVersion},
                                         {"command", command},
                                         {"seed", std::to_string(seed)}};
    for (const auto& [role, digest] : inputs) {
        m["input." + role] = digest;
    }
    for (const auto& [key, value] : config) {
        m["config." + key] = value;
    }
    return m;
}

std::ofstream open_artifact(const std::filesystem::path& path, const Provenance& prov) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw FormatError("cannot write " + path.string());
    }
    out << json{{"header", prov.to_json()}}.dump() << '\n';
    return out;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_loss_curve(std::ostream& out, std::span<const LossPoint> losses) {
    for (const auto& p : losses) {
        out << json{{"step", p.step}, {"loss", p.loss}}.dump() << '\n';
    }
}

namespace {

json ids_json(const ConceptIdSet& ids) {
    json a = json::array();
    for (const auto& id : ids) {
        a.push_back(id.str());
    }
    return a;
}

json optional_json(const std::optional<std::size_t>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<std::size_t> optional_index(const json& j) {
    if (j.is_null()) {
        return std::nullopt;
    }
    return j.get<std::size_t>();
}

template <class Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const json rec = json::parse(line);
            if (rec.contains("header")) {
                continue;
            }
            fn(rec);
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace

void write_predictions(std::ostream& out, std::span<const std::size_t> mention_indices,
                       std::span<const std::vector<Prediction>> predictions) {
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        for (std::size_t r = 0; r < predictions[i].size(); ++r) {
            const auto& p = predictions[i][r];
            json rec;
            rec["mention_index"] = mention_indices[i];
            rec["rank"] = r + 1;
            rec["name"] = p.name;
            rec["ids"] = ids_json(p.ids);
            rec["score"] = p.score;
            out << rec.dump() << '\n';
        }
    }
}

std::map<std::size_t, std::vector<Prediction>> read_predictions(const std::filesystem::path& path) {
    std::map<std::size_t, std::vector<std::pair<std::size_t, Prediction>>> ranked;
    for_each_record(path, [&](const json& rec) {
        Prediction p;
        p.name = rec.at("name").get<std::string>();
        for (const auto& id : rec.at("ids")) {
            p.ids.emplace_back(id.get<std::string>());
        }
        std::sort(p.ids.begin(), p.ids.end());
        p.score = rec.at("score").get<double>();
        ranked[rec.at("mention_index").get<std::size_t>()].emplace_back(
            rec.at("rank").get<std::size_t>(), std::move(p));
    });
    std::map<std::size_t, std::vector<Prediction>> out;
    for (auto& [idx, list] : ranked) {
        std::sort(list.begin(), list.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t r = 0; r < list.size(); ++r) {
            if (list[r].first != r + 1) {
                throw FormatError("predictions for mention " + std::to_string(idx) +
                                  " do not have consecutive ranks from 1");
            }
            out[idx].push_back(std::move(list[r].second));
        }
    }
    return out;
}

void write_pairs(std::ostream& out, std::span<const PreferenceTriplet> triplets,
                 std::span<const std::size_t> mention_indices) {
    for (const auto& t : triplets) {
        json rec;
        rec["mention_index"] = mention_indices.empty() ? t.example_index
                                                       : mention_indices[t.example_index];
        rec["e_w"] = t.preferred;
        rec["e_l"] = t.dispreferred;
        rec["rank_w"] = optional_json(t.rank_w);
        rec["rank_l"] = optional_json(t.rank_l);
        out << rec.dump() << '\n';
    }
}

std::vector<PairRecord> read_pairs(const std::filesystem::path& path) {
    std::vector<PairRecord> out;
    for_each_record(path, [&](const json& rec) {
        PairRecord r;
        r.mention_index = rec.at("mention_index").get<std::size_t>();
        r.preferred = rec.at("e_w").get<std::string>();
        r.dispreferred = rec.at("e_l").get<std::string>();
        r.rank_w = optional_index(rec.at("rank_w"));
        r.rank_l = optional_index(rec.at("rank_l"));
        out.push_back(std::move(r));
    });
    return out;
}

json to_json(const EvalReport& r) {
    json acc = json::object();
    for (const auto& [k, v] : r.acc_at) {
        acc[std::to_string(k)] = v;
    }
    json ranks = json::array();
    for (const auto& g : r.per_example) {
        ranks.push_back(optional_json(g));
    }
    return {{"kind", "eval"}, {"n", r.n}, {"acc_at", acc}, {"per_example_rank", ranks}};
}

json to_json(const PairedTestResult& r) {
    return {{"kind", "bootstrap_paired_t_test"},
            {"mean_diff", r.mean_diff},
            {"t_statistic", r.t_statistic},
            {"p_value", r.p_value},
            {"resamples", r.differences.size()}};
}

json to_json(const BinnedReport& r) {
    json bins = json::array();
    for (const auto& b : r.bins) {
        bins.push_back({{"lo", b.lo},
                        {"hi", b.hi},
                        {"count", b.count},
                        {"errors", b.errors},
                        {"accuracy", b.accuracy ? json(*b.accuracy) : json(nullptr)}});
    }
    return {{"kind", "binned_error"}, {"bins", bins}};
}

json to_json(const GapReport& r) {
    json bins = json::array();
    for (const auto& b : r.bins) {
        bins.push_back({{"lo", b.lo},
                        {"hi", b.hi},
                        {"count", b.count},
                        {"mean_gap", b.mean_gap ? json(*b.mean_gap) : json(nullptr)}});
    }
    json pairs = json::array();
    for (const auto& p : r.pairs) {
        pairs.push_back({{"example", p.example_index},
                         {"negative", p.negative},
                         {"similarity", p.similarity},
                         {"gap", p.gap}});
    }
    return {{"kind", "logprob_gap"}, {"bins", bins}, {"pairs", pairs}};
}

}  // namespace synlink
