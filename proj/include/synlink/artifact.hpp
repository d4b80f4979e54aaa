#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "synlink/decoder.hpp"
#include "synlink/evalsuite.hpp"
#include "synlink/preference.hpp"
#include "synlink/train_positive.hpp"

namespace synlink {

inline constexpr const char* kToolName = "synlink";
inline constexpr const char* kToolVersion = "0.1.0";

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

/// Provenance written at the top of every artifact: tool, version, seed and
/// the digests of the inputs keyed by role (paths are not recorded so that
/// runs in different directories produce identical bytes).
struct Provenance {
    std::string command;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> inputs;  // role → sha256
    std::map<std::string, std::string> config;  // effective settings, path keys excluded

    void add_input(const std::string& role, const std::filesystem::path& path);
    nlohmann::json to_json() const;
    std::map<std::string, std::string> to_metadata() const;
};

/// Opens `path` for writing and emits the `{"header": …}` line.
std::ofstream open_artifact(const std::filesystem::path& path, const Provenance& prov);

void write_loss_curve(std::ostream& out, std::span<const LossPoint> losses);

/// One record per prediction: mention_index, rank, name, ids, score.
void write_predictions(std::ostream& out, std::span<const std::size_t> mention_indices,
                       std::span<const std::vector<Prediction>> predictions);

/// Predictions grouped by mention_index, each list ordered by rank.
std::map<std::size_t, std::vector<Prediction>> read_predictions(const std::filesystem::path& path);

/// One record per triplet: mention_index, e_w, e_l, rank_w, rank_l.
void write_pairs(std::ostream& out, std::span<const PreferenceTriplet> triplets,
                 std::span<const std::size_t> mention_indices);

struct PairRecord {
    std::size_t mention_index = 0;
    std::string preferred;
    std::string dispreferred;
    std::optional<std::size_t> rank_w;
    std::optional<std::size_t> rank_l;
};

std::vector<PairRecord> read_pairs(const std::filesystem::path& path);

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const PairedTestResult& r);
nlohmann::json to_json(const BinnedReport& r);
nlohmann::json to_json(const GapReport& r);

/// Doubles formatted with 17 significant digits so they round-trip exactly.
std::string format_double(double x);

}  // namespace synlink
