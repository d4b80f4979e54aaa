#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "synlink/error.hpp"
#include "synlink/model.hpp"

// Container: "ACKP", u32 format version, u64 header length, a JSON text
// header (vocabulary bytes, config, stage, metadata, array directory with
// name/shape/byte offset), then every array as little-endian float64 in
// column-major order.

namespace synlink {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'A', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_uint(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint64_t get_uint(std::span<const std::uint8_t> in, std::size_t pos, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        v |= static_cast<std::uint64_t>(in[pos + static_cast<std::size_t>(i)]) << (8 * i);
    }
    return v;
}

struct NamedArray {
    std::string name;
    const double* data;
    Eigen::Index rows;
    Eigen::Index cols;
};

std::vector<NamedArray> directory(const Checkpoint& c) {
    std::vector<NamedArray> out;
    for (const auto& a : c.params.arrays()) {
        out.push_back({std::string(a.name), a.data, a.rows, a.cols});
    }
    if (c.optimizer) {
        for (const auto& a : c.optimizer->m.arrays()) {
            out.push_back({"adam.m." + std::string(a.name), a.data, a.rows, a.cols});
        }
        for (const auto& a : c.optimizer->v.arrays()) {
            out.push_back({"adam.v." + std::string(a.name), a.data, a.rows, a.cols});
        }
    }
    return out;
}

void fill_arrays(std::vector<ArrayView> views, const std::string& prefix, const json& dir,
                 std::span<const std::uint8_t> data) {
    for (auto& v : views) {
        const std::string name = prefix + std::string(v.name);
        auto it = std::find_if(dir.begin(), dir.end(),
                               [&](const json& e) { return e.at("name") == name; });
        if (it == dir.end()) {
            throw FormatError("checkpoint is missing array '" + name + "'");
        }
        if (it->at("rows").get<Eigen::Index>() != v.rows ||
            it->at("cols").get<Eigen::Index>() != v.cols) {
            throw FormatError("checkpoint array '" + name + "' has the wrong shape");
        }
        const auto offset = it->at("offset").get<std::size_t>();
        const std::size_t count = v.values().size();
        if (offset > data.size() || data.size() - offset < count * 8) {
            throw FormatError("checkpoint array '" + name + "' extends past end of file");
        }
        for (std::size_t i = 0; i < count; ++i) {
            v.data[i] = std::bit_cast<double>(get_uint(data, offset + 8 * i, 8));
        }
    }
}

}  // namespace

std::vector<std::uint8_t> Checkpoint::to_bytes() const {
    if (!params.all_finite()) {
        throw NumericError("refusing to save a checkpoint with non-finite parameters");
    }
    json header;
    header["format"] = "synlink-checkpoint";
    header["vocab_bytes"] = vocab.bytes();
    header["config"] = {{"hidden_dim", config.hidden_dim}, {"seed", config.seed}};
    header["stage"] = std::string(stage_name(stage));
    header["metadata"] = metadata;
    header["optimizer_step"] = optimizer ? json(optimizer->step) : json(nullptr);
    json dir = json::array();
    std::size_t offset = 0;
    const auto arrays = directory(*this);
    for (const auto& a : arrays) {
        dir.push_back({{"name", a.name}, {"rows", a.rows}, {"cols", a.cols}, {"offset", offset}});
        offset += static_cast<std::size_t>(a.rows * a.cols) * 8;
    }
    header["arrays"] = std::move(dir);
    const std::string text = header.dump();

    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_uint(out, kVersion, 4);
    put_uint(out, text.size(), 8);
    out.insert(out.end(), text.begin(), text.end());
    out.reserve(out.size() + offset);
    for (const auto& a : arrays) {
        const auto n = static_cast<std::size_t>(a.rows * a.cols);
        for (std::size_t i = 0; i < n; ++i) {
            put_uint(out, std::bit_cast<std::uint64_t>(a.data[i]), 8);
        }
    }
    return out;
}

Checkpoint Checkpoint::from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("not a checkpoint file (bad magic)");
    }
    const auto version = get_uint(bytes, 4, 4);
    if (version != kVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto header_len = get_uint(bytes, 8, 8);
    if (header_len > bytes.size() - 16) {
        throw FormatError("checkpoint header truncated");
    }
    json header;
    try {
        header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(header_len));
    } catch (const json::exception& e) {
        throw FormatError(std::string("corrupt checkpoint header: ") + e.what());
    }
    const auto data = bytes.subspan(16 + header_len);

    try {
        Checkpoint c;
        const auto vb = header.at("vocab_bytes").get<std::vector<std::uint8_t>>();
        c.vocab = Vocab::from_bytes(vb);
        c.config.hidden_dim = header.at("config").at("hidden_dim").get<int>();
        c.config.seed = header.at("config").at("seed").get<std::uint64_t>();
        if (c.config.hidden_dim < 2) {
            throw FormatError("checkpoint hidden_dim must be at least 2");
        }
        c.stage = parse_stage(header.at("stage").get<std::string>());
        c.metadata = header.at("metadata").get<std::map<std::string, std::string>>();
        c.params = Parameters(c.vocab.size(), c.config.hidden_dim);
        const json& dir = header.at("arrays");
        std::size_t expected = 0;
        for (const auto& e : dir) {
            expected += e.at("rows").get<std::size_t>() * e.at("cols").get<std::size_t>() * 8;
        }
        if (data.size() != expected) {
            throw FormatError("checkpoint data section has " + std::to_string(data.size()) +
                              " bytes, expected " + std::to_string(expected));
        }
        fill_arrays(c.params.arrays(), "", dir, data);
        if (!header.at("optimizer_step").is_null()) {
            AdamState st{c.params.zeros_like(), c.params.zeros_like(),
                         header.at("optimizer_step").get<std::int64_t>()};
            fill_arrays(st.m.arrays(), "adam.m.", dir, data);
            fill_arrays(st.v.arrays(), "adam.v.", dir, data);
            c.optimizer = std::move(st);
        }
        if (!c.params.all_finite()) {
            throw FormatError("checkpoint contains non-finite parameters");
        }
        return c;
    } catch (const json::exception& e) {
        throw FormatError(std::string("corrupt checkpoint header: ") + e.what());
    }
}

void Checkpoint::save(const std::string& path) const {
    const auto bytes = to_bytes();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("cannot write checkpoint " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw FormatError("failed writing checkpoint " + path);
    }
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open checkpoint " + path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return from_bytes(bytes);
}

}  // namespace synlink
