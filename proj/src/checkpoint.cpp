#include "sskd/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "sskd/serialize.hpp"

namespace sskd {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'K', 'D', 'C', 'K', 'P', 'T'};

void write_f64_le(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    unsigned char raw[8];
    for (int i = 0; i < 8; ++i) raw[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(raw), 8);
}

double read_f64_le(std::ifstream& in, const std::string& path) {
    unsigned char raw[8];
    in.read(reinterpret_cast<char*>(raw), 8);
    if (in.gcount() != 8) throw ParseError(path + ": truncated parameter block");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(raw[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

}  // namespace

void save_checkpoint(const EnsembleState& ensemble, const TrainConfig& cfg,
                     const std::string& path, const CheckpointExtras& extras) {
    nlohmann::json shapes = nlohmann::json::array();
    for (const ClassifierModel& member : ensemble.members) {
        nlohmann::json tensors = nlohmann::json::array();
        for (const Matrix* p : member.parameters())
            tensors.push_back({p->rows, p->cols});
        shapes.push_back(std::move(tensors));
    }
    nlohmann::json meta = {{"format_version", kCheckpointVersion},
                           {"config", cfg},
                           {"members", ensemble.members.size()},
                           {"shapes", std::move(shapes)},
                           {"iteration", extras.iteration},
                           {"epoch", extras.epoch},
                           {"val_metrics", extras.val_metrics}};
    const std::string doc = meta.dump();

    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ParseError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    const auto len = static_cast<std::uint32_t>(doc.size());
    unsigned char lenraw[4];
    for (int i = 0; i < 4; ++i) lenraw[i] = static_cast<unsigned char>(len >> (8 * i));
    out.write(reinterpret_cast<const char*>(lenraw), 4);
    out.write(doc.data(), static_cast<std::streamsize>(doc.size()));
    for (const ClassifierModel& member : ensemble.members)
        for (const Matrix* t : member.parameters())
            for (double v : t->values) write_f64_le(out, v);
    if (!out) throw ParseError("short write: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open checkpoint: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError(path + ": not a checkpoint file (bad magic)");

    unsigned char lenraw[4];
    in.read(reinterpret_cast<char*>(lenraw), 4);
    if (in.gcount() != 4) throw ParseError(path + ": truncated header");
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(lenraw[i]) << (8 * i);

    std::string doc(len, '\0');
    in.read(doc.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::uint32_t>(in.gcount()) != len)
        throw ParseError(path + ": truncated metadata");

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(doc);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": metadata is not valid JSON: " + e.what());
    }

    const int version = meta.value("format_version", -1);
    if (version != kCheckpointVersion)
        throw CheckpointVersionError(path + ": format version " + std::to_string(version) +
                                     " is not supported (expected " +
                                     std::to_string(kCheckpointVersion) + ")");

    LoadedCheckpoint loaded;
    loaded.metadata = meta;
    meta.at("config").get_to(loaded.config);

    const auto member_count = meta.at("members").get<std::size_t>();
    loaded.ensemble = init_ensemble(loaded.config.model,
                                    static_cast<int>(member_count),
                                    loaded.config.seed);

    const auto& shapes = meta.at("shapes");
    for (std::size_t k = 0; k < member_count; ++k) {
        auto params = loaded.ensemble.members[k].parameters();
        const auto& tensors = shapes.at(k);
        if (tensors.size() != params.size())
            throw ParseError(path + ": tensor count mismatch for member " +
                             std::to_string(k));
        for (std::size_t t = 0; t < params.size(); ++t) {
            const auto r = tensors.at(t).at(0).get<std::size_t>();
            const auto c = tensors.at(t).at(1).get<std::size_t>();
            if (r != params[t]->rows || c != params[t]->cols)
                throw ParseError(path + ": tensor shape mismatch for member " +
                                 std::to_string(k));
            for (double& v : params[t]->values) v = read_f64_le(in, path);
        }
    }
    return loaded;
}

}  // namespace sskd
