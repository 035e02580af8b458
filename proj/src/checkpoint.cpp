#include "vdt/checkpoint.hpp"

#include <json.hpp>

#include <fstream>

namespace vdt {

using nlohmann::json;

uint64_t fnv1a64(const void* data, size_t n, uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t params_hash_f32(const std::vector<Tensor>& params) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : params) {
        for (double v : p.values()) {
            float f = static_cast<float>(v);
            h = fnv1a64(&f, sizeof(f), h);
        }
    }
    return h;
}

namespace {

json header_to_json(const CheckpointHeader& h) {
    json j;
    j["format_version"] = h.format_version;
    j["kind"] = h.kind;
    j["config_echo"] = h.config_echo;
    json params = json::array();
    for (const auto& [name, shape] : h.params) params.push_back({{"name", name}, {"shape", shape}});
    j["params"] = params;
    j["codec"] = {{"levels", h.codec_levels},
                  {"input_channels", h.codec_input_channels},
                  {"subband_order", "LLL,LLH,LHL,LHH,HLL,HLH,HHL,HHH (depth,height,width)"}};
    j["schedule"] = {{"T", h.sched_T}, {"s", h.sched_s}};
    j["rng_state"] = h.rng_state;
    j["blob_hash"] = h.blob_hash;
    if (h.kind == "adapter") {
        j["backbone_hash"] = h.backbone_hash;
        j["gate_mode"] = h.gate_mode;
        j["fixed_pi"] = h.fixed_pi;
    }
    return j;
}

CheckpointHeader header_from_json(const json& j) {
    CheckpointHeader h;
    h.format_version = j.at("format_version").get<int>();
    h.kind = j.at("kind").get<std::string>();
    h.config_echo = j.at("config_echo").get<std::string>();
    for (const auto& p : j.at("params")) {
        h.params.emplace_back(p.at("name").get<std::string>(), p.at("shape").get<Shape>());
    }
    h.codec_levels = j.at("codec").at("levels").get<int>();
    h.codec_input_channels = j.at("codec").at("input_channels").get<int>();
    h.sched_T = j.at("schedule").at("T").get<int>();
    h.sched_s = j.at("schedule").at("s").get<double>();
    h.rng_state = j.at("rng_state").get<std::string>();
    h.blob_hash = j.at("blob_hash").get<uint64_t>();
    if (h.kind == "adapter") {
        h.backbone_hash = j.at("backbone_hash").get<uint64_t>();
        h.gate_mode = j.at("gate_mode").get<std::string>();
        h.fixed_pi = j.at("fixed_pi").get<double>();
    }
    return h;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, CheckpointHeader header,
                     std::vector<Tensor> params) {
    if (header.params.size() != params.size())
        throw ContractError("save_checkpoint: header table has " +
                            std::to_string(header.params.size()) + " entries for " +
                            std::to_string(params.size()) + " tensors");
    for (size_t i = 0; i < params.size(); ++i)
        if (header.params[i].second != params[i].shape())
            throw ContractError("save_checkpoint: shape mismatch for '" + header.params[i].first +
                                "'");
    // in-memory parameters become exactly the stored values
    for (auto& p : params) snap_to_f32(p);

    std::vector<float> blob;
    size_t total = 0;
    for (const auto& p : params) total += p.values().size();
    blob.reserve(total);
    for (const auto& p : params)
        for (double v : p.values()) blob.push_back(static_cast<float>(v));
    header.blob_hash = fnv1a64(blob.data(), blob.size() * sizeof(float));

    std::string header_json = header_to_json(header).dump();

    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("save_checkpoint: cannot open " + tmp.string());
        os << "VDTCKPT1\n" << header_json.size() << "\n" << header_json;
        os.write(reinterpret_cast<const char*>(blob.data()),
                 static_cast<std::streamsize>(blob.size() * sizeof(float)));
        if (!os) throw IoError("save_checkpoint: short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("save_checkpoint: rename failed: " + ec.message());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_checkpoint: cannot open " + path.string());
    std::string magic, len_line;
    if (!std::getline(is, magic) || magic != "VDTCKPT1")
        throw IoError("load_checkpoint: bad magic in " + path.string());
    if (!std::getline(is, len_line)) throw IoError("load_checkpoint: missing header length");
    size_t header_len = std::stoull(len_line);
    std::string header_json(header_len, '\0');
    is.read(header_json.data(), static_cast<std::streamsize>(header_len));
    if (is.gcount() != static_cast<std::streamsize>(header_len))
        throw IoError("load_checkpoint: truncated header");

    LoadedCheckpoint out;
    out.header = header_from_json(json::parse(header_json));

    size_t total = 0;
    for (const auto& [name, shape] : out.header.params) total += shape_numel(shape);
    std::vector<float> blob(total);
    is.read(reinterpret_cast<char*>(blob.data()),
            static_cast<std::streamsize>(total * sizeof(float)));
    if (is.gcount() != static_cast<std::streamsize>(total * sizeof(float)))
        throw IoError("load_checkpoint: truncated parameter blob");
    uint64_t h = fnv1a64(blob.data(), blob.size() * sizeof(float));
    if (h != out.header.blob_hash)
        throw IoError("load_checkpoint: blob hash mismatch (header/blob disagree) in " +
                      path.string());

    size_t off = 0;
    for (const auto& [name, shape] : out.header.params) {
        size_t n = static_cast<size_t>(shape_numel(shape));
        out.blobs.emplace_back(blob.begin() + off, blob.begin() + off + n);
        off += n;
    }
    return out;
}

namespace {

template <typename Model>
void load_named(Model& model, const LoadedCheckpoint& ckpt) {
    if (ckpt.header.params.size() != model.param_names().size())
        throw ConfigError("checkpoint: parameter count mismatch (" +
                          std::to_string(ckpt.header.params.size()) + " stored vs " +
                          std::to_string(model.param_names().size()) + " expected)");
    for (size_t i = 0; i < ckpt.header.params.size(); ++i) {
        const auto& [name, shape] = ckpt.header.params[i];
        if (name != model.param_names()[i])
            throw ConfigError("checkpoint: parameter '" + name + "' at position " +
                              std::to_string(i) + ", expected '" + model.param_names()[i] + "'");
        Tensor& p = model.param(name);
        if (p.shape() != shape)
            throw ConfigError("checkpoint: parameter '" + name + "' shape " + shape_str(shape) +
                              " does not match model " + shape_str(p.shape()));
        p.mutable_values() = ckpt.blobs[i];
    }
}

}  // namespace

void load_parameters(DiTModel& model, const LoadedCheckpoint& ckpt) {
    if (ckpt.header.kind != "backbone")
        throw ConfigError("checkpoint kind '" + ckpt.header.kind + "' is not a backbone");
    load_named(model, ckpt);
}

void load_parameters(ControlAdapter& adapter, const LoadedCheckpoint& ckpt) {
    if (ckpt.header.kind != "adapter")
        throw ConfigError("checkpoint kind '" + ckpt.header.kind + "' is not an adapter");
    load_named(adapter, ckpt);
}

}  // namespace vdt
