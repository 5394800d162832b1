#include "permdet/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace permdet::nn {

namespace {

constexpr char kMagic[4] = {'P', 'T', 'C', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

using nlohmann::json;

void write_u32le(std::ostream& out, uint32_t v) {
    char buf[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                   static_cast<char>((v >> 16) & 0xff),
                   static_cast<char>((v >> 24) & 0xff)};
    out.write(buf, 4);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const ParameterStore<float>& params, const ModelConfig& model_cfg,
                     const TrainConfig& train_cfg) {
    json header;
    header["model_config"] = json::parse(to_json(model_cfg));
    header["train_config"] = json::parse(to_json(train_cfg));
    json tensors = json::array();
    uint64_t offset = 0;
    for (const auto& t : params.tensors()) {
        uint64_t length = t.value.numel() * sizeof(float);
        tensors.push_back(json{{"name", t.name},
                               {"dtype", "f32"},
                               {"shape", t.value.shape},
                               {"offset", offset},
                               {"length", length}});
        offset += length;
    }
    header["tensors"] = std::move(tensors);
    std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kMagic, 4);
    write_u32le(out, static_cast<uint32_t>(header_text.size()));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const auto& t : params.tensors())
        out.write(reinterpret_cast<const char*>(t.value.data.data()),
                  static_cast<std::streamsize>(t.value.numel() * sizeof(float)));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void save_checkpoint(const std::filesystem::path& path,
                     const ParameterStore<double>& params, const ModelConfig& model_cfg,
                     const TrainConfig& train_cfg) {
    save_checkpoint(path, params.template cast<float>(), model_cfg, train_cfg);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw BadMagic("not a PTC1 checkpoint");

    char lenbuf[4];
    in.read(lenbuf, 4);
    if (!in) throw HeaderMismatch("truncated header length");
    uint32_t header_len = static_cast<uint8_t>(lenbuf[0]) |
                          (static_cast<uint8_t>(lenbuf[1]) << 8) |
                          (static_cast<uint8_t>(lenbuf[2]) << 16) |
                          (static_cast<uint8_t>(lenbuf[3]) << 24);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), header_len);
    if (!in) throw HeaderMismatch("truncated header");

    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::exception& e) {
        throw HeaderMismatch(std::string("bad header json: ") + e.what());
    }

    LoadedCheckpoint ckpt;
    try {
        ckpt.model_config = model_config_from_json(header.at("model_config").dump());
        ckpt.train_config = train_config_from_json(header.at("train_config").dump());
    } catch (const json::exception& e) {
        throw HeaderMismatch(std::string("bad config block: ") + e.what());
    }

    register_model_tensors(ckpt.params, ckpt.model_config);

    std::vector<char> payload((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());

    uint64_t expected_end = 0;
    for (const auto& jt : header.at("tensors")) {
        std::string name = jt.at("name").get<std::string>();
        auto shape = jt.at("shape").get<std::vector<size_t>>();
        auto offset = jt.at("offset").get<uint64_t>();
        auto length = jt.at("length").get<uint64_t>();
        if (jt.at("dtype").get<std::string>() != "f32")
            throw HeaderMismatch("unsupported dtype for " + name);
        if (offset != expected_end)
            throw HeaderMismatch("tensor offsets must be contiguous");
        expected_end = offset + length;
        if (!ckpt.params.has(name))
            throw HeaderMismatch("unknown tensor " + name);
        auto& dst = ckpt.params.at(name);
        if (dst.shape != shape)
            throw HeaderMismatch("shape mismatch for " + name);
        if (length != dst.numel() * sizeof(float))
            throw HeaderMismatch("length disagrees with shape for " + name);
        if (offset + length > payload.size())
            throw HeaderMismatch("payload truncated at " + name);
        std::memcpy(dst.data.data(), payload.data() + offset, length);
    }
    if (expected_end != payload.size())
        throw HeaderMismatch("payload size disagrees with tensor index");
    return ckpt;
}

}  // namespace permdet::nn
