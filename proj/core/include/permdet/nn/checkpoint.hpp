#pragma once

#include <filesystem>

#include "permdet/nn/params.hpp"

namespace permdet::nn {

struct BadMagic : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct HeaderMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LoadedCheckpoint {
    ParameterStore<float> params;
    ModelConfig model_config;
    TrainConfig train_config;
};

// "PTC1" | u32 header length | JSON header | payload of raw little-endian
// f32 row-major tensors. The header carries both configs and the tensor
// index (name, dtype, shape, offset, length); offsets are payload-relative
// and non-overlapping.
void save_checkpoint(const std::filesystem::path& path,
                     const ParameterStore<float>& params, const ModelConfig& model_cfg,
                     const TrainConfig& train_cfg);
void save_checkpoint(const std::filesystem::path& path,
                     const ParameterStore<double>& params, const ModelConfig& model_cfg,
                     const TrainConfig& train_cfg);

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace permdet::nn
