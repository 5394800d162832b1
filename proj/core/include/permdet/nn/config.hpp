#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace permdet::nn {

struct BadConfig : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class Pooling { Pooler, LastHiddenMean };
enum class Precision { F32, F64 };

// Encoder + classification head dimensions. The defaults are the desk-scale
// configuration; paper-scale dimensions are constructible but pointless
// without corresponding data.
struct ModelConfig {
    int vocab_size = 0;
    int d_model = 64;
    int n_layers = 2;
    int n_heads = 4;
    int d_ff = 256;
    int max_len = 64;
    double dropout = 0.1;
    Pooling pooling = Pooling::Pooler;
    int head_hidden = 128;
    int n_classes = 2;
    bool fine_tune_encoder = true;

    void validate() const {
        if (vocab_size <= 0) throw BadConfig("vocab_size must be positive");
        if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0)
            throw BadConfig("d_model must be divisible by n_heads");
        if (n_layers <= 0 || d_ff <= 0) throw BadConfig("bad encoder dims");
        if (max_len < 3) throw BadConfig("max_len must be >= 3");
        if (dropout < 0.0 || dropout >= 1.0) throw BadConfig("dropout in [0,1)");
        if (head_hidden < 1) throw BadConfig("head_hidden must be >= 1");
        if (n_classes != 2) throw BadConfig("binary task: n_classes must be 2");
    }
};

struct TrainConfig {
    double learning_rate = 1e-3;  // 2e-5 is the paper-scale starting point
    int batch_size = 16;
    int epochs = 5;
    double warmup_fraction = 0.1;
    double weight_decay = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t seed = 0;
    Precision precision = Precision::F32;
    double eval_fraction = 0.2;  // held-out share used by train()

    void validate() const {
        if (batch_size < 1) throw BadConfig("batch_size must be >= 1");
        if (epochs < 0) throw BadConfig("epochs must be >= 0");
        if (warmup_fraction < 0.0 || warmup_fraction > 1.0)
            throw BadConfig("warmup_fraction in [0,1]");
        if (eval_fraction < 0.0 || eval_fraction >= 1.0)
            throw BadConfig("eval_fraction in [0,1)");
    }
};

std::string to_json(const ModelConfig& cfg);
std::string to_json(const TrainConfig& cfg);
ModelConfig model_config_from_json(const std::string& json_text);
TrainConfig train_config_from_json(const std::string& json_text);
ModelConfig load_model_config(const std::filesystem::path& path);
TrainConfig load_train_config(const std::filesystem::path& path);

}  // namespace permdet::nn
