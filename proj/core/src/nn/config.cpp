#include "permdet/nn/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace permdet::nn {

namespace {

using nlohmann::json;

std::string pooling_name(Pooling p) {
    return p == Pooling::Pooler ? "pooler" : "last_hidden_mean";
}

Pooling pooling_from(const std::string& s) {
    if (s == "pooler") return Pooling::Pooler;
    if (s == "last_hidden_mean" || s == "last-hidden" || s == "last_hidden")
        return Pooling::LastHiddenMean;
    throw BadConfig("unknown pooling mode: " + s);
}

}  // namespace

std::string to_json(const ModelConfig& cfg) {
    json j{{"vocab_size", cfg.vocab_size},
           {"d_model", cfg.d_model},
           {"n_layers", cfg.n_layers},
           {"n_heads", cfg.n_heads},
           {"d_ff", cfg.d_ff},
           {"max_len", cfg.max_len},
           {"dropout", cfg.dropout},
           {"pooling", pooling_name(cfg.pooling)},
           {"head_hidden", cfg.head_hidden},
           {"n_classes", cfg.n_classes},
           {"fine_tune_encoder", cfg.fine_tune_encoder}};
    return j.dump(2);
}

std::string to_json(const TrainConfig& cfg) {
    json j{{"learning_rate", cfg.learning_rate},
           {"batch_size", cfg.batch_size},
           {"epochs", cfg.epochs},
           {"warmup_fraction", cfg.warmup_fraction},
           {"weight_decay", cfg.weight_decay},
           {"adam_beta1", cfg.adam_beta1},
           {"adam_beta2", cfg.adam_beta2},
           {"adam_eps", cfg.adam_eps},
           {"seed", cfg.seed},
           {"precision", cfg.precision == Precision::F64 ? "f64" : "f32"},
           {"eval_fraction", cfg.eval_fraction}};
    return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    ModelConfig cfg;
    cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
    cfg.d_model = j.value("d_model", cfg.d_model);
    cfg.n_layers = j.value("n_layers", cfg.n_layers);
    cfg.n_heads = j.value("n_heads", cfg.n_heads);
    cfg.d_ff = j.value("d_ff", cfg.d_ff);
    cfg.max_len = j.value("max_len", cfg.max_len);
    cfg.dropout = j.value("dropout", cfg.dropout);
    if (j.contains("pooling")) cfg.pooling = pooling_from(j["pooling"].get<std::string>());
    cfg.head_hidden = j.value("head_hidden", cfg.head_hidden);
    cfg.n_classes = j.value("n_classes", cfg.n_classes);
    cfg.fine_tune_encoder = j.value("fine_tune_encoder", cfg.fine_tune_encoder);
    return cfg;
}

TrainConfig train_config_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    TrainConfig cfg;
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.warmup_fraction = j.value("warmup_fraction", cfg.warmup_fraction);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
    cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("precision"))
        cfg.precision =
            j["precision"].get<std::string>() == "f64" ? Precision::F64 : Precision::F32;
    cfg.eval_fraction = j.value("eval_fraction", cfg.eval_fraction);
    return cfg;
}

namespace {
std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
}  // namespace

ModelConfig load_model_config(const std::filesystem::path& path) {
    return model_config_from_json(slurp(path));
}
TrainConfig load_train_config(const std::filesystem::path& path) {
    return train_config_from_json(slurp(path));
}

}  // namespace permdet::nn
