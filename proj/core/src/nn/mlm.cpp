#include "permdet/nn/mlm.hpp"

#include <algorithm>
#include <cmath>

#include "permdet/nn/encoder_detail.hpp"
#include "permdet/nn/ops.hpp"

namespace permdet::nn {

template <typename T>
MlmResult<T> pretrain_mlm(const corpus::Records& records,
                          const text::Vocabulary& vocab,
                          const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                          double mask_prob) {
    model_cfg.validate();
    train_cfg.validate();
    if (records.empty()) throw EmptyDataset("no records");
    if (mask_prob <= 0.0 || mask_prob > 1.0)
        throw NoMaskedPositions("mask_prob must be in (0,1]");
    if (model_cfg.vocab_size <= text::kNumSpecials)
        throw NoMaskedPositions("vocabulary has no content tokens");

    EncodedData data = encode_records(records, vocab, model_cfg.max_len);
    auto V = static_cast<size_t>(model_cfg.vocab_size);
    auto d = static_cast<size_t>(model_cfg.d_model);
    size_t n_content = V - text::kNumSpecials;

    MlmResult<T> result;
    result.params = ParameterStore<T>::init(model_cfg, train_cfg.seed);
    auto adam = AdamWState<T>::init(result.params);
    // Only embeddings/encoder learn here; pooler/head stay at init.
    std::vector<bool> trainable(result.params.size());
    for (size_t i = 0; i < result.params.size(); ++i)
        trainable[i] = result.params.tensors()[i].encoder;

    // Tied output projection still needs its own bias.
    ParameterStore<T> aux;
    aux.add("mlm.bias", {V}, true, true);
    auto aux_adam = AdamWState<T>::init(aux);

    util::Rng shuffle_rng(util::splitmix64(train_cfg.seed ^ 0x3a5c96e1ULL));
    util::Rng mask_rng(util::splitmix64(train_cfg.seed ^ 0x9bdf042cULL));
    util::Rng dropout_rng(util::splitmix64(train_cfg.seed ^ 0xd20b0a70ULL));

    size_t n = data.size();
    auto bs = static_cast<size_t>(train_cfg.batch_size);
    long long steps_per_epoch = static_cast<long long>((n + bs - 1) / bs);
    long long total_steps = steps_per_epoch * train_cfg.epochs;
    long long step = 0;

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    size_t masked_seen = 0;
    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        size_t loss_count = 0;
        for (size_t start = 0; start < n; start += bs) {
            size_t stop = std::min(n, start + bs);
            std::vector<text::TokenSequence> seqs;
            for (size_t i = start; i < stop; ++i) seqs.push_back(data.seqs[order[i]]);
            Batch batch = Batch::from_sequences(seqs);

            // Corrupt the batch; remember original ids of masked positions.
            std::vector<int> target(batch.ids.size(), -1);
            std::vector<size_t> positions;
            for (size_t i = 0; i < batch.ids.size(); ++i) {
                if (!batch.mask[i] || batch.ids[i] < text::kNumSpecials) continue;
                if (!mask_rng.bernoulli(mask_prob)) continue;
                target[i] = batch.ids[i];
                positions.push_back(i);
                double u = mask_rng.real();
                if (u < 0.8)
                    batch.ids[i] = text::kMask;
                else if (u < 0.9)
                    batch.ids[i] = text::kNumSpecials +
                                   static_cast<int>(mask_rng.uniform(n_content));
                // else: keep the original token
            }
            if (positions.empty()) continue;  // nothing to learn from this batch
            masked_seen += positions.size();

            EncoderCache<T> cache;
            Tensor<T> hidden = encoder_forward(result.params, model_cfg, batch,
                                               RunMode::Train, &dropout_rng, &cache,
                                               static_cast<ForwardTrace<T>*>(nullptr));

            size_t M = positions.size();
            Tensor<T> h_sel({M, d});
            for (size_t m = 0; m < M; ++m)
                std::copy(hidden.ptr() + positions[m] * d,
                          hidden.ptr() + (positions[m] + 1) * d, h_sel.ptr() + m * d);

            // logits = h_sel * E^T + b
            Tensor<T> logits({M, V});
            ops::gemm_nt(h_sel.ptr(), result.params.at("embed.token").ptr(),
                         logits.ptr(), M, d, V);
            ops::add_bias_rows(logits.ptr(), aux.at("mlm.bias").ptr(), M, V);

            std::vector<int> labels(M);
            for (size_t m = 0; m < M; ++m) labels[m] = target[positions[m]];
            T loss = cross_entropy(logits, labels);
            loss_sum += static_cast<double>(loss) * static_cast<double>(M);
            loss_count += M;

            Tensor<T> dlogits({M, V});
            for (size_t m = 0; m < M; ++m) {
                const T* row = logits.ptr() + m * V;
                T max_v = row[0];
                for (size_t c = 1; c < V; ++c) max_v = std::max(max_v, row[c]);
                T sum{0};
                T* drow = dlogits.ptr() + m * V;
                for (size_t c = 0; c < V; ++c) {
                    drow[c] = std::exp(row[c] - max_v);
                    sum += drow[c];
                }
                for (size_t c = 0; c < V; ++c) drow[c] /= sum;
                drow[static_cast<size_t>(labels[m])] -= T{1};
                for (size_t c = 0; c < V; ++c) drow[c] /= static_cast<T>(M);
            }

            auto grads = ParameterStore<T>::zeros_like(result.params);
            ParameterStore<T> aux_grads = ParameterStore<T>::zeros_like(aux);
            // dE += dlogits^T * h_sel  (tied projection)
            ops::gemm_tn(dlogits.ptr(), h_sel.ptr(), grads.at("embed.token").ptr(),
                         V, M, d, /*accumulate=*/true);
            ops::accumulate_bias_grad(dlogits.ptr(), aux_grads.at("mlm.bias").ptr(),
                                      M, V);

            Tensor<T> dh_sel({M, d});
            ops::gemm_nn(dlogits.ptr(), result.params.at("embed.token").ptr(),
                         dh_sel.ptr(), M, V, d);
            Tensor<T> dhidden({batch.B, batch.T, d});
            for (size_t m = 0; m < M; ++m) {
                T* dst = dhidden.ptr() + positions[m] * d;
                const T* src = dh_sel.ptr() + m * d;
                for (size_t j = 0; j < d; ++j) dst[j] += src[j];
            }
            encoder_backward(result.params, model_cfg, batch, cache, dhidden, grads);

            double lr = lr_schedule(step, total_steps, train_cfg.warmup_fraction,
                                    train_cfg.learning_rate);
            adamw_step(result.params, grads, adam, train_cfg, lr, trainable);
            adamw_step(aux, aux_grads, aux_adam, train_cfg, lr);
            ++step;
        }
        result.epoch_loss.push_back(
            loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0);
    }
    if (masked_seen == 0)
        throw NoMaskedPositions("no maskable content tokens in the corpus");
    return result;
}

template MlmResult<float> pretrain_mlm<float>(const corpus::Records&,
                                              const text::Vocabulary&,
                                              const ModelConfig&, const TrainConfig&,
                                              double);
template MlmResult<double> pretrain_mlm<double>(const corpus::Records&,
                                                const text::Vocabulary&,
                                                const ModelConfig&, const TrainConfig&,
                                                double);

}  // namespace permdet::nn
