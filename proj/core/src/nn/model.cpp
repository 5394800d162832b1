#include "permdet/nn/encoder_detail.hpp"

#include <algorithm>
#include <cmath>

#include "permdet/nn/ops.hpp"

namespace permdet::nn {

Batch Batch::from_sequences(std::span<const text::TokenSequence> seqs,
                            std::optional<size_t> fixed_len) {
    Batch batch;
    batch.B = seqs.size();
    size_t t = 2;
    for (const auto& s : seqs) t = std::max(t, static_cast<size_t>(s.true_length));
    batch.T = fixed_len.value_or(t);
    batch.ids.assign(batch.B * batch.T, text::kPad);
    batch.mask.assign(batch.B * batch.T, 0);
    for (size_t b = 0; b < batch.B; ++b) {
        const auto& s = seqs[b];
        if (static_cast<size_t>(s.true_length) > batch.T)
            throw ShapeMismatch("sequence longer than batch window");
        for (size_t i = 0; i < batch.T && i < s.ids.size(); ++i) {
            batch.ids[b * batch.T + i] = s.ids[i];
            batch.mask[b * batch.T + i] = s.mask[i];
        }
    }
    return batch;
}

namespace {

template <typename T>
void check_batch(const ModelConfig& cfg, const Batch& batch) {
    if (batch.B == 0 || batch.T == 0) throw ShapeMismatch("empty batch");
    if (batch.T > static_cast<size_t>(cfg.max_len))
        throw ShapeMismatch("batch window exceeds max_len");
    if (batch.ids.size() != batch.B * batch.T ||
        batch.mask.size() != batch.B * batch.T)
        throw ShapeMismatch("ids/mask size disagrees with B*T");
    for (size_t i = 0; i < batch.ids.size(); ++i) {
        if (batch.ids[i] < 0 || batch.ids[i] >= cfg.vocab_size)
            throw ShapeMismatch("token id out of vocabulary range");
        if (batch.mask[i] != 0 && batch.mask[i] != 1)
            throw ShapeMismatch("mask values must be 0/1");
    }
    for (size_t b = 0; b < batch.B; ++b) {
        bool any = false;
        for (size_t t = 0; t < batch.T; ++t) any |= batch.mask[b * batch.T + t] == 1;
        if (!any) throw ShapeMismatch("batch row with empty mask");
    }
}

// Inverted dropout. Writes scale factors (0 or 1/(1-p)) into mask_out when
// active; an empty mask_out means identity.
template <typename T>
void apply_dropout(Tensor<T>& x, double p, RunMode mode, util::Rng* rng,
                   Tensor<T>& mask_out) {
    if (mode != RunMode::Train || p <= 0.0 || rng == nullptr) return;
    mask_out = Tensor<T>(x.shape);
    T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    for (size_t i = 0; i < x.numel(); ++i) {
        T s = rng->bernoulli(p) ? T{0} : keep_scale;
        mask_out[i] = s;
        x[i] *= s;
    }
}

template <typename T>
void dropout_backward(Tensor<T>& dx, const Tensor<T>& mask) {
    if (mask.numel() == 0) return;
    for (size_t i = 0; i < dx.numel(); ++i) dx[i] *= mask[i];
}

template <typename T>
void extract_head(const Tensor<T>& x, size_t b, size_t head, size_t B, size_t Tm,
                  size_t d, size_t dh, std::vector<T>& out) {
    (void)B;
    out.resize(Tm * dh);
    for (size_t i = 0; i < Tm; ++i) {
        const T* src = x.ptr() + (b * Tm + i) * d + head * dh;
        std::copy(src, src + dh, out.data() + i * dh);
    }
}

template <typename T>
void scatter_head_add(const std::vector<T>& in, size_t b, size_t head, size_t Tm,
                      size_t d, size_t dh, Tensor<T>& out) {
    for (size_t i = 0; i < Tm; ++i) {
        T* dst = out.ptr() + (b * Tm + i) * d + head * dh;
        const T* src = in.data() + i * dh;
        for (size_t c = 0; c < dh; ++c) dst[c] += src[c];
    }
}

template <typename T>
struct ClassifierCache {
    Tensor<T> cls;        // [B,d] pooler input rows
    Tensor<T> pooled;     // [B,d] post-tanh / masked mean
    Tensor<T> head_pre;   // [B,h] pre-ReLU
    Tensor<T> head_act;   // [B,h]
    std::vector<T> inv_count;  // 1/valid-count per row (mean pooling)
};

template <typename T>
void classifier_forward(const ParameterStore<T>& params, const ModelConfig& cfg,
                        const Batch& batch, const Tensor<T>& hidden,
                        ClassifierCache<T>& cc, Tensor<T>& logits, Tensor<T>& probs) {
    size_t B = batch.B, Tm = batch.T;
    auto d = static_cast<size_t>(cfg.d_model);
    auto hh = static_cast<size_t>(cfg.head_hidden);
    auto C = static_cast<size_t>(cfg.n_classes);

    cc.pooled = Tensor<T>({B, d});
    if (cfg.pooling == Pooling::Pooler) {
        cc.cls = Tensor<T>({B, d});
        for (size_t b = 0; b < B; ++b)
            std::copy(hidden.ptr() + b * Tm * d, hidden.ptr() + b * Tm * d + d,
                      cc.cls.ptr() + b * d);
        ops::gemm_nn(cc.cls.ptr(), params.at("pooler.w").ptr(), cc.pooled.ptr(), B,
                     d, d);
        ops::add_bias_rows(cc.pooled.ptr(), params.at("pooler.b").ptr(), B, d);
        for (auto& v : cc.pooled.data) v = std::tanh(v);
    } else {
        cc.inv_count.assign(B, T{0});
        for (size_t b = 0; b < B; ++b) {
            size_t count = 0;
            T* out = cc.pooled.ptr() + b * d;
            for (size_t t = 0; t < Tm; ++t) {
                if (!batch.mask[b * Tm + t]) continue;
                ++count;
                const T* row = hidden.ptr() + (b * Tm + t) * d;
                for (size_t j = 0; j < d; ++j) out[j] += row[j];
            }
            cc.inv_count[b] = T{1} / static_cast<T>(count);
            for (size_t j = 0; j < d; ++j) out[j] *= cc.inv_count[b];
        }
    }

    cc.head_pre = Tensor<T>({B, hh});
    ops::gemm_nn(cc.pooled.ptr(), params.at("head.w1").ptr(), cc.head_pre.ptr(), B,
                 d, hh);
    ops::add_bias_rows(cc.head_pre.ptr(), params.at("head.b1").ptr(), B, hh);
    cc.head_act = cc.head_pre;
    for (auto& v : cc.head_act.data) v = std::max(v, T{0});

    logits = Tensor<T>({B, C});
    ops::gemm_nn(cc.head_act.ptr(), params.at("head.w2").ptr(), logits.ptr(), B, hh,
                 C);
    ops::add_bias_rows(logits.ptr(), params.at("head.b2").ptr(), B, C);

    for (const auto& v : logits.data)
        if (!std::isfinite(static_cast<double>(v)))
            throw NonFiniteActivation("non-finite logit");

    probs = Tensor<T>({B, C});
    std::vector<int> all_valid(C, 1);
    for (size_t b = 0; b < B; ++b)
        ops::masked_softmax_row(logits.ptr() + b * C, all_valid.data(), C,
                                probs.ptr() + b * C);
}

// Produces dhidden and accumulates pooler/head gradients.
template <typename T>
Tensor<T> classifier_backward(const ParameterStore<T>& params, const ModelConfig& cfg,
                              const Batch& batch, const Tensor<T>& hidden,
                              const ClassifierCache<T>& cc, const Tensor<T>& dlogits,
                              ParameterStore<T>& grads) {
    size_t B = batch.B, Tm = batch.T;
    auto d = static_cast<size_t>(cfg.d_model);
    auto hh = static_cast<size_t>(cfg.head_hidden);
    auto C = static_cast<size_t>(cfg.n_classes);
    (void)hidden;

    ops::gemm_tn(cc.head_act.ptr(), dlogits.ptr(), grads.at("head.w2").ptr(), hh, B,
                 C, /*accumulate=*/true);
    ops::accumulate_bias_grad(dlogits.ptr(), grads.at("head.b2").ptr(), B, C);

    Tensor<T> dact({B, hh});
    ops::gemm_nt(dlogits.ptr(), params.at("head.w2").ptr(), dact.ptr(), B, C, hh);
    for (size_t i = 0; i < dact.numel(); ++i)
        if (cc.head_pre[i] <= T{0}) dact[i] = T{0};

    ops::gemm_tn(cc.pooled.ptr(), dact.ptr(), grads.at("head.w1").ptr(), d, B, hh,
                 /*accumulate=*/true);
    ops::accumulate_bias_grad(dact.ptr(), grads.at("head.b1").ptr(), B, hh);

    Tensor<T> dpooled({B, d});
    ops::gemm_nt(dact.ptr(), params.at("head.w1").ptr(), dpooled.ptr(), B, hh, d);

    Tensor<T> dhidden({B, Tm, d});
    if (cfg.pooling == Pooling::Pooler) {
        Tensor<T> dt({B, d});
        for (size_t i = 0; i < dt.numel(); ++i) {
            T th = cc.pooled[i];
            dt[i] = dpooled[i] * (T{1} - th * th);
        }
        ops::gemm_tn(cc.cls.ptr(), dt.ptr(), grads.at("pooler.w").ptr(), d, B, d,
                     /*accumulate=*/true);
        ops::accumulate_bias_grad(dt.ptr(), grads.at("pooler.b").ptr(), B, d);
        Tensor<T> dcls({B, d});
        ops::gemm_nt(dt.ptr(), params.at("pooler.w").ptr(), dcls.ptr(), B, d, d);
        for (size_t b = 0; b < B; ++b) {
            T* dst = dhidden.ptr() + b * Tm * d;  // [CLS] row
            const T* src = dcls.ptr() + b * d;
            for (size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
    } else {
        for (size_t b = 0; b < B; ++b) {
            const T* dp = dpooled.ptr() + b * d;
            for (size_t t = 0; t < Tm; ++t) {
                if (!batch.mask[b * Tm + t]) continue;
                T* dst = dhidden.ptr() + (b * Tm + t) * d;
                for (size_t j = 0; j < d; ++j) dst[j] += dp[j] * cc.inv_count[b];
            }
        }
    }
    return dhidden;
}

}  // namespace

template <typename T>
Tensor<T> encoder_forward(const ParameterStore<T>& params, const ModelConfig& cfg,
                          const Batch& batch, RunMode mode, util::Rng* dropout_rng,
                          EncoderCache<T>* cache, ForwardTrace<T>* trace) {
    check_batch<T>(cfg, batch);
    size_t B = batch.B, Tm = batch.T;
    auto d = static_cast<size_t>(cfg.d_model);
    auto H = static_cast<size_t>(cfg.n_heads);
    size_t dh = d / H;
    auto f = static_cast<size_t>(cfg.d_ff);
    T inv_sqrt_dh = T{1} / std::sqrt(static_cast<T>(dh));

    const auto& tok = params.at("embed.token");
    const auto& pos = params.at("embed.pos");

    Tensor<T> h({B, Tm, d});
    for (size_t b = 0; b < B; ++b) {
        for (size_t t = 0; t < Tm; ++t) {
            auto id = static_cast<size_t>(batch.ids[b * Tm + t]);
            const T* te = tok.ptr() + id * d;
            const T* pe = pos.ptr() + t * d;
            T* dst = h.ptr() + (b * Tm + t) * d;
            for (size_t j = 0; j < d; ++j) dst[j] = te[j] + pe[j];
        }
    }
    Tensor<T> embed_drop;
    apply_dropout(h, cfg.dropout, mode, dropout_rng, embed_drop);
    if (cache) {
        cache->embedded = h;
        cache->embed_drop = std::move(embed_drop);
        cache->layers.resize(static_cast<size_t>(cfg.n_layers));
    }
    if (trace) {
        trace->attention.clear();
        trace->ln_normalized.clear();
    }

    std::vector<T> qh, kh, vh, scores, ctx_h;
    for (int layer = 0; layer < cfg.n_layers; ++layer) {
        std::string p = "enc." + std::to_string(layer) + ".";
        LayerCache<T> local;
        LayerCache<T>& lc = cache ? cache->layers[static_cast<size_t>(layer)] : local;
        lc.h_in = h;

        size_t rows = B * Tm;
        lc.q = Tensor<T>({B, Tm, d});
        lc.k = Tensor<T>({B, Tm, d});
        lc.v = Tensor<T>({B, Tm, d});
        ops::gemm_nn(h.ptr(), params.at(p + "attn.wq").ptr(), lc.q.ptr(), rows, d, d);
        ops::add_bias_rows(lc.q.ptr(), params.at(p + "attn.bq").ptr(), rows, d);
        ops::gemm_nn(h.ptr(), params.at(p + "attn.wk").ptr(), lc.k.ptr(), rows, d, d);
        ops::add_bias_rows(lc.k.ptr(), params.at(p + "attn.bk").ptr(), rows, d);
        ops::gemm_nn(h.ptr(), params.at(p + "attn.wv").ptr(), lc.v.ptr(), rows, d, d);
        ops::add_bias_rows(lc.v.ptr(), params.at(p + "attn.bv").ptr(), rows, d);

        lc.attn = Tensor<T>({B, H, Tm, Tm});
        lc.ctx = Tensor<T>({B, Tm, d});
        for (size_t b = 0; b < B; ++b) {
            const int* valid = batch.mask.data() + b * Tm;
            for (size_t head = 0; head < H; ++head) {
                extract_head(lc.q, b, head, B, Tm, d, dh, qh);
                extract_head(lc.k, b, head, B, Tm, d, dh, kh);
                extract_head(lc.v, b, head, B, Tm, d, dh, vh);
                scores.resize(Tm * Tm);
                ops::gemm_nt(qh.data(), kh.data(), scores.data(), Tm, dh, Tm);
                for (auto& s : scores) s *= inv_sqrt_dh;
                T* probs = lc.attn.ptr() + (b * H + head) * Tm * Tm;
                for (size_t i = 0; i < Tm; ++i)
                    ops::masked_softmax_row(scores.data() + i * Tm, valid, Tm,
                                            probs + i * Tm);
                ctx_h.resize(Tm * dh);
                ops::gemm_nn(probs, vh.data(), ctx_h.data(), Tm, Tm, dh);
                for (size_t i = 0; i < Tm; ++i)
                    std::copy(ctx_h.data() + i * dh, ctx_h.data() + (i + 1) * dh,
                              lc.ctx.ptr() + (b * Tm + i) * d + head * dh);
            }
        }
        if (trace) trace->attention.push_back(lc.attn);

        Tensor<T> attn_out({B, Tm, d});
        ops::gemm_nn(lc.ctx.ptr(), params.at(p + "attn.wo").ptr(), attn_out.ptr(),
                     rows, d, d);
        ops::add_bias_rows(attn_out.ptr(), params.at(p + "attn.bo").ptr(), rows, d);
        apply_dropout(attn_out, cfg.dropout, mode, dropout_rng, lc.attn_drop);

        Tensor<T> res1({B, Tm, d});
        for (size_t i = 0; i < res1.numel(); ++i) res1[i] = h[i] + attn_out[i];

        lc.ln1_y = Tensor<T>({rows, d});
        lc.ln1_inv = Tensor<T>({rows});
        lc.h_mid = Tensor<T>({B, Tm, d});
        ops::layernorm_forward(res1.ptr(), params.at(p + "attn_norm.gamma").ptr(),
                               params.at(p + "attn_norm.beta").ptr(), rows, d,
                               lc.h_mid.ptr(), lc.ln1_y.ptr(), lc.ln1_inv.ptr());
        if (trace) trace->ln_normalized.push_back(lc.ln1_y);

        lc.ffn_pre = Tensor<T>({B, Tm, f});
        ops::gemm_nn(lc.h_mid.ptr(), params.at(p + "ffn.w1").ptr(), lc.ffn_pre.ptr(),
                     rows, d, f);
        ops::add_bias_rows(lc.ffn_pre.ptr(), params.at(p + "ffn.b1").ptr(), rows, f);
        lc.ffn_act = Tensor<T>({B, Tm, f});
        for (size_t i = 0; i < lc.ffn_pre.numel(); ++i)
            lc.ffn_act[i] = ops::gelu(lc.ffn_pre[i]);

        Tensor<T> ffn_out({B, Tm, d});
        ops::gemm_nn(lc.ffn_act.ptr(), params.at(p + "ffn.w2").ptr(), ffn_out.ptr(),
                     rows, f, d);
        ops::add_bias_rows(ffn_out.ptr(), params.at(p + "ffn.b2").ptr(), rows, d);
        apply_dropout(ffn_out, cfg.dropout, mode, dropout_rng, lc.ffn_drop);

        Tensor<T> res2({B, Tm, d});
        for (size_t i = 0; i < res2.numel(); ++i) res2[i] = lc.h_mid[i] + ffn_out[i];

        lc.ln2_y = Tensor<T>({rows, d});
        lc.ln2_inv = Tensor<T>({rows});
        Tensor<T> h_out({B, Tm, d});
        ops::layernorm_forward(res2.ptr(), params.at(p + "ffn_norm.gamma").ptr(),
                               params.at(p + "ffn_norm.beta").ptr(), rows, d,
                               h_out.ptr(), lc.ln2_y.ptr(), lc.ln2_inv.ptr());
        if (trace) trace->ln_normalized.push_back(lc.ln2_y);

        h = std::move(h_out);
    }
    return h;
}

template <typename T>
void encoder_backward(const ParameterStore<T>& params, const ModelConfig& cfg,
                      const Batch& batch, const EncoderCache<T>& cache,
                      const Tensor<T>& dhidden, ParameterStore<T>& grads) {
    size_t B = batch.B, Tm = batch.T;
    auto d = static_cast<size_t>(cfg.d_model);
    auto H = static_cast<size_t>(cfg.n_heads);
    size_t dh = d / H;
    auto f = static_cast<size_t>(cfg.d_ff);
    size_t rows = B * Tm;
    T inv_sqrt_dh = T{1} / std::sqrt(static_cast<T>(dh));

    Tensor<T> dh_out = dhidden;
    std::vector<T> qh, kh, vh, dqh, dkh, dvh, dctx_h, dattn, dscores;

    for (int layer = cfg.n_layers - 1; layer >= 0; --layer) {
        std::string p = "enc." + std::to_string(layer) + ".";
        const LayerCache<T>& lc = cache.layers[static_cast<size_t>(layer)];

        // out = LN2(h_mid + dropout(ffn_out))
        Tensor<T> dres2({B, Tm, d});
        ops::layernorm_backward(dh_out.ptr(), lc.ln2_y.ptr(), lc.ln2_inv.ptr(),
                                params.at(p + "ffn_norm.gamma").ptr(), rows, d,
                                dres2.ptr(), grads.at(p + "ffn_norm.gamma").ptr(),
                                grads.at(p + "ffn_norm.beta").ptr());

        Tensor<T> dffn_out = dres2;
        dropout_backward(dffn_out, lc.ffn_drop);

        ops::gemm_tn(lc.ffn_act.ptr(), dffn_out.ptr(), grads.at(p + "ffn.w2").ptr(),
                     f, rows, d, /*accumulate=*/true);
        ops::accumulate_bias_grad(dffn_out.ptr(), grads.at(p + "ffn.b2").ptr(), rows,
                                  d);
        Tensor<T> dffn_act({B, Tm, f});
        ops::gemm_nt(dffn_out.ptr(), params.at(p + "ffn.w2").ptr(), dffn_act.ptr(),
                     rows, d, f);
        for (size_t i = 0; i < dffn_act.numel(); ++i)
            dffn_act[i] *= ops::gelu_grad(lc.ffn_pre[i]);

        Tensor<T> dh_mid = dres2;  // residual branch
        ops::gemm_tn(lc.h_mid.ptr(), dffn_act.ptr(), grads.at(p + "ffn.w1").ptr(), d,
                     rows, f, /*accumulate=*/true);
        ops::accumulate_bias_grad(dffn_act.ptr(), grads.at(p + "ffn.b1").ptr(), rows,
                                  f);
        ops::gemm_nt(dffn_act.ptr(), params.at(p + "ffn.w1").ptr(), dh_mid.ptr(),
                     rows, f, d, /*accumulate=*/true);

        // h_mid = LN1(h_in + dropout(attn_out))
        Tensor<T> dres1({B, Tm, d});
        ops::layernorm_backward(dh_mid.ptr(), lc.ln1_y.ptr(), lc.ln1_inv.ptr(),
                                params.at(p + "attn_norm.gamma").ptr(), rows, d,
                                dres1.ptr(), grads.at(p + "attn_norm.gamma").ptr(),
                                grads.at(p + "attn_norm.beta").ptr());

        Tensor<T> dattn_out = dres1;
        dropout_backward(dattn_out, lc.attn_drop);

        ops::gemm_tn(lc.ctx.ptr(), dattn_out.ptr(), grads.at(p + "attn.wo").ptr(), d,
                     rows, d, /*accumulate=*/true);
        ops::accumulate_bias_grad(dattn_out.ptr(), grads.at(p + "attn.bo").ptr(),
                                  rows, d);
        Tensor<T> dctx({B, Tm, d});
        ops::gemm_nt(dattn_out.ptr(), params.at(p + "attn.wo").ptr(), dctx.ptr(),
                     rows, d, d);

        Tensor<T> dq({B, Tm, d}), dk({B, Tm, d}), dv({B, Tm, d});
        for (size_t b = 0; b < B; ++b) {
            for (size_t head = 0; head < H; ++head) {
                extract_head(lc.q, b, head, B, Tm, d, dh, qh);
                extract_head(lc.k, b, head, B, Tm, d, dh, kh);
                extract_head(lc.v, b, head, B, Tm, d, dh, vh);
                extract_head(dctx, b, head, B, Tm, d, dh, dctx_h);
                const T* probs = lc.attn.ptr() + (b * H + head) * Tm * Tm;

                dattn.resize(Tm * Tm);
                ops::gemm_nt(dctx_h.data(), vh.data(), dattn.data(), Tm, dh, Tm);
                dvh.resize(Tm * dh);
                ops::gemm_tn(probs, dctx_h.data(), dvh.data(), Tm, Tm, dh);
                dscores.resize(Tm * Tm);
                for (size_t i = 0; i < Tm; ++i)
                    ops::softmax_row_backward(probs + i * Tm, dattn.data() + i * Tm,
                                              Tm, dscores.data() + i * Tm);
                for (auto& s : dscores) s *= inv_sqrt_dh;

                dqh.resize(Tm * dh);
                ops::gemm_nn(dscores.data(), kh.data(), dqh.data(), Tm, Tm, dh);
                dkh.resize(Tm * dh);
                ops::gemm_tn(dscores.data(), qh.data(), dkh.data(), Tm, Tm, dh);

                scatter_head_add(dqh, b, head, Tm, d, dh, dq);
                scatter_head_add(dkh, b, head, Tm, d, dh, dk);
                scatter_head_add(dvh, b, head, Tm, d, dh, dv);
            }
        }

        Tensor<T> dh_in = dres1;  // residual branch
        ops::gemm_tn(lc.h_in.ptr(), dq.ptr(), grads.at(p + "attn.wq").ptr(), d, rows,
                     d, /*accumulate=*/true);
        ops::accumulate_bias_grad(dq.ptr(), grads.at(p + "attn.bq").ptr(), rows, d);
        ops::gemm_nt(dq.ptr(), params.at(p + "attn.wq").ptr(), dh_in.ptr(), rows, d,
                     d, /*accumulate=*/true);
        ops::gemm_tn(lc.h_in.ptr(), dk.ptr(), grads.at(p + "attn.wk").ptr(), d, rows,
                     d, /*accumulate=*/true);
        ops::accumulate_bias_grad(dk.ptr(), grads.at(p + "attn.bk").ptr(), rows, d);
        ops::gemm_nt(dk.ptr(), params.at(p + "attn.wk").ptr(), dh_in.ptr(), rows, d,
                     d, /*accumulate=*/true);
        ops::gemm_tn(lc.h_in.ptr(), dv.ptr(), grads.at(p + "attn.wv").ptr(), d, rows,
                     d, /*accumulate=*/true);
        ops::accumulate_bias_grad(dv.ptr(), grads.at(p + "attn.bv").ptr(), rows, d);
        ops::gemm_nt(dv.ptr(), params.at(p + "attn.wv").ptr(), dh_in.ptr(), rows, d,
                     d, /*accumulate=*/true);

        dh_out = std::move(dh_in);
    }

    dropout_backward(dh_out, cache.embed_drop);
    auto& dtok = grads.at("embed.token");
    auto& dpos = grads.at("embed.pos");
    for (size_t b = 0; b < B; ++b) {
        for (size_t t = 0; t < Tm; ++t) {
            auto id = static_cast<size_t>(batch.ids[b * Tm + t]);
            const T* src = dh_out.ptr() + (b * Tm + t) * d;
            T* td = dtok.ptr() + id * d;
            T* pd = dpos.ptr() + t * d;
            for (size_t j = 0; j < d; ++j) {
                td[j] += src[j];
                pd[j] += src[j];
            }
        }
    }
}

template <typename T>
ForwardResult<T> forward(const ParameterStore<T>& params, const ModelConfig& cfg,
                         const Batch& batch, RunMode mode, util::Rng* dropout_rng,
                         ForwardTrace<T>* trace) {
    ForwardResult<T> result;
    result.hidden = encoder_forward(params, cfg, batch, mode, dropout_rng,
                                    static_cast<EncoderCache<T>*>(nullptr), trace);
    ClassifierCache<T> cc;
    classifier_forward(params, cfg, batch, result.hidden, cc, result.logits,
                       result.probs);
    result.pooled = std::move(cc.pooled);
    return result;
}

template <typename T>
T cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels) {
    size_t B = logits.shape.at(0);
    size_t C = logits.shape.at(1);
    if (labels.size() != B) throw ShapeMismatch("labels size != batch size");
    T total{0};
    for (size_t b = 0; b < B; ++b) {
        int label = labels[b];
        if (label < 0 || static_cast<size_t>(label) >= C)
            throw BadLabel("label out of range: " + std::to_string(label));
        const T* row = logits.ptr() + b * C;
        T max_v = row[0];
        for (size_t c = 1; c < C; ++c) max_v = std::max(max_v, row[c]);
        T lse{0};
        for (size_t c = 0; c < C; ++c) lse += std::exp(row[c] - max_v);
        lse = max_v + std::log(lse);
        total += lse - row[static_cast<size_t>(label)];
    }
    return total / static_cast<T>(B);
}

template <typename T>
BackwardResult<T> backward(const ParameterStore<T>& params, const ModelConfig& cfg,
                           const Batch& batch, const std::vector<int>& labels,
                           RunMode mode, util::Rng* dropout_rng) {
    size_t B = batch.B;
    auto C = static_cast<size_t>(cfg.n_classes);

    EncoderCache<T> cache;
    EncoderCache<T>* cache_ptr = cfg.fine_tune_encoder ? &cache : nullptr;
    Tensor<T> hidden = encoder_forward(params, cfg, batch, mode, dropout_rng,
                                       cache_ptr, static_cast<ForwardTrace<T>*>(nullptr));
    ClassifierCache<T> cc;
    BackwardResult<T> result;
    result.grads = ParameterStore<T>::zeros_like(params);
    classifier_forward(params, cfg, batch, hidden, cc, result.logits, result.probs);
    result.loss = cross_entropy(result.logits, labels);

    // d(mean loss)/dlogits = (softmax - onehot) / B
    Tensor<T> dlogits({B, C});
    for (size_t b = 0; b < B; ++b)
        for (size_t c = 0; c < C; ++c) {
            T onehot = static_cast<size_t>(labels[b]) == c ? T{1} : T{0};
            dlogits[b * C + c] = (result.probs[b * C + c] - onehot) / static_cast<T>(B);
        }

    Tensor<T> dhidden = classifier_backward(params, cfg, batch, hidden, cc, dlogits,
                                            result.grads);
    if (cfg.fine_tune_encoder)
        encoder_backward(params, cfg, batch, cache, dhidden, result.grads);
    return result;
}

#define PERMDET_INSTANTIATE_MODEL(T)                                               \
    template Tensor<T> encoder_forward<T>(const ParameterStore<T>&,                \
                                          const ModelConfig&, const Batch&,        \
                                          RunMode, util::Rng*, EncoderCache<T>*,   \
                                          ForwardTrace<T>*);                       \
    template void encoder_backward<T>(const ParameterStore<T>&, const ModelConfig&,\
                                      const Batch&, const EncoderCache<T>&,        \
                                      const Tensor<T>&, ParameterStore<T>&);       \
    template ForwardResult<T> forward<T>(const ParameterStore<T>&,                 \
                                         const ModelConfig&, const Batch&, RunMode,\
                                         util::Rng*, ForwardTrace<T>*);            \
    template T cross_entropy<T>(const Tensor<T>&, const std::vector<int>&);        \
    template BackwardResult<T> backward<T>(const ParameterStore<T>&,               \
                                           const ModelConfig&, const Batch&,       \
                                           const std::vector<int>&, RunMode,       \
                                           util::Rng*);
PERMDET_INSTANTIATE_MODEL(float)
PERMDET_INSTANTIATE_MODEL(double)
#undef PERMDET_INSTANTIATE_MODEL

}  // namespace permdet::nn
