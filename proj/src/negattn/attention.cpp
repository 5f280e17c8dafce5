#include "negattn/attention.hpp"

#include <cmath>

#include "negattn/kernels.hpp"

namespace negattn {

void ProjectionWeights::validate() const {
    if (heads < 1) throw DimensionError("attention: head count must be >= 1");
    if (w_q.rank() != 2 || w_k.rank() != 2 || w_v.rank() != 2 || w_out.rank() != 2) {
        throw DimensionError("attention: projection weights must be matrices");
    }
    if (w_q.dim(1) % heads != 0 || w_v.dim(1) % heads != 0) {
        throw DimensionError("attention: projected width not divisible by heads");
    }
    if (w_q.dim(1) != w_k.dim(1)) {
        throw DimensionError("attention: w_q/" + shape_str(w_q.shape()) + " and w_k/" +
                             shape_str(w_k.shape()) + " disagree on d_k*H");
    }
    if (d_k() == 0 || d_k() != d_v()) {
        throw DimensionError("attention: d_k must equal d_v and be nonzero");
    }
    if (w_out.dim(0) != w_v.dim(1) || w_out.dim(1) != w_q.dim(0)) {
        throw DimensionError("attention: w_out shape " + shape_str(w_out.shape()) +
                             " does not match d_v*H x d_model");
    }
}

void AttentionConfig::validate() const {
    if (lambda < 0.0) throw ConfigError("attention: lambda must be >= 0, got " + std::to_string(lambda));
}

namespace {

Tensor head_slice(const Tensor& full, int64_t h, int64_t dh) {
    const int64_t rows = full.dim(0);
    Tensor out({rows, dh});
    for (int64_t i = 0; i < rows; ++i) {
        for (int64_t j = 0; j < dh; ++j) out.at(i, j) = full.at(i, h * dh + j);
    }
    return out;
}

void head_unslice(Tensor& full, const Tensor& part, int64_t h, int64_t dh) {
    const int64_t rows = full.dim(0);
    for (int64_t i = 0; i < rows; ++i) {
        for (int64_t j = 0; j < dh; ++j) full.at(i, h * dh + j) = part.at(i, j);
    }
}

// scores = (Q_h K_h^T) / sqrt(d_k), then row softmax
Tensor head_probs(const Tensor& q_h, const Tensor& k_h, int64_t dk) {
    Tensor scores = matmul(q_h, transpose(k_h));
    const double inv = 1.0 / std::sqrt(static_cast<double>(dk));
    for (int64_t i = 0; i < scores.size(); ++i) scores[i] *= inv;
    return softmax_rows(scores);
}

struct BranchOut {
    Tensor concat;  // [N, d_v*H]
    Tensor probs;   // [H, N, L]
    Tensor q, k, v;
};

BranchOut attention_branch(const Tensor& f, const Tensor& cond, const ProjectionWeights& w) {
    const int64_t n = f.dim(0), l = cond.dim(0);
    const int64_t dk = w.d_k(), dv = w.d_v(), heads = w.heads;
    BranchOut out;
    out.q = matmul(f, w.w_q);
    out.k = matmul(cond, w.w_k);
    out.v = matmul(cond, w.w_v);
    out.concat = Tensor({n, dv * heads});
    out.probs = Tensor({heads, n, l});
    for (int64_t h = 0; h < heads; ++h) {
        Tensor p = head_probs(head_slice(out.q, h, dk), head_slice(out.k, h, dk), dk);
        Tensor o = matmul(p, head_slice(out.v, h, dv));
        head_unslice(out.concat, o, h, dv);
        std::copy(p.data(), p.data() + n * l, out.probs.data() + h * n * l);
    }
    return out;
}

void check_inputs(const Tensor& f, const Tensor& cond, const ProjectionWeights& w) {
    w.validate();
    if (f.rank() != 2 || f.dim(1) != w.d_model()) {
        throw DimensionError("attention: f shape " + shape_str(f.shape()) +
                             " does not match d_model " + std::to_string(w.d_model()));
    }
    if (cond.rank() != 2 || cond.dim(1) != w.d_cond()) {
        throw DimensionError("attention: cond shape " + shape_str(cond.shape()) +
                             " does not match d_cond " + std::to_string(w.d_cond()));
    }
}

}  // namespace

AttentionResult cross_attention(const Tensor& f, const Tensor& cond, const ProjectionWeights& w) {
    check_inputs(f, cond, w);
    BranchOut main = attention_branch(f, cond, w);
    return {matmul(main.concat, w.w_out), std::move(main.probs)};
}

AttentionResult negative_attention(const Tensor& f, const Tensor& cond_main,
                                   const Tensor& cond_subject, const ProjectionWeights& w,
                                   const Tensor& mask, const AttentionConfig& cfg) {
    cfg.validate();
    check_inputs(f, cond_main, w);
    // lambda == 0 and the disabled flag reduce to baseline attention
    // bit-exactly by taking the identical code path.
    if (!cfg.negative_attention_enabled || cfg.lambda == 0.0) {
        return cross_attention(f, cond_main, w);
    }
    check_inputs(f, cond_subject, w);
    if (mask.size() != f.dim(0)) {
        throw DimensionError("attention: mask length " + std::to_string(mask.size()) +
                             " != spatial token count " + std::to_string(f.dim(0)));
    }
    BranchOut main = attention_branch(f, cond_main, w);
    BranchOut aux = attention_branch(f, cond_subject, w);
    const int64_t n = f.dim(0), width = w.d_v() * w.heads;
    Tensor combined({n, width});
    for (int64_t i = 0; i < n; ++i) {
        const double s = cfg.lambda * mask[i];
        for (int64_t j = 0; j < width; ++j) {
            combined.at(i, j) = main.concat.at(i, j) - s * aux.concat.at(i, j);
        }
    }
    return {matmul(combined, w.w_out), std::move(main.probs), std::move(aux.probs)};
}

Tensor disable_mask_variant(const Tensor& f, const Tensor& cond_main, const Tensor& cond_subject,
                            const ProjectionWeights& w, const AttentionConfig& cfg) {
    Tensor ones = Tensor::ones({f.dim(0)});
    return negative_attention(f, cond_main, cond_subject, w, ones, cfg).z;
}

Tensor cross_attention_train(const Tensor& f, const Tensor& cond, const ProjectionWeights& w,
                             AttentionCache& cache) {
    check_inputs(f, cond, w);
    BranchOut b = attention_branch(f, cond, w);
    cache.f = f;
    cache.cond = cond;
    cache.q = b.q;
    cache.k = b.k;
    cache.v = b.v;
    cache.probs = b.probs;
    cache.concat = b.concat;
    return matmul(b.concat, w.w_out);
}

void cross_attention_backward(const AttentionCache& cache, const ProjectionWeights& w,
                              const Tensor& dz, ProjectionGrads& g, Tensor& df, Tensor& dcond) {
    const int64_t n = cache.f.dim(0), l = cache.cond.dim(0);
    const int64_t dk = w.d_k(), dv = w.d_v(), heads = w.heads;
    const double inv = 1.0 / std::sqrt(static_cast<double>(dk));

    add_inplace(g.g_out, matmul(transpose(cache.concat), dz));
    Tensor dconcat = matmul(dz, transpose(w.w_out));

    Tensor dq_full({n, dk * heads});
    Tensor dk_full({l, dk * heads});
    Tensor dv_full({l, dv * heads});
    for (int64_t h = 0; h < heads; ++h) {
        Tensor p({n, l});
        std::copy(cache.probs.data() + h * n * l, cache.probs.data() + (h + 1) * n * l, p.data());
        Tensor v_h = head_slice(cache.v, h, dv);
        Tensor q_h = head_slice(cache.q, h, dk);
        Tensor k_h = head_slice(cache.k, h, dk);
        Tensor dout_h = head_slice(dconcat, h, dv);

        Tensor dv_h = matmul(transpose(p), dout_h);
        Tensor dp = matmul(dout_h, transpose(v_h));
        // softmax backward: ds = p * (dp - rowsum(dp * p))
        Tensor ds({n, l});
        for (int64_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (int64_t j = 0; j < l; ++j) dot += dp.at(i, j) * p.at(i, j);
            for (int64_t j = 0; j < l; ++j) ds.at(i, j) = p.at(i, j) * (dp.at(i, j) - dot);
        }
        for (int64_t i = 0; i < ds.size(); ++i) ds[i] *= inv;
        Tensor dq_h = matmul(ds, k_h);
        Tensor dk_h = matmul(transpose(ds), q_h);
        head_unslice(dq_full, dq_h, h, dk);
        head_unslice(dk_full, dk_h, h, dk);
        head_unslice(dv_full, dv_h, h, dv);
    }

    add_inplace(g.g_q, matmul(transpose(cache.f), dq_full));
    add_inplace(g.g_k, matmul(transpose(cache.cond), dk_full));
    add_inplace(g.g_v, matmul(transpose(cache.cond), dv_full));

    df = matmul(dq_full, transpose(w.w_q));
    dcond = matmul(dk_full, transpose(w.w_k));
    add_inplace(dcond, matmul(dv_full, transpose(w.w_v)));
}

}  // namespace negattn
