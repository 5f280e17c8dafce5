#ifndef NEGATTN_ATTENTION_HPP
#define NEGATTN_ATTENTION_HPP

#include "negattn/tensor.hpp"

namespace negattn {

// One set of projections serves both attention branches: the main branch
// projects the main-prompt conditioning, the auxiliary branch projects the
// subject-prompt conditioning with the same w_k / w_v.
struct ProjectionWeights {
    Tensor w_q;    // [d_model, d_k*H]
    Tensor w_k;    // [d_cond, d_k*H]
    Tensor w_v;    // [d_cond, d_v*H]
    Tensor w_out;  // [d_v*H, d_model]
    int64_t heads = 1;

    int64_t d_model() const { return w_q.dim(0); }
    int64_t d_cond() const { return w_k.dim(0); }
    int64_t d_k() const { return w_q.dim(1) / heads; }
    int64_t d_v() const { return w_v.dim(1) / heads; }
    void validate() const;
};

struct AttentionConfig {
    double lambda = 0.0;                    // suppression scale, >= 0
    bool negative_attention_enabled = true;
    bool background_masking_enabled = true;
    bool record_maps = true;
    void validate() const;
};

struct AttentionResult {
    Tensor z;          // [N, d_model]
    Tensor probs;      // [H, N, L] main-branch attention probabilities
    Tensor probs_aux;  // [H, N, L_s] auxiliary-branch probabilities; empty
                       // unless the auxiliary branch ran (identifier-map
                       // fallback when the main prompt lacks the identifier)
};

// Per-head scaled dot-product attention, heads concatenated then
// output-projected. probs are returned for mask extraction.
AttentionResult cross_attention(const Tensor& f, const Tensor& cond, const ProjectionWeights& w);

// z = attn(f, cond_main) - lambda * diag(mask) * attn(f, cond_subject).
// The mask scales the auxiliary per-head outputs (rows = spatial tokens)
// before the shared output projection. lambda == 0 or a disabled flag takes
// the exact baseline path.
AttentionResult negative_attention(const Tensor& f, const Tensor& cond_main,
                                   const Tensor& cond_subject, const ProjectionWeights& w,
                                   const Tensor& mask, const AttentionConfig& cfg);

// Negative attention without the spatial mask (mask == all-ones).
Tensor disable_mask_variant(const Tensor& f, const Tensor& cond_main, const Tensor& cond_subject,
                            const ProjectionWeights& w, const AttentionConfig& cfg);

// -- training support ------------------------------------------------------

struct AttentionCache {
    Tensor f, cond;
    Tensor q, k, v;       // full projections [*, d_k*H]
    Tensor probs;         // [H, N, L]
    Tensor concat;        // [N, d_v*H]
};

struct ProjectionGrads {
    Tensor g_q, g_k, g_v, g_out;
};

Tensor cross_attention_train(const Tensor& f, const Tensor& cond, const ProjectionWeights& w,
                             AttentionCache& cache);

// Returns df and dcond; accumulates weight gradients into g.
void cross_attention_backward(const AttentionCache& cache, const ProjectionWeights& w,
                              const Tensor& dz, ProjectionGrads& g, Tensor& df, Tensor& dcond);

}  // namespace negattn

#endif
