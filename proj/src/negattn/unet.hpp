#ifndef NEGATTN_UNET_HPP
#define NEGATTN_UNET_HPP

#include <optional>

#include "negattn/attention.hpp"
#include "negattn/layers.hpp"
#include "negattn/mask.hpp"

namespace negattn {

struct UNetConfig {
    int64_t in_channels = 3;
    int64_t c1 = 64;  // width at 16x16 (d_model of the level-1 attention)
    int64_t c2 = 96;  // width at 8x8
    int64_t heads = 4;
    int64_t d_cond = 32;
    int64_t temb_dim = 64;
    int64_t latent_h = 16, latent_w = 16;
    int64_t gn_groups = 8;
};

// GN -> SiLU -> conv -> +temb -> GN -> SiLU -> conv, residual.
struct ResBlock {
    GroupNorm gn1, gn2;
    Conv3x3 conv1, conv2;
    Linear temb_proj;
    Conv1x1 skip;  // only when cin != cout
    bool has_skip = false;
    int64_t cin = 0, cout = 0;

    void init(int64_t cin_in, int64_t cout_in, int64_t temb_dim, int64_t groups, Rng& rng);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    Tensor forward(const Tensor& x, const Tensor& temb) const;

    struct Cache {
        Tensor x;
        GroupNormCache gn1c, gn2c;
        Tensor gn1_out, gn2_out;
        Tensor cols1, cols2;
        Tensor temb;           // [1, temb_dim] pre-silu
        Tensor temb_silu;      // [1, temb_dim]
        int64_t h = 0, w = 0;
    };
    Tensor forward_train(const Tensor& x, const Tensor& temb, Cache& c);
    // Returns dx; accumulates parameter grads and dtemb (shape [1, temb_dim]).
    Tensor backward(const Cache& c, const Tensor& dy, Tensor& dtemb);
};

// x + attention over the normalized token view of x.
struct AttnBlock {
    GroupNorm gn;
    ProjectionWeights w;
    ProjectionGrads g;

    void init(int64_t d_model, int64_t d_cond, int64_t heads, int64_t groups, Rng& rng);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    // Inference path: negative attention when cfg enables it and a subject
    // conditioning is present; the spatial mask comes from the carried state
    // (all-ones when masking is disabled or no state is supplied). Records
    // main-branch probabilities into the state when cfg.record_maps.
    Tensor forward(const Tensor& x, const Tensor& cond_main, const Tensor* cond_subject,
                   const AttentionConfig& cfg, MaskState* state) const;

    struct Cache {
        GroupNormCache gnc;
        AttentionCache attn;
        int64_t c = 0, h = 0, wd = 0;
    };
    Tensor forward_train(const Tensor& x, const Tensor& cond, Cache& cache);
    // Returns dx; accumulates projection grads and dcond.
    Tensor backward(const Cache& cache, const Tensor& dy, Tensor& dcond);
};

// Two-level conditional denoiser: 16x16 (attention before the downsample and
// after the skip join) and 8x8 (one attention block); the 16x16 blocks are
// the base-resolution map source for the mask pipeline.
struct UNet {
    UNetConfig cfg;
    Linear temb_l1, temb_l2;
    Conv3x3 conv_in;
    ResBlock rb_down, rb_mid_lo, rb_mid, rb_up;
    AttnBlock attn_d16, attn_8, attn_u16;
    Conv1x1 up_proj;
    GroupNorm gn_out;
    Conv3x3 conv_out;

    void init(const UNetConfig& cfg_in, Rng& rng);
    void collect(std::vector<ParamRef>& out);

    Tensor time_features(int64_t t) const;  // [1, temb_dim]

    Tensor denoise(const Tensor& z_t, int64_t t, const Tensor& cond_main,
                   const Tensor* cond_subject, const AttentionConfig& attn_cfg,
                   MaskState* state) const;

    struct Cache {
        Tensor temb_sin, temb_h1, temb;
        Tensor cols_in;
        ResBlock::Cache rb_down_c, rb_mid_lo_c, rb_mid_c, rb_up_c;
        AttnBlock::Cache a16d_c, a8_c, a16u_c;
        Tensor h_attn16;   // skip source
        Tensor h_up_in;    // upsampled pre-1x1
        GroupNormCache gn_out_c;
        Tensor gn_out_pre_silu;
        Tensor cols_out;
        Tensor h_before_out;
    };
    Tensor forward_train(const Tensor& z_t, int64_t t, const Tensor& cond, Cache& c);
    // Returns dcond (for the text encoder); parameter grads accumulate.
    Tensor backward(const Cache& c, const Tensor& deps);
};

}  // namespace negattn

#endif
