#include "negattn/unet.hpp"

#include <cmath>

#include "negattn/kernels.hpp"

namespace negattn {

void ResBlock::init(int64_t cin_in, int64_t cout_in, int64_t temb_dim, int64_t groups, Rng& rng) {
    cin = cin_in;
    cout = cout_in;
    gn1.init(cin, groups);
    gn2.init(cout, groups);
    conv1.init(cin, cout, rng);
    conv2.init(cout, cout, rng);
    temb_proj.init(temb_dim, cout, rng);
    has_skip = cin != cout;
    if (has_skip) skip.init(cin, cout, rng);
}

void ResBlock::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    gn1.collect(prefix + ".gn1", out);
    gn2.collect(prefix + ".gn2", out);
    conv1.collect(prefix + ".conv1", out);
    conv2.collect(prefix + ".conv2", out);
    temb_proj.collect(prefix + ".temb", out);
    if (has_skip) skip.collect(prefix + ".skip", out);
}

namespace {
void add_channel_bias(Tensor& x, const Tensor& per_channel) {
    const int64_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
    for (int64_t ch = 0; ch < c; ++ch) {
        const double v = per_channel[ch];
        for (int64_t p = 0; p < hw; ++p) x[ch * hw + p] += v;
    }
}
}  // namespace

Tensor ResBlock::forward(const Tensor& x, const Tensor& temb) const {
    Tensor h = conv1.forward(silu(gn1.forward(x)));
    Tensor tproj = temb_proj.forward(silu(temb));  // [1, cout]
    add_channel_bias(h, tproj.reshaped({cout}));
    Tensor y = conv2.forward(silu(gn2.forward(h)));
    if (has_skip) {
        add_inplace(y, skip.forward(x));
    } else {
        add_inplace(y, x);
    }
    return y;
}

Tensor ResBlock::forward_train(const Tensor& x, const Tensor& temb, Cache& c) {
    c.x = x;
    c.h = x.dim(1);
    c.w = x.dim(2);
    c.temb = temb;
    c.gn1_out = gn1.forward_train(x, c.gn1c);
    Tensor h = conv1.forward_train(silu(c.gn1_out), c.cols1);
    c.temb_silu = silu(temb);
    Tensor tproj = temb_proj.forward(c.temb_silu);
    add_channel_bias(h, tproj.reshaped({cout}));
    c.gn2_out = gn2.forward_train(h, c.gn2c);
    Tensor y = conv2.forward_train(silu(c.gn2_out), c.cols2);
    if (has_skip) {
        add_inplace(y, skip.forward(x));
    } else {
        add_inplace(y, x);
    }
    return y;
}

Tensor ResBlock::backward(const Cache& c, const Tensor& dy, Tensor& dtemb) {
    Tensor ds2 = conv2.backward(c.cols2, dy, c.h, c.w);
    Tensor dg2 = silu_backward(c.gn2_out, ds2);
    Tensor dh = gn2.backward(c.gn2c, dg2);

    // temb projection: per-channel bias broadcast over the spatial extent
    const int64_t hw = c.h * c.w;
    Tensor dproj({1, cout});
    for (int64_t ch = 0; ch < cout; ++ch) {
        double s = 0.0;
        for (int64_t p = 0; p < hw; ++p) s += dh[ch * hw + p];
        dproj.at(0, ch) = s;
    }
    Tensor dtemb_silu = temb_proj.backward(c.temb_silu, dproj);
    add_inplace(dtemb, silu_backward(c.temb, dtemb_silu));

    Tensor ds1 = conv1.backward(c.cols1, dh, c.h, c.w);
    Tensor dg1 = silu_backward(c.gn1_out, ds1);
    Tensor dx = gn1.backward(c.gn1c, dg1);
    if (has_skip) {
        add_inplace(dx, skip.backward(c.x, dy));
    } else {
        add_inplace(dx, dy);
    }
    return dx;
}

void AttnBlock::init(int64_t d_model, int64_t d_cond, int64_t heads, int64_t groups, Rng& rng) {
    gn.init(d_model, groups);
    w.heads = heads;
    auto mat = [&rng](int64_t rows, int64_t cols) {
        Tensor t = gaussian(rng, {rows, cols});
        const double s = 1.0 / std::sqrt(static_cast<double>(rows));
        for (int64_t i = 0; i < t.size(); ++i) t[i] *= s;
        return t;
    };
    w.w_q = mat(d_model, d_model);
    w.w_k = mat(d_cond, d_model);
    w.w_v = mat(d_cond, d_model);
    w.w_out = mat(d_model, d_model);
    g.g_q = Tensor({d_model, d_model});
    g.g_k = Tensor({d_cond, d_model});
    g.g_v = Tensor({d_cond, d_model});
    g.g_out = Tensor({d_model, d_model});
    w.validate();
}

void AttnBlock::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    gn.collect(prefix + ".gn", out);
    out.push_back({prefix + ".wq", &w.w_q, &g.g_q});
    out.push_back({prefix + ".wk", &w.w_k, &g.g_k});
    out.push_back({prefix + ".wv", &w.w_v, &g.g_v});
    out.push_back({prefix + ".wo", &w.w_out, &g.g_out});
}

Tensor AttnBlock::forward(const Tensor& x, const Tensor& cond_main, const Tensor* cond_subject,
                          const AttentionConfig& cfg, MaskState* state) const {
    const int64_t c = x.dim(0), h = x.dim(1), wd = x.dim(2);
    Tensor f = chw_to_tokens(gn.forward(x));
    AttentionResult res;
    if (cond_subject != nullptr && cfg.negative_attention_enabled) {
        Tensor mask = (cfg.background_masking_enabled && state != nullptr)
                          ? carried_mask_for(*state, h, wd)
                          : Tensor::ones({h * wd});
        res = negative_attention(f, cond_main, *cond_subject, w, mask, cfg);
    } else {
        res = cross_attention(f, cond_main, w);
    }
    if (cfg.record_maps && state != nullptr) {
        if (state->use_aux_branch) {
            if (res.probs_aux.size() > 0) {
                record(res.probs_aux, state->identifier_token_index, *state);
            }
        } else {
            record(res.probs, state->identifier_token_index, *state);
        }
    }
    Tensor y = x;
    add_inplace(y, tokens_to_chw(res.z, c, h, wd));
    return y;
}

Tensor AttnBlock::forward_train(const Tensor& x, const Tensor& cond, Cache& cache) {
    cache.c = x.dim(0);
    cache.h = x.dim(1);
    cache.wd = x.dim(2);
    Tensor f = chw_to_tokens(gn.forward_train(x, cache.gnc));
    Tensor z = cross_attention_train(f, cond, w, cache.attn);
    Tensor y = x;
    add_inplace(y, tokens_to_chw(z, cache.c, cache.h, cache.wd));
    return y;
}

Tensor AttnBlock::backward(const Cache& cache, const Tensor& dy, Tensor& dcond) {
    Tensor dz = chw_to_tokens(dy);
    Tensor df, dc;
    cross_attention_backward(cache.attn, w, dz, g, df, dc);
    add_inplace(dcond, dc);
    Tensor dx = gn.backward(cache.gnc, tokens_to_chw(df, cache.c, cache.h, cache.wd));
    add_inplace(dx, dy);
    return dx;
}

void UNet::init(const UNetConfig& cfg_in, Rng& rng) {
    cfg = cfg_in;
    temb_l1.init(cfg.temb_dim, cfg.temb_dim, rng);
    temb_l2.init(cfg.temb_dim, cfg.temb_dim, rng);
    conv_in.init(cfg.in_channels, cfg.c1, rng);
    rb_down.init(cfg.c1, cfg.c1, cfg.temb_dim, cfg.gn_groups, rng);
    attn_d16.init(cfg.c1, cfg.d_cond, cfg.heads, cfg.gn_groups, rng);
    rb_mid_lo.init(cfg.c1, cfg.c2, cfg.temb_dim, cfg.gn_groups, rng);
    attn_8.init(cfg.c2, cfg.d_cond, cfg.heads, cfg.gn_groups, rng);
    rb_mid.init(cfg.c2, cfg.c2, cfg.temb_dim, cfg.gn_groups, rng);
    up_proj.init(cfg.c2, cfg.c1, rng);
    rb_up.init(cfg.c1, cfg.c1, cfg.temb_dim, cfg.gn_groups, rng);
    attn_u16.init(cfg.c1, cfg.d_cond, cfg.heads, cfg.gn_groups, rng);
    gn_out.init(cfg.c1, cfg.gn_groups);
    conv_out.init(cfg.c1, cfg.in_channels, rng);
    // damped output head: near-zero initial prediction without killing the
    // gradient or making the untrained net constant
    for (int64_t i = 0; i < conv_out.wm.size(); ++i) conv_out.wm[i] *= 0.05;
}

void UNet::collect(std::vector<ParamRef>& out) {
    temb_l1.collect("unet.temb1", out);
    temb_l2.collect("unet.temb2", out);
    conv_in.collect("unet.conv_in", out);
    rb_down.collect("unet.rb_down", out);
    attn_d16.collect("unet.attn_d16", out);
    rb_mid_lo.collect("unet.rb_mid_lo", out);
    attn_8.collect("unet.attn_8", out);
    rb_mid.collect("unet.rb_mid", out);
    up_proj.collect("unet.up_proj", out);
    rb_up.collect("unet.rb_up", out);
    attn_u16.collect("unet.attn_u16", out);
    gn_out.collect("unet.gn_out", out);
    conv_out.collect("unet.conv_out", out);
}

Tensor UNet::time_features(int64_t t) const {
    Tensor s = timestep_embedding(t, cfg.temb_dim).reshaped({1, cfg.temb_dim});
    return temb_l2.forward(silu(temb_l1.forward(s)));
}

Tensor UNet::denoise(const Tensor& z_t, int64_t t, const Tensor& cond_main,
                     const Tensor* cond_subject, const AttentionConfig& attn_cfg,
                     MaskState* state) const {
    if (z_t.rank() != 3 || z_t.dim(0) != cfg.in_channels || z_t.dim(1) != cfg.latent_h ||
        z_t.dim(2) != cfg.latent_w) {
        throw DimensionError("denoise: latent " + shape_str(z_t.shape()) + " does not match config");
    }
    Tensor temb = time_features(t);
    Tensor h = conv_in.forward(z_t);
    h = rb_down.forward(h, temb);
    Tensor h16 = attn_d16.forward(h, cond_main, cond_subject, attn_cfg, state);
    h = avg_pool2(h16);
    h = rb_mid_lo.forward(h, temb);
    h = attn_8.forward(h, cond_main, cond_subject, attn_cfg, state);
    h = rb_mid.forward(h, temb);
    h = up_proj.forward(upsample_nearest2(h));
    add_inplace(h, h16);
    h = rb_up.forward(h, temb);
    h = attn_u16.forward(h, cond_main, cond_subject, attn_cfg, state);
    return conv_out.forward(silu(gn_out.forward(h)));
}

Tensor UNet::forward_train(const Tensor& z_t, int64_t t, const Tensor& cond, Cache& c) {
    c.temb_sin = timestep_embedding(t, cfg.temb_dim).reshaped({1, cfg.temb_dim});
    c.temb_h1 = temb_l1.forward(c.temb_sin);
    Tensor temb = temb_l2.forward(silu(c.temb_h1));
    c.temb = temb;

    Tensor h = conv_in.forward_train(z_t, c.cols_in);
    h = rb_down.forward_train(h, temb, c.rb_down_c);
    c.h_attn16 = attn_d16.forward_train(h, cond, c.a16d_c);
    h = avg_pool2(c.h_attn16);
    h = rb_mid_lo.forward_train(h, temb, c.rb_mid_lo_c);
    h = attn_8.forward_train(h, cond, c.a8_c);
    h = rb_mid.forward_train(h, temb, c.rb_mid_c);
    c.h_up_in = upsample_nearest2(h);
    h = up_proj.forward(c.h_up_in);
    add_inplace(h, c.h_attn16);
    h = rb_up.forward_train(h, temb, c.rb_up_c);
    c.h_before_out = attn_u16.forward_train(h, cond, c.a16u_c);
    c.gn_out_pre_silu = gn_out.forward_train(c.h_before_out, c.gn_out_c);
    return conv_out.forward_train(silu(c.gn_out_pre_silu), c.cols_out);
}

Tensor UNet::backward(const Cache& c, const Tensor& deps) {
    const int64_t h16 = cfg.latent_h, w16 = cfg.latent_w;
    Tensor dcond({0, 0});
    bool dcond_set = false;
    auto accumulate_dcond = [&](AttnBlock& blk, const AttnBlock::Cache& bc, const Tensor& dy) {
        if (!dcond_set) {
            dcond = Tensor({bc.attn.cond.dim(0), bc.attn.cond.dim(1)});
            dcond_set = true;
        }
        return blk.backward(bc, dy, dcond);
    };
    Tensor dtemb({1, cfg.temb_dim});

    Tensor d = conv_out.backward(c.cols_out, deps, h16, w16);
    d = silu_backward(c.gn_out_pre_silu, d);
    d = gn_out.backward(c.gn_out_c, d);
    d = accumulate_dcond(attn_u16, c.a16u_c, d);
    d = rb_up.backward(c.rb_up_c, d, dtemb);

    Tensor dskip = d;  // into h_attn16
    Tensor dup = up_proj.backward(c.h_up_in, d);
    Tensor dlow = upsample_nearest2_backward(dup);
    dlow = rb_mid.backward(c.rb_mid_c, dlow, dtemb);
    dlow = accumulate_dcond(attn_8, c.a8_c, dlow);
    dlow = rb_mid_lo.backward(c.rb_mid_lo_c, dlow, dtemb);
    Tensor d16 = avg_pool2_backward(dlow, h16, w16);
    add_inplace(d16, dskip);
    d16 = accumulate_dcond(attn_d16, c.a16d_c, d16);
    d16 = rb_down.backward(c.rb_down_c, d16, dtemb);
    conv_in.backward(c.cols_in, d16, h16, w16);

    Tensor dtemb_silu = temb_l2.backward(silu(c.temb_h1), dtemb);
    Tensor dh1 = silu_backward(c.temb_h1, dtemb_silu);
    temb_l1.backward(c.temb_sin, dh1);
    return dcond;
}

}  // namespace negattn
