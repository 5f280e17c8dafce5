#ifndef NEGATTN_MODEL_HPP
#define NEGATTN_MODEL_HPP

#include "negattn/checkpoint.hpp"
#include "negattn/diffusion.hpp"
#include "negattn/text_encoder.hpp"
#include "negattn/unet.hpp"

namespace negattn {

struct ToyModelConfig {
    UNetConfig unet;
    int64_t t_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int64_t max_len = 12;
};

// The full denoiser: vocabulary, text encoder, U-Net and noise schedule.
// Value-semantic; sampling only touches const members, so one instance can
// serve concurrent sweep cells.
class ToyModel : public GuidedDenoiser {
public:
    ToyModelConfig cfg;
    Vocabulary vocab;
    TextEncoder text;
    UNet unet;
    NoiseSchedule sched;

    static ToyModel create(const ToyModelConfig& cfg, uint64_t seed);

    Tensor encode_prompt(const std::vector<int64_t>& tokens) const { return text.encode(tokens); }
    Tensor encode_prompt(const std::string& prompt_text) const {
        return text.encode(vocab.tokenize(prompt_text));
    }

    Tensor denoise(const Tensor& z_t, int64_t t, const Tensor& cond_main,
                   const Tensor* cond_subject, const AttentionConfig& attn_cfg,
                   MaskState* state) const override {
        return unet.denoise(z_t, t, cond_main, cond_subject, attn_cfg, state);
    }
    std::vector<int64_t> latent_shape() const override {
        return {cfg.unet.in_channels, cfg.unet.latent_h, cfg.unet.latent_w};
    }
    Tensor unconditional_cond() const override { return text.encode({}); }

    std::vector<ParamRef> params();
    void zero_grads();

    Checkpoint to_checkpoint(nlohmann::json train_meta) const;
    static ToyModel from_checkpoint(const Checkpoint& ckpt);
};

}  // namespace negattn

#endif
