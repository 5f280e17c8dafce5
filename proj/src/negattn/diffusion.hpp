#ifndef NEGATTN_DIFFUSION_HPP
#define NEGATTN_DIFFUSION_HPP

#include <functional>
#include <vector>

#include "negattn/attention.hpp"
#include "negattn/mask.hpp"
#include "negattn/rng.hpp"
#include "negattn/schedule.hpp"
#include "negattn/tensor.hpp"

namespace negattn {

struct GuidanceConfig {
    double guidance_scale = 7.5;
    int64_t unconditional_token = 0;  // reserved null-prompt token id
};

// z_t = sqrt(alpha_bar_t) z_0 + sqrt(1 - alpha_bar_t) eps
Tensor forward_process(const Tensor& z0, int64_t t, const Tensor& eps, const NoiseSchedule& sched);

using EpsModel = std::function<Tensor(const Tensor& z_t, int64_t t, const Tensor& cond)>;

// Mean over elements of |eps - model(z_t, t, cond)|^2.
double training_loss(const EpsModel& model, const Tensor& z0, int64_t t, const Tensor& eps,
                     const Tensor& cond, const NoiseSchedule& sched);

// One deterministic DDIM update from t to t_prev (eta = 0); eta > 0 adds the
// stochastic term and requires `noise`.
Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, int64_t t, int64_t t_prev,
                 const NoiseSchedule& sched, double eta = 0.0, const Tensor* noise = nullptr);

// What the sampler needs from a denoiser; the toy U-Net implements this.
class GuidedDenoiser {
public:
    virtual ~GuidedDenoiser() = default;
    virtual Tensor denoise(const Tensor& z_t, int64_t t, const Tensor& cond_main,
                           const Tensor* cond_subject, const AttentionConfig& cfg,
                           MaskState* mask_state) const = 0;
    virtual std::vector<int64_t> latent_shape() const = 0;
    virtual Tensor unconditional_cond() const = 0;
};

struct SampleOptions {
    int64_t num_steps = 50;           // DDIM steps
    int64_t mask_h = 16, mask_w = 16; // base mask resolution
    int64_t identifier_index = 0;     // identifier-token position in the main prompt
    bool identifier_in_aux = false;   // identifier absent from the main prompt
    double eta = 0.0;
    // Static thresholding: clamp the per-step z0 prediction to the data
    // range. Off by default (pure DDIM composition); the image pipeline
    // enables it to keep guided trajectories in range.
    bool clamp_z0 = false;
    double clamp_limit = 1.0;
    // When set, receives the background mask each step consumed (step order
    // T -> 1), for diagnostics / PGM dumps.
    std::vector<std::pair<int64_t, Tensor>>* mask_log = nullptr;
};

// Full reverse trajectory from z_T ~ N(0, I). Per step: conditional pass with
// negative attention and map recording, unconditional pass (skipped exactly
// when guidance_scale == 1), guidance combine, DDIM update, mask finalize
// (carry scheme).
Tensor sample(const GuidedDenoiser& model, const Tensor& cond_main, const Tensor* cond_subject,
              const NoiseSchedule& sched, const GuidanceConfig& guidance,
              const AttentionConfig& attn_cfg, Rng& rng, const SampleOptions& opts);

}  // namespace negattn

#endif
