#include "negattn/diffusion.hpp"

#include <algorithm>
#include <cmath>

namespace negattn {

Tensor forward_process(const Tensor& z0, int64_t t, const Tensor& eps, const NoiseSchedule& sched) {
    if (!z0.same_shape(eps)) {
        throw DimensionError("forward_process: z0 " + shape_str(z0.shape()) + " vs eps " +
                             shape_str(eps.shape()));
    }
    sched.check_t(t);
    const double ab = sched.alpha_bar_at(t);
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    Tensor z = z0;
    for (int64_t i = 0; i < z.size(); ++i) z[i] = a * z0[i] + b * eps[i];
    return z;
}

double training_loss(const EpsModel& model, const Tensor& z0, int64_t t, const Tensor& eps,
                     const Tensor& cond, const NoiseSchedule& sched) {
    Tensor z_t = forward_process(z0, t, eps, sched);
    Tensor pred = model(z_t, t, cond);
    if (!pred.same_shape(eps)) {
        throw DimensionError("training_loss: prediction " + shape_str(pred.shape()) +
                             " vs eps " + shape_str(eps.shape()));
    }
    double s = 0.0;
    for (int64_t i = 0; i < eps.size(); ++i) {
        const double d = eps[i] - pred[i];
        s += d * d;
    }
    return s / static_cast<double>(eps.size());
}

Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, int64_t t, int64_t t_prev,
                 const NoiseSchedule& sched, double eta, const Tensor* noise) {
    if (!(t > t_prev && t_prev >= 0)) {
        throw ScheduleError("ddim_step: need t > t_prev >= 0, got t=" + std::to_string(t) +
                            " t_prev=" + std::to_string(t_prev));
    }
    if (!z_t.same_shape(eps_hat)) {
        throw DimensionError("ddim_step: z_t " + shape_str(z_t.shape()) + " vs eps_hat " +
                             shape_str(eps_hat.shape()));
    }
    const double ab_t = sched.alpha_bar_at(t);
    if (ab_t <= 0.0) throw ScheduleError("ddim_step: alpha_bar(t) must be positive");
    const double ab_p = sched.alpha_bar_at(t_prev);

    double sigma = 0.0;
    if (eta > 0.0) {
        if (noise == nullptr) throw ConfigError("ddim_step: eta > 0 requires noise");
        sigma = eta * std::sqrt((1.0 - ab_p) / (1.0 - ab_t)) * std::sqrt(1.0 - ab_t / ab_p);
    }

    const double inv_sqrt_ab_t = 1.0 / std::sqrt(ab_t);
    const double noise_coef_t = std::sqrt(1.0 - ab_t);
    const double sqrt_ab_p = std::sqrt(ab_p);
    const double dir_coef = std::sqrt(std::max(0.0, 1.0 - ab_p - sigma * sigma));

    Tensor out = z_t;
    for (int64_t i = 0; i < out.size(); ++i) {
        const double z0_pred = (z_t[i] - noise_coef_t * eps_hat[i]) * inv_sqrt_ab_t;
        out[i] = sqrt_ab_p * z0_pred + dir_coef * eps_hat[i];
        if (sigma > 0.0) out[i] += sigma * (*noise)[i];
    }
    return out;
}

namespace {
// Evenly spaced sub-schedule: ts(k) = round(k*T/S), k = S..0; ts(S) = T,
// ts(0) = 0, strictly decreasing for S <= T.
int64_t sub_timestep(int64_t k, int64_t s, int64_t t_total) {
    return (2 * k * t_total + s) / (2 * s);
}
}  // namespace

Tensor sample(const GuidedDenoiser& model, const Tensor& cond_main, const Tensor* cond_subject,
              const NoiseSchedule& sched, const GuidanceConfig& guidance,
              const AttentionConfig& attn_cfg, Rng& rng, const SampleOptions& opts) {
    attn_cfg.validate();
    if (opts.num_steps < 1 || opts.num_steps > sched.steps) {
        throw ConfigError("sample: num_steps must be in [1, T]");
    }
    Tensor z = gaussian(rng, model.latent_shape());
    MaskState state(opts.mask_h, opts.mask_w, opts.identifier_index);
    state.use_aux_branch = opts.identifier_in_aux;
    Tensor cond_uncond = model.unconditional_cond();

    AttentionConfig uncond_cfg = attn_cfg;
    uncond_cfg.negative_attention_enabled = false;  // no subject branch without a prompt
    uncond_cfg.record_maps = false;

    for (int64_t k = opts.num_steps; k >= 1; --k) {
        const int64_t t = sub_timestep(k, opts.num_steps, sched.steps);
        const int64_t t_prev = sub_timestep(k - 1, opts.num_steps, sched.steps);
        state.begin_step();
        if (opts.mask_log) opts.mask_log->emplace_back(t, first_step_mask(state));

        Tensor eps_c = model.denoise(z, t, cond_main, cond_subject, attn_cfg, &state);
        Tensor eps;
        if (guidance.guidance_scale == 1.0) {
            // guidance_scale == 1 must recover the pure conditional
            // prediction exactly, so the combine is skipped.
            eps = std::move(eps_c);
        } else {
            Tensor eps_u = model.denoise(z, t, cond_uncond, nullptr, uncond_cfg, nullptr);
            eps = eps_u;
            const double g = guidance.guidance_scale;
            for (int64_t i = 0; i < eps.size(); ++i) eps[i] = eps_u[i] + g * (eps_c[i] - eps_u[i]);
        }

        if (opts.clamp_z0) {
            // clamp the implied z0 prediction, then express the clamp as an
            // adjusted eps so the DDIM update itself stays untouched
            const double ab_t = sched.alpha_bar_at(t);
            const double sa = std::sqrt(ab_t), sb = std::sqrt(1.0 - ab_t);
            if (sb > 0.0) {
                for (int64_t i = 0; i < eps.size(); ++i) {
                    double z0_pred = (z[i] - sb * eps[i]) / sa;
                    if (z0_pred > opts.clamp_limit || z0_pred < -opts.clamp_limit) {
                        z0_pred = std::clamp(z0_pred, -opts.clamp_limit, opts.clamp_limit);
                        eps[i] = (z[i] - sa * z0_pred) / sb;
                    }
                }
            }
        }

        Tensor noise;
        const Tensor* noise_ptr = nullptr;
        if (opts.eta > 0.0 && t_prev > 0) {
            noise = gaussian(rng, z.shape());
            noise_ptr = &noise;
        }
        z = ddim_step(z, eps, t, t_prev, sched, t_prev > 0 ? opts.eta : 0.0, noise_ptr);

        // Carry scheme: this step's recordings become the next step's mask.
        // Resolutions with no matching layer keep the previous mask.
        if (state.has_recorded()) finalize_mask(state);
    }
    return z;
}

}  // namespace negattn
