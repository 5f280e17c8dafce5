#include "negattn/model.hpp"

namespace negattn {

ToyModel ToyModel::create(const ToyModelConfig& cfg, uint64_t seed) {
    ToyModel m;
    m.cfg = cfg;
    m.vocab = Vocabulary::standard();
    Rng init_rng = Rng(seed).child(0xE17);
    m.text.init(m.vocab.size(), cfg.unet.d_cond, cfg.max_len, init_rng);
    m.unet.init(cfg.unet, init_rng);
    m.sched = NoiseSchedule::linear(cfg.t_steps, cfg.beta_start, cfg.beta_end);
    return m;
}

std::vector<ParamRef> ToyModel::params() {
    std::vector<ParamRef> out;
    text.collect("text", out);
    unet.collect(out);
    return out;
}

void ToyModel::zero_grads() {
    for (ParamRef& p : params()) {
        for (int64_t i = 0; i < p.grad->size(); ++i) (*p.grad)[i] = 0.0;
    }
}

Checkpoint ToyModel::to_checkpoint(nlohmann::json train_meta) const {
    Checkpoint ckpt;
    ToyModel& self = const_cast<ToyModel&>(*this);  // params() is logically const here
    for (const ParamRef& p : self.params()) ckpt.tensors[p.name] = *p.value;
    ckpt.metadata = {
        {"kind", "toy-latent-diffusion"},
        {"unet",
         {{"in_channels", cfg.unet.in_channels},
          {"c1", cfg.unet.c1},
          {"c2", cfg.unet.c2},
          {"heads", cfg.unet.heads},
          {"d_cond", cfg.unet.d_cond},
          {"temb_dim", cfg.unet.temb_dim},
          {"latent_h", cfg.unet.latent_h},
          {"latent_w", cfg.unet.latent_w},
          {"gn_groups", cfg.unet.gn_groups}}},
        {"schedule",
         {{"t_steps", cfg.t_steps}, {"beta_start", cfg.beta_start}, {"beta_end", cfg.beta_end}}},
        {"max_len", cfg.max_len},
        {"vocab", vocab.tokens},
        {"train", std::move(train_meta)},
    };
    return ckpt;
}

ToyModel ToyModel::from_checkpoint(const Checkpoint& ckpt) {
    const nlohmann::json& md = ckpt.metadata;
    ToyModelConfig cfg;
    const nlohmann::json& u = md.at("unet");
    cfg.unet.in_channels = u.at("in_channels").get<int64_t>();
    cfg.unet.c1 = u.at("c1").get<int64_t>();
    cfg.unet.c2 = u.at("c2").get<int64_t>();
    cfg.unet.heads = u.at("heads").get<int64_t>();
    cfg.unet.d_cond = u.at("d_cond").get<int64_t>();
    cfg.unet.temb_dim = u.at("temb_dim").get<int64_t>();
    cfg.unet.latent_h = u.at("latent_h").get<int64_t>();
    cfg.unet.latent_w = u.at("latent_w").get<int64_t>();
    cfg.unet.gn_groups = u.at("gn_groups").get<int64_t>();
    const nlohmann::json& s = md.at("schedule");
    cfg.t_steps = s.at("t_steps").get<int64_t>();
    cfg.beta_start = s.at("beta_start").get<double>();
    cfg.beta_end = s.at("beta_end").get<double>();
    cfg.max_len = md.at("max_len").get<int64_t>();

    ToyModel m = create(cfg, 0);
    m.vocab = Vocabulary::from_tokens(md.at("vocab").get<std::vector<std::string>>());
    for (ParamRef& p : m.params()) {
        const Tensor& stored = ckpt.get(p.name);
        if (!stored.same_shape(*p.value)) {
            throw IoError("checkpoint: tensor '" + p.name + "' has shape " +
                          shape_str(stored.shape()) + ", expected " + shape_str(p.value->shape()));
        }
        *p.value = stored;
    }
    return m;
}

}  // namespace negattn
