#include "negattn/train.hpp"

#include <cmath>

#include "negattn/image_io.hpp"

namespace negattn {

void Adam::init(const std::vector<ParamRef>& params, const AdamConfig& cfg_in) {
    cfg = cfg_in;
    t = 0;
    m.clear();
    v.clear();
    for (const ParamRef& p : params) {
        m.emplace_back(p.value->shape());
        v.emplace_back(p.value->shape());
    }
}

void Adam::step(std::vector<ParamRef>& params) {
    ++t;
    const double b1c = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double b2c = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& w = *params[i].value;
        const Tensor& g = *params[i].grad;
        Tensor& mi = m[i];
        Tensor& vi = v[i];
        for (int64_t j = 0; j < w.size(); ++j) {
            mi[j] = cfg.beta1 * mi[j] + (1.0 - cfg.beta1) * g[j];
            vi[j] = cfg.beta2 * vi[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double mhat = mi[j] / b1c;
            const double vhat = vi[j] / b2c;
            w[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

namespace {

struct BatchItem {
    const Tensor* image;
    const std::vector<int64_t>* caption;
    double weight;  // loss-term scale (1 for subject/base, ppl_weight for prior)
};

// One optimizer step over the items; returns the unweighted mean-MSE of the
// weight-1 items (the reported training loss).
double train_step(ToyModel& model, std::vector<ParamRef>& params, Adam& opt,
                  const std::vector<BatchItem>& items, Rng& rng) {
    model.zero_grads();
    double loss_main = 0.0;
    int64_t n_main = 0;
    const double inv_items = 1.0 / static_cast<double>(items.size());
    for (const BatchItem& item : items) {
        Tensor z0 = latent_encode(*item.image);
        const int64_t t = 1 + static_cast<int64_t>(rng.below(static_cast<uint64_t>(model.sched.steps)));
        Tensor eps = gaussian(rng, z0.shape());
        Tensor z_t = forward_process(z0, t, eps, model.sched);
        Tensor cond = model.text.encode(*item.caption);

        UNet::Cache cache;
        Tensor pred = model.unet.forward_train(z_t, t, cond, cache);

        double mse = 0.0;
        Tensor dpred(pred.shape());
        const double inv_n = 1.0 / static_cast<double>(pred.size());
        for (int64_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - eps[i];
            mse += d * d * inv_n;
            dpred[i] = 2.0 * d * inv_n * item.weight * inv_items;
        }
        if (item.weight == 1.0) {
            loss_main += mse;
            ++n_main;
        }
        Tensor dcond = model.unet.backward(cache, dpred);
        model.text.backward(*item.caption, dcond);
    }
    opt.step(params);
    return n_main > 0 ? loss_main / static_cast<double>(n_main) : 0.0;
}

void check_finite_loss(double loss, int64_t step) {
    if (!std::isfinite(loss)) {
        throw TrainingError("training diverged (non-finite loss) at step " + std::to_string(step));
    }
}

}  // namespace

Checkpoint train_base(const ToyDataset& data, int64_t steps, Rng& rng, const TrainHyper& hp,
                      TrainStats* stats, uint64_t dataset_seed) {
    ToyModel model = ToyModel::create(hp.model, rng.child(1).seed());
    std::vector<ParamRef> params = model.params();
    Adam opt;
    AdamConfig acfg;
    acfg.lr = hp.lr;
    opt.init(params, acfg);

    Rng step_rng = rng.child(2);
    const std::vector<int64_t> null_caption = {Vocabulary::kNullId};

    const int64_t window = std::max<int64_t>(1, std::min<int64_t>(100, steps / 10));
    double run0 = 0.0, run1 = 0.0;
    for (int64_t s = 0; s < steps; ++s) {
        std::vector<BatchItem> items;
        for (int64_t b = 0; b < hp.batch; ++b) {
            const LabeledImage& li = data.images[step_rng.below(data.images.size())];
            const bool drop = step_rng.uniform() < hp.cond_drop_prob;
            items.push_back({&li.image, drop ? &null_caption : &li.caption, 1.0});
        }
        const double loss = train_step(model, params, opt, items, step_rng);
        check_finite_loss(loss, s);
        if (s < window) run0 += loss / static_cast<double>(window);
        if (s >= steps - window) run1 += loss / static_cast<double>(window);
    }
    if (stats) {
        stats->initial_running_loss = run0;
        stats->final_running_loss = run1;
    }

    return model.to_checkpoint({{"mode", "base"},
                                {"steps", steps},
                                {"seed", rng.seed()},
                                {"dataset_seed", dataset_seed},
                                {"ppl_weight", 0.0}});
}

Checkpoint finetune_dreambooth(const Checkpoint& base, const std::vector<LabeledImage>& subject_images,
                               const std::string& identifier, double ppl_weight, int64_t steps,
                               Rng& rng, const FinetuneHyper& hp) {
    if (ppl_weight < 0.0) throw ConfigError("finetune: ppl_weight must be >= 0");
    if (subject_images.empty()) throw ConfigError("finetune: need at least one subject image");
    ToyModel model = ToyModel::from_checkpoint(base);
    if (!model.vocab.contains(identifier)) {
        throw VocabularyError("finetune: identifier '" + identifier + "' is not a reserved token");
    }
    // The identifier must never occur in base captions; a base-mode model has
    // an untouched embedding row for it.
    const std::string class_word =
        ToyDataset::shape_names()[static_cast<size_t>(subject_images[0].shape)];
    const std::vector<int64_t> subject_caption =
        model.vocab.tokenize("a photo of a " + identifier + " " + class_word);
    const std::vector<int64_t> prior_caption = model.vocab.tokenize("a photo of a " + class_word);

    // Class-prior images come from the base model itself.
    std::vector<Tensor> prior_latents;
    if (ppl_weight > 0.0) {
        Tensor cond = model.text.encode(prior_caption);
        GuidanceConfig guidance;
        guidance.guidance_scale = hp.prior_guidance;
        AttentionConfig acfg;
        acfg.negative_attention_enabled = false;
        acfg.record_maps = false;
        SampleOptions opts;
        opts.num_steps = hp.prior_sample_steps;
        opts.mask_h = model.cfg.unet.latent_h;
        opts.mask_w = model.cfg.unet.latent_w;
        for (int64_t i = 0; i < hp.prior_count; ++i) {
            Rng prior_rng = rng.child(0x9000 + static_cast<uint64_t>(i));
            prior_latents.push_back(
                sample(model, cond, nullptr, model.sched, guidance, acfg, prior_rng, opts));
        }
    }

    std::vector<ParamRef> params = model.params();
    Adam opt;
    AdamConfig acfg;
    acfg.lr = hp.lr;
    opt.init(params, acfg);

    Rng step_rng = rng.child(3);
    for (int64_t s = 0; s < steps; ++s) {
        std::vector<BatchItem> items;
        std::vector<Tensor> prior_images;  // keep alive across train_step
        for (int64_t b = 0; b < hp.batch; ++b) {
            const LabeledImage& li = subject_images[step_rng.below(subject_images.size())];
            items.push_back({&li.image, &subject_caption, 1.0});
        }
        if (ppl_weight > 0.0) {
            prior_images.reserve(static_cast<size_t>(hp.batch));
            for (int64_t b = 0; b < hp.batch; ++b) {
                const Tensor& z = prior_latents[step_rng.below(prior_latents.size())];
                prior_images.push_back(latent_decode(z));
                items.push_back({&prior_images.back(), &prior_caption, ppl_weight});
            }
        }
        const double loss = train_step(model, params, opt, items, step_rng);
        check_finite_loss(loss, s);
    }

    nlohmann::json meta = base.metadata.at("train");
    meta["mode"] = ppl_weight > 0.0 ? "dreambooth+ppl" : "dreambooth";
    meta["finetune_steps"] = steps;
    meta["ppl_weight"] = ppl_weight;
    meta["identifier"] = identifier;
    return model.to_checkpoint(std::move(meta));
}

}  // namespace negattn
