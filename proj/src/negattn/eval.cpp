#include "negattn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "negattn/image_io.hpp"
#include "negattn/kernels.hpp"

namespace negattn {

namespace {

constexpr int64_t kFeatureDim = 3 * 16 * 16;  // latent pixels
constexpr int64_t kHidden = 32;

Tensor image_features(const Tensor& image) {
    return latent_encode(image).reshaped({1, kFeatureDim});
}

}  // namespace

Tensor MlpHead::probs(const Tensor& features) const {
    Tensor h = matmul(features, w1);
    for (int64_t j = 0; j < h.size(); ++j) h[j] += b1[j];
    h = silu(h);
    Tensor logits = matmul(h, w2);
    for (int64_t j = 0; j < logits.size(); ++j) logits[j] += b2[j];
    return softmax_rows(logits).reshaped({logits.dim(1)});
}

namespace {

struct HeadTrainer {
    MlpHead head;
    Tensor m_w1, v_w1, m_b1, v_b1, m_w2, v_w2, m_b2, v_b2;
    int64_t t = 0;

    void init(int64_t classes, Rng& rng) {
        head.w1 = gaussian(rng, {kFeatureDim, kHidden});
        const double s1 = 1.0 / std::sqrt(static_cast<double>(kFeatureDim));
        for (int64_t i = 0; i < head.w1.size(); ++i) head.w1[i] *= s1;
        head.b1 = Tensor({1, kHidden});
        head.w2 = gaussian(rng, {kHidden, classes});
        const double s2 = 1.0 / std::sqrt(static_cast<double>(kHidden));
        for (int64_t i = 0; i < head.w2.size(); ++i) head.w2[i] *= s2;
        head.b2 = Tensor({1, classes});
        m_w1 = Tensor(head.w1.shape());
        v_w1 = Tensor(head.w1.shape());
        m_b1 = Tensor(head.b1.shape());
        v_b1 = Tensor(head.b1.shape());
        m_w2 = Tensor(head.w2.shape());
        v_w2 = Tensor(head.w2.shape());
        m_b2 = Tensor(head.b2.shape());
        v_b2 = Tensor(head.b2.shape());
    }

    static void adam_update(Tensor& w, const Tensor& g, Tensor& m, Tensor& v, int64_t t,
                            double lr) {
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double b1c = 1.0 - std::pow(b1, static_cast<double>(t));
        const double b2c = 1.0 - std::pow(b2, static_cast<double>(t));
        for (int64_t i = 0; i < w.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            w[i] -= lr * (m[i] / b1c) / (std::sqrt(v[i] / b2c) + eps);
        }
    }

    // One cross-entropy step on a minibatch of rows [B, in] with labels.
    void step(const Tensor& x, const std::vector<int>& labels, double lr) {
        const int64_t bsz = x.dim(0), classes = head.w2.dim(1);
        Tensor h_pre = matmul(x, head.w1);
        for (int64_t i = 0; i < bsz; ++i) {
            for (int64_t j = 0; j < kHidden; ++j) h_pre.at(i, j) += head.b1[j];
        }
        Tensor h = silu(h_pre);
        Tensor logits = matmul(h, head.w2);
        for (int64_t i = 0; i < bsz; ++i) {
            for (int64_t j = 0; j < classes; ++j) logits.at(i, j) += head.b2[j];
        }
        Tensor p = softmax_rows(logits);
        Tensor dlogits = p;
        const double inv_b = 1.0 / static_cast<double>(bsz);
        for (int64_t i = 0; i < bsz; ++i) {
            dlogits.at(i, labels[static_cast<size_t>(i)]) -= 1.0;
            for (int64_t j = 0; j < classes; ++j) dlogits.at(i, j) *= inv_b;
        }
        Tensor g_w2 = matmul(transpose(h), dlogits);
        Tensor g_b2({1, classes});
        for (int64_t j = 0; j < classes; ++j) {
            double s = 0.0;
            for (int64_t i = 0; i < bsz; ++i) s += dlogits.at(i, j);
            g_b2[j] = s;
        }
        Tensor dh = matmul(dlogits, transpose(head.w2));
        Tensor dh_pre = silu_backward(h_pre, dh);
        Tensor g_w1 = matmul(transpose(x), dh_pre);
        Tensor g_b1({1, kHidden});
        for (int64_t j = 0; j < kHidden; ++j) {
            double s = 0.0;
            for (int64_t i = 0; i < bsz; ++i) s += dh_pre.at(i, j);
            g_b1[j] = s;
        }
        ++t;
        adam_update(head.w1, g_w1, m_w1, v_w1, t, lr);
        adam_update(head.b1, g_b1, m_b1, v_b1, t, lr);
        adam_update(head.w2, g_w2, m_w2, v_w2, t, lr);
        adam_update(head.b2, g_b2, m_b2, v_b2, t, lr);
    }
};

struct TrainSample {
    Tensor feats;  // [1, in]
    int shape, fg, bg, acc, subject;
};

}  // namespace

ProxyHeads ProxyHeads::train(uint64_t seed) {
    ProxyHeads ph;
    ph.vocab = Vocabulary::standard();
    Rng rng(seed);

    std::vector<TrainSample> data;
    Rng gen_rng = rng.child(1);
    for (int i = 0; i < 1400; ++i) {
        LabeledImage li = ToyDataset::sample_base(gen_rng, ph.vocab);
        data.push_back({image_features(li.image), li.shape, li.fg_color, li.bg_color,
                        li.accessory ? 1 : 0, 0});
    }
    // Subject positives across all backgrounds, with and without the star.
    for (int bg = 0; bg < 5; ++bg) {
        for (int k = 0; k < 64; ++k) {
            LabeledImage li = ToyDataset::render_subject(gen_rng, ph.vocab, bg);
            Tensor img = li.image;
            if (gen_rng.below(2) == 1) {
                // re-render with the accessory glyph
                img = ToyDataset::render(Shape::kCircle, 0, bg, true, 16, 16, 9, true);
            }
            data.push_back({image_features(img), li.shape, 0, bg, 0, 1});
        }
    }

    HeadTrainer shape_t, fg_t, bg_t, acc_t, subj_t;
    Rng init_rng = rng.child(2);
    shape_t.init(3, init_rng);
    fg_t.init(4, init_rng);
    bg_t.init(5, init_rng);
    acc_t.init(2, init_rng);
    subj_t.init(2, init_rng);

    Rng batch_rng = rng.child(3);
    const int64_t steps = 900, bsz = 32;
    const double lr = 2e-3, noise_sigma = 0.08;
    for (int64_t s = 0; s < steps; ++s) {
        Tensor x({bsz, kFeatureDim});
        std::vector<int> l_shape, l_fg, l_bg, l_acc, l_subj;
        std::vector<int64_t> base_rows;  // rows drawn from the base set
        for (int64_t b = 0; b < bsz; ++b) {
            const TrainSample& ts = data[batch_rng.below(data.size())];
            for (int64_t j = 0; j < kFeatureDim; ++j) {
                x.at(b, j) = ts.feats[j] + noise_sigma * gaussian_scalar(batch_rng);
            }
            if (ts.subject == 0) base_rows.push_back(b);
            l_shape.push_back(ts.shape);
            l_fg.push_back(ts.fg);
            l_bg.push_back(ts.bg);
            l_acc.push_back(ts.acc);
            l_subj.push_back(ts.subject);
        }
        // Attribute heads train on base-distribution rows only (the subject's
        // texture has no fg-color label); bg and subject heads see everything.
        if (!base_rows.empty()) {
            Tensor xb({static_cast<int64_t>(base_rows.size()), kFeatureDim});
            std::vector<int> ls, lf, la;
            for (size_t r = 0; r < base_rows.size(); ++r) {
                const int64_t src = base_rows[r];
                for (int64_t j = 0; j < kFeatureDim; ++j) xb.at(static_cast<int64_t>(r), j) = x.at(src, j);
                ls.push_back(l_shape[static_cast<size_t>(src)]);
                lf.push_back(l_fg[static_cast<size_t>(src)]);
                la.push_back(l_acc[static_cast<size_t>(src)]);
            }
            shape_t.step(xb, ls, lr);
            fg_t.step(xb, lf, lr);
            acc_t.step(xb, la, lr);
        }
        bg_t.step(x, l_bg, lr);
        subj_t.step(x, l_subj, lr);
    }

    ph.shape = shape_t.head;
    ph.fg = fg_t.head;
    ph.bg = bg_t.head;
    ph.accessory = acc_t.head;
    ph.subject = subj_t.head;
    ph.trained = true;
    return ph;
}

namespace {
void put_head(Checkpoint& ckpt, const std::string& name, const MlpHead& h) {
    ckpt.tensors[name + ".w1"] = h.w1;
    ckpt.tensors[name + ".b1"] = h.b1;
    ckpt.tensors[name + ".w2"] = h.w2;
    ckpt.tensors[name + ".b2"] = h.b2;
}
MlpHead get_head(const Checkpoint& ckpt, const std::string& name) {
    MlpHead h;
    h.w1 = ckpt.get(name + ".w1");
    h.b1 = ckpt.get(name + ".b1");
    h.w2 = ckpt.get(name + ".w2");
    h.b2 = ckpt.get(name + ".b2");
    return h;
}
}  // namespace

void ProxyHeads::save(const std::string& path) const {
    if (!trained) throw TrainingError("proxy heads not trained");
    Checkpoint ckpt;
    put_head(ckpt, "shape", shape);
    put_head(ckpt, "fg", fg);
    put_head(ckpt, "bg", bg);
    put_head(ckpt, "accessory", accessory);
    put_head(ckpt, "subject", subject);
    ckpt.metadata = {{"kind", "proxy-heads"}, {"vocab", vocab.tokens}};
    ckpt.save(path);
}

ProxyHeads ProxyHeads::load(const std::string& path) {
    Checkpoint ckpt = Checkpoint::load(path);
    ProxyHeads ph;
    ph.shape = get_head(ckpt, "shape");
    ph.fg = get_head(ckpt, "fg");
    ph.bg = get_head(ckpt, "bg");
    ph.accessory = get_head(ckpt, "accessory");
    ph.subject = get_head(ckpt, "subject");
    ph.vocab = Vocabulary::from_tokens(ckpt.metadata.at("vocab").get<std::vector<std::string>>());
    ph.trained = true;
    return ph;
}

double ProxyHeads::subject_confidence(const Tensor& image) const {
    if (!trained) throw TrainingError("proxy heads not trained");
    return subject.probs(image_features(image))[1];
}

namespace {

struct PromptAttributes {
    int bg = -1;
    int fg = -1;
    int shape = -1;
    bool accessory = false;
    bool has_identifier = false;
};

int index_of(const std::vector<std::string>& names, const Vocabulary& vocab, int64_t token) {
    for (size_t i = 0; i < names.size(); ++i) {
        if (vocab.id(names[i]) == token) return static_cast<int>(i);
    }
    return -1;
}

PromptAttributes parse_prompt(const std::vector<int64_t>& tokens, const Vocabulary& vocab) {
    PromptAttributes a;
    const int64_t on_id = vocab.id("on");
    const int64_t with_id = vocab.id("with");
    const int64_t star_id = vocab.id("star");
    const int64_t ident_id = vocab.identifier_id();
    a.has_identifier = Vocabulary::find(tokens, ident_id) >= 0;
    for (size_t i = 0; i < tokens.size(); ++i) {
        const int shape_idx = index_of(ToyDataset::shape_names(), vocab, tokens[i]);
        if (shape_idx >= 0) {
            a.shape = shape_idx;
            if (i > 0) a.fg = index_of(ToyDataset::fg_color_names(), vocab, tokens[i - 1]);
        }
        if (tokens[i] == on_id && i + 1 < tokens.size()) {
            a.bg = index_of(ToyDataset::bg_color_names(), vocab, tokens[i + 1]);
        }
        if (tokens[i] == with_id && Vocabulary::find(tokens, star_id) >= 0) a.accessory = true;
    }
    return a;
}

int argmax(const Tensor& p) {
    int best = 0;
    for (int64_t i = 1; i < p.size(); ++i) {
        if (p[i] > p[best]) best = static_cast<int>(i);
    }
    return best;
}

}  // namespace

ProxyScores ProxyHeads::score_image(const Tensor& image, const std::vector<int64_t>& prompt_tokens,
                                    const std::vector<Tensor>& subject_refs) const {
    (void)subject_refs;  // the detector variant does not correlate templates
    if (!trained) throw TrainingError("proxy heads not trained");
    Tensor feats = image_features(image);
    ProxyScores sc;
    sc.subject_fidelity = subject.probs(feats)[1];

    const PromptAttributes attr = parse_prompt(prompt_tokens, vocab);
    double hits = 0.0;
    int64_t scored = 0;
    if (attr.bg >= 0) {
        hits += argmax(bg.probs(feats)) == attr.bg ? 1.0 : 0.0;
        ++scored;
    }
    if (attr.accessory) {
        hits += argmax(accessory.probs(feats)) == 1 ? 1.0 : 0.0;
        ++scored;
    }
    if (!attr.has_identifier && attr.shape >= 0) {
        hits += argmax(shape.probs(feats)) == attr.shape ? 1.0 : 0.0;
        ++scored;
    }
    if (!attr.has_identifier && attr.fg >= 0) {
        hits += argmax(fg.probs(feats)) == attr.fg ? 1.0 : 0.0;
        ++scored;
    }
    sc.text_alignment = scored > 0 ? hits / static_cast<double>(scored) : 1.0;
    return sc;
}

Tensor generate_latent(const ToyModel& model, const std::vector<int64_t>& prompt_tokens,
                       const std::vector<int64_t>& subject_tokens, const GenerationSettings& gs,
                       uint64_t seed, std::vector<std::pair<int64_t, Tensor>>* mask_log) {
    Tensor cond_main = model.text.encode(prompt_tokens);
    Tensor cond_subject;
    const Tensor* subj_ptr = nullptr;
    if (gs.negative_attention && !subject_tokens.empty()) {
        cond_subject = model.text.encode(subject_tokens);
        subj_ptr = &cond_subject;
    }

    AttentionConfig acfg;
    acfg.lambda = gs.lambda;
    acfg.negative_attention_enabled = gs.negative_attention;
    acfg.background_masking_enabled = gs.background_masking;
    acfg.record_maps = true;

    GuidanceConfig guidance;
    guidance.guidance_scale = gs.guidance;

    SampleOptions opts;
    opts.num_steps = gs.sample_steps;
    opts.mask_h = gs.mask_resolution;
    opts.mask_w = gs.mask_resolution;
    opts.mask_log = mask_log;
    opts.clamp_z0 = true;  // keep guided trajectories in the data range
    const int64_t ident = model.vocab.identifier_id();
    int64_t idx = Vocabulary::find(prompt_tokens, ident);
    if (idx >= 0) {
        opts.identifier_index = idx;
    } else {
        idx = Vocabulary::find(subject_tokens, ident);
        opts.identifier_index = std::max<int64_t>(idx, 0);
        opts.identifier_in_aux = true;
    }

    Rng rng(seed);
    return sample(model, cond_main, subj_ptr, model.sched, guidance, acfg, rng, opts);
}

std::string to_csv(const std::vector<EvalRow>& rows) {
    std::string out = "arm,lambda,ppl_weight,seed,prompt_id,subject_fidelity,text_alignment\n";
    char buf[256];
    for (const EvalRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%lld,%lld,%.6f,%.6f\n", r.arm.c_str(),
                      r.lambda, r.ppl_weight, static_cast<long long>(r.seed),
                      static_cast<long long>(r.prompt_id), r.subject_fidelity, r.text_alignment);
        out += buf;
    }
    return out;
}

void SweepSpec::validate() const {
    if (lambda_values.empty() || seeds.empty() || prompts.empty()) {
        throw ConfigError("sweep: lambda_values, seeds and prompts must be nonempty");
    }
    for (double l : lambda_values) {
        if (l < 0.0) throw ConfigError("sweep: lambda must be >= 0");
    }
}

namespace {

// Runs |arms| x |seeds| x |prompts| cells in deterministic order; cells are
// independent (each owns its sampler state) so they parallelize freely.
struct ArmSettings {
    std::string name;
    GenerationSettings gs;
    double lambda_col;
    double ppl_col;
    const ToyModel* model;
};

std::vector<EvalRow> run_cells(const std::vector<ArmSettings>& arms, const ProxyHeads& heads,
                               const SweepSpec& spec) {
    const int64_t n_arms = static_cast<int64_t>(arms.size());
    const int64_t n_seeds = static_cast<int64_t>(spec.seeds.size());
    const int64_t n_prompts = static_cast<int64_t>(spec.prompts.size());
    const int64_t total = n_arms * n_seeds * n_prompts;
    std::vector<EvalRow> rows(static_cast<size_t>(total));
#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(spec.jobs)) \
    if (spec.jobs > 1)
    for (int64_t idx = 0; idx < total; ++idx) {
        const int64_t ai = idx / (n_seeds * n_prompts);
        const int64_t si = (idx / n_prompts) % n_seeds;
        const int64_t pi = idx % n_prompts;
        const ArmSettings& arm = arms[static_cast<size_t>(ai)];
        Tensor z0 = generate_latent(*arm.model, spec.prompts[static_cast<size_t>(pi)],
                                    spec.subject_tokens, arm.gs,
                                    spec.seeds[static_cast<size_t>(si)]);
        Tensor img = latent_decode(z0);
        ProxyScores sc =
            heads.score_image(img, spec.prompts[static_cast<size_t>(pi)], spec.subject_refs);
        rows[static_cast<size_t>(idx)] = {arm.name,
                                          arm.lambda_col,
                                          arm.ppl_col,
                                          static_cast<int64_t>(spec.seeds[static_cast<size_t>(si)]),
                                          pi,
                                          sc.subject_fidelity,
                                          sc.text_alignment};
    }
    // per-arm means in arm order
    std::vector<EvalRow> out = rows;
    for (int64_t ai = 0; ai < n_arms; ++ai) {
        double fid = 0.0, align = 0.0;
        const int64_t per_arm = n_seeds * n_prompts;
        for (int64_t k = 0; k < per_arm; ++k) {
            const EvalRow& r = rows[static_cast<size_t>(ai * per_arm + k)];
            fid += r.subject_fidelity;
            align += r.text_alignment;
        }
        const ArmSettings& arm = arms[static_cast<size_t>(ai)];
        out.push_back({arm.name + "-mean", arm.lambda_col, arm.ppl_col, -1, -1,
                       fid / static_cast<double>(per_arm), align / static_cast<double>(per_arm)});
    }
    return out;
}

}  // namespace

std::vector<EvalRow> run_lambda_sweep(const ToyModel& model, const ProxyHeads& heads,
                                      const SweepSpec& spec) {
    spec.validate();
    std::vector<ArmSettings> arms;
    for (double l : spec.lambda_values) {
        GenerationSettings gs = spec.gen;
        gs.lambda = l;
        gs.negative_attention = true;
        gs.background_masking = true;
        arms.push_back({"sweep", gs, l, 0.0, &model});
    }
    return run_cells(arms, heads, spec);
}

std::vector<EvalRow> run_ablation(const ToyModel& model, const ProxyHeads& heads, double lambda,
                                  const SweepSpec& spec) {
    spec.validate();
    if (lambda < 0.0) throw ConfigError("ablation: lambda must be >= 0");
    GenerationSettings base_gs = spec.gen;
    base_gs.negative_attention = false;
    GenerationSettings nomask_gs = spec.gen;
    nomask_gs.lambda = lambda;
    nomask_gs.negative_attention = true;
    nomask_gs.background_masking = false;
    GenerationSettings masked_gs = spec.gen;
    masked_gs.lambda = lambda;
    masked_gs.negative_attention = true;
    masked_gs.background_masking = true;
    std::vector<ArmSettings> arms = {
        {"baseline", base_gs, 0.0, 0.0, &model},
        {"no_mask", nomask_gs, lambda, 0.0, &model},
        {"masked", masked_gs, lambda, 0.0, &model},
    };
    return run_cells(arms, heads, spec);
}

std::vector<EvalRow> run_ppl_comparison(const Checkpoint& base,
                                        const std::vector<LabeledImage>& subject_images,
                                        const ProxyHeads& heads, const SweepSpec& spec,
                                        const PplCompareConfig& cfg, const Checkpoint* plain_db) {
    spec.validate();
    Checkpoint plain;
    if (plain_db == nullptr) {
        Rng rng(0x9e1d);
        plain = finetune_dreambooth(base, subject_images, "sks", 0.0, cfg.finetune_steps, rng,
                                    cfg.finetune);
        plain_db = &plain;
    }
    ToyModel plain_model = ToyModel::from_checkpoint(*plain_db);

    std::vector<EvalRow> rows;
    {
        // plain DreamBooth arm swept over lambda
        std::vector<ArmSettings> arms;
        for (double l : spec.lambda_values) {
            GenerationSettings gs = spec.gen;
            gs.lambda = l;
            gs.negative_attention = true;
            gs.background_masking = true;
            arms.push_back({"negattn", gs, l, 0.0, &plain_model});
        }
        std::vector<EvalRow> part = run_cells(arms, heads, spec);
        rows.insert(rows.end(), part.begin(), part.end());
    }

    std::vector<Checkpoint> ppl_ckpts;
    std::vector<ToyModel> ppl_models;
    ppl_ckpts.reserve(spec.ppl_weights.size());
    ppl_models.reserve(spec.ppl_weights.size());
    for (double w : spec.ppl_weights) {
        Rng rng(0x9e1d);
        ppl_ckpts.push_back(finetune_dreambooth(base, subject_images, "sks", w,
                                                cfg.finetune_steps, rng, cfg.finetune));
        ppl_models.push_back(ToyModel::from_checkpoint(ppl_ckpts.back()));
    }
    {
        std::vector<ArmSettings> arms;
        for (size_t i = 0; i < spec.ppl_weights.size(); ++i) {
            GenerationSettings gs = spec.gen;
            gs.negative_attention = false;  // PPL arms rely on training-time mitigation
            arms.push_back({"ppl", gs, 0.0, spec.ppl_weights[i], &ppl_models[i]});
        }
        std::vector<EvalRow> part = run_cells(arms, heads, spec);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

std::vector<ArmPoint> aggregate_mean_rows(const std::vector<EvalRow>& rows) {
    std::vector<ArmPoint> out;
    for (const EvalRow& r : rows) {
        if (r.seed != -1) continue;
        const std::string suffix = "-mean";
        std::string arm = r.arm;
        if (arm.size() > suffix.size() && arm.compare(arm.size() - suffix.size(), suffix.size(), suffix) == 0) {
            arm = arm.substr(0, arm.size() - suffix.size());
        }
        const double param = arm == "ppl" ? r.ppl_weight : r.lambda;
        out.push_back({arm, param, r.subject_fidelity, r.text_alignment});
    }
    return out;
}

bool pareto_dominates(const ArmPoint& a, const ArmPoint& b) {
    return a.fidelity >= b.fidelity && a.alignment >= b.alignment &&
           (a.fidelity > b.fidelity || a.alignment > b.alignment);
}

namespace {
std::vector<double> ranks(const std::vector<double>& x) {
    const size_t n = x.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}
}  // namespace

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ConfigError("spearman: need two equal-length series of length >= 2");
    }
    std::vector<double> rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}

double subject_absent_threshold(std::vector<double> absent_scores) {
    if (absent_scores.empty()) throw ConfigError("threshold: need at least one score");
    std::sort(absent_scores.begin(), absent_scores.end());
    const size_t n = absent_scores.size();
    const size_t idx = std::min(n - 1, static_cast<size_t>(std::ceil(0.95 * static_cast<double>(n))) - 1);
    return absent_scores[idx] + 0.05;
}

}  // namespace negattn
