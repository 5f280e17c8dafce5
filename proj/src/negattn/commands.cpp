#include <cstdio>
#include <filesystem>
#include <fstream>

#include "negattn/eval.hpp"
#include "negattn/image_io.hpp"
#include "negattn/run_config.hpp"
#include "negattn/train.hpp"

namespace negattn {

namespace {

namespace fs = std::filesystem;

constexpr uint64_t kProxySeed = 555;

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw IoError("short write to '" + path + "'");
}

ProxyHeads load_or_train_proxies(const RunConfig& cfg) {
    const std::string path =
        cfg.proxies_path.empty() ? cfg.output_dir + "/proxies.ckpt" : cfg.proxies_path;
    if (fs::exists(path)) return ProxyHeads::load(path);
    ProxyHeads heads = ProxyHeads::train(kProxySeed);
    heads.save(path);
    std::printf("proxies: trained and saved %s\n", path.c_str());
    return heads;
}

std::vector<LabeledImage> subject_set_for(const Checkpoint& ckpt) {
    uint64_t dataset_seed = 1013;
    if (ckpt.metadata.contains("train") && ckpt.metadata.at("train").contains("dataset_seed")) {
        dataset_seed = ckpt.metadata.at("train").at("dataset_seed").get<uint64_t>();
    }
    return ToyDataset::generate(0, dataset_seed).subject_images;
}

SweepSpec build_spec(const RunConfig& cfg, const ToyModel& model, const Checkpoint& ckpt) {
    SweepSpec spec;
    if (!cfg.lambda_values.empty()) spec.lambda_values = cfg.lambda_values;
    for (int64_t i = 0; i < cfg.num_seeds; ++i) {
        spec.seeds.push_back(cfg.seed + static_cast<uint64_t>(i));
    }
    PromptSet ps = recontext_prompts(model.vocab);
    const int64_t np = std::min<int64_t>(cfg.num_prompts, static_cast<int64_t>(ps.tokens.size()));
    for (int64_t i = 0; i < np; ++i) spec.prompts.push_back(ps.tokens[static_cast<size_t>(i)]);
    spec.subject_tokens = model.vocab.tokenize(cfg.subject_prompt);
    for (const LabeledImage& li : subject_set_for(ckpt)) spec.subject_refs.push_back(li.image);
    spec.gen.guidance = cfg.guidance_scale;
    spec.gen.sample_steps = cfg.steps > 0 ? cfg.steps : 16;
    spec.gen.mask_resolution = cfg.mask_resolution;
    spec.jobs = cfg.jobs;
    return spec;
}

int cmd_train(const RunConfig& cfg) {
    ToyDataset data = ToyDataset::generate(cfg.dataset_size, cfg.dataset_seed);
    const int64_t steps = cfg.steps > 0 ? cfg.steps : 1500;
    TrainHyper hp;
    hp.batch = cfg.batch;
    if (cfg.lr > 0.0) hp.lr = cfg.lr;
    TrainStats stats;
    Rng rng(cfg.seed);
    Checkpoint ckpt = train_base(data, steps, rng, hp, &stats, cfg.dataset_seed);
    ckpt.save(cfg.checkpoint_out);
    std::printf("train: %lld steps, running loss %.4f -> %.4f, saved %s\n",
                static_cast<long long>(steps), stats.initial_running_loss,
                stats.final_running_loss, cfg.checkpoint_out.c_str());
    return 0;
}

int cmd_finetune(const RunConfig& cfg) {
    Checkpoint base = Checkpoint::load(cfg.checkpoint_in);
    std::vector<LabeledImage> subject = subject_set_for(base);
    const int64_t steps = cfg.steps > 0 ? cfg.steps : 240;
    FinetuneHyper hp;
    hp.batch = cfg.batch;
    if (cfg.lr > 0.0) hp.lr = cfg.lr;
    Rng rng(cfg.seed);
    Checkpoint ft = finetune_dreambooth(base, subject, "sks", cfg.ppl_weight, steps, rng, hp);
    ft.save(cfg.checkpoint_out);
    std::printf("finetune: %lld steps, ppl_weight %.2f, saved %s\n",
                static_cast<long long>(steps), cfg.ppl_weight, cfg.checkpoint_out.c_str());
    return 0;
}

int cmd_generate(const RunConfig& cfg) {
    Checkpoint ckpt = Checkpoint::load(cfg.checkpoint_in);
    ToyModel model = ToyModel::from_checkpoint(ckpt);
    std::vector<int64_t> prompt = model.vocab.tokenize(cfg.prompt);
    std::vector<int64_t> subject = model.vocab.tokenize(cfg.subject_prompt);

    GenerationSettings gs;
    gs.lambda = cfg.lambda;
    gs.negative_attention = cfg.negative_attention;
    gs.background_masking = cfg.background_masking;
    gs.guidance = cfg.guidance_scale;
    gs.sample_steps = cfg.steps > 0 ? cfg.steps : 50;
    gs.mask_resolution = cfg.mask_resolution;

    std::vector<std::pair<int64_t, Tensor>> mask_log;
    Tensor z0 = generate_latent(model, prompt, subject, gs, cfg.seed,
                                cfg.dump_masks ? &mask_log : nullptr);
    const std::string img_path = cfg.output_dir + "/image.ppm";
    write_ppm(latent_decode(z0), img_path);
    if (cfg.dump_masks) {
        for (const auto& [t, mask] : mask_log) {
            write_pgm(mask, cfg.output_dir + "/mask_t" + std::to_string(t) + ".pgm");
        }
    }
    std::printf("generate: lambda %.2f seed %llu -> %s\n", gs.lambda,
                static_cast<unsigned long long>(cfg.seed), img_path.c_str());
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    Checkpoint ckpt = Checkpoint::load(cfg.checkpoint_in);
    ToyModel model = ToyModel::from_checkpoint(ckpt);
    ProxyHeads heads = load_or_train_proxies(cfg);
    SweepSpec spec = build_spec(cfg, model, ckpt);
    std::vector<EvalRow> rows = run_lambda_sweep(model, heads, spec);
    const std::string csv_path = cfg.output_dir + "/sweep.csv";
    write_text(csv_path, to_csv(rows));
    std::printf("sweep: %zu lambdas x %zu seeds x %zu prompts -> %s\n",
                spec.lambda_values.size(), spec.seeds.size(), spec.prompts.size(),
                csv_path.c_str());
    return 0;
}

int cmd_ablate(const RunConfig& cfg) {
    Checkpoint ckpt = Checkpoint::load(cfg.checkpoint_in);
    ToyModel model = ToyModel::from_checkpoint(ckpt);
    ProxyHeads heads = load_or_train_proxies(cfg);
    SweepSpec spec = build_spec(cfg, model, ckpt);
    std::vector<EvalRow> rows = run_ablation(model, heads, cfg.lambda, spec);
    const std::string csv_path = cfg.output_dir + "/ablation.csv";
    write_text(csv_path, to_csv(rows));
    std::printf("ablate: lambda %.2f, arms baseline/no_mask/masked -> %s\n", cfg.lambda,
                csv_path.c_str());
    return 0;
}

int cmd_ppl_compare(const RunConfig& cfg) {
    Checkpoint base = Checkpoint::load(cfg.checkpoint_in);
    ToyModel model = ToyModel::from_checkpoint(base);
    ProxyHeads heads = load_or_train_proxies(cfg);
    SweepSpec spec = build_spec(cfg, model, base);
    PplCompareConfig pc;
    pc.finetune_steps = cfg.finetune_steps;
    if (cfg.lr > 0.0) pc.finetune.lr = cfg.lr;
    std::vector<LabeledImage> subject = subject_set_for(base);
    std::vector<EvalRow> rows = run_ppl_comparison(base, subject, heads, spec, pc);
    const std::string csv_path = cfg.output_dir + "/ppl_compare.csv";
    write_text(csv_path, to_csv(rows));

    // Pareto report: does some lambda row dominate a PPL arm?
    std::vector<ArmPoint> pts = aggregate_mean_rows(rows);
    int dominated = 0;
    for (const ArmPoint& p : pts) {
        if (p.arm != "ppl") continue;
        for (const ArmPoint& q : pts) {
            if (q.arm == "negattn" && pareto_dominates(q, p)) {
                ++dominated;
                break;
            }
        }
    }
    std::printf("ppl-compare: %zu rows, %d ppl arm(s) pareto-dominated by some lambda -> %s\n",
                rows.size(), dominated, csv_path.c_str());
    return 0;
}

}  // namespace

int run(const RunConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    if (cfg.command == "train") return cmd_train(cfg);
    if (cfg.command == "finetune") return cmd_finetune(cfg);
    if (cfg.command == "generate") return cmd_generate(cfg);
    if (cfg.command == "sweep") return cmd_sweep(cfg);
    if (cfg.command == "ablate") return cmd_ablate(cfg);
    if (cfg.command == "ppl-compare") return cmd_ppl_compare(cfg);
    throw ConfigError("unknown command '" + cfg.command + "'");
}

}  // namespace negattn
