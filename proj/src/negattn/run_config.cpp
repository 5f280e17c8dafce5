#include "negattn/run_config.hpp"

#include <cstdlib>
#include <fstream>

#include <CLI11.hpp>

#include "negattn/errors.hpp"

namespace negattn {

nlohmann::json RunConfig::to_json() const {
    return {{"command", command},
            {"seed", seed},
            {"lambda", lambda},
            {"guidance_scale", guidance_scale},
            {"steps", steps},
            {"finetune_steps", finetune_steps},
            {"mask_resolution", mask_resolution},
            {"background_masking", background_masking},
            {"negative_attention", negative_attention},
            {"checkpoint_in", checkpoint_in},
            {"checkpoint_out", checkpoint_out},
            {"output_dir", output_dir},
            {"prompt", prompt},
            {"subject_prompt", subject_prompt},
            {"proxies_path", proxies_path},
            {"ppl_weight", ppl_weight},
            {"jobs", jobs},
            {"dump_masks", dump_masks},
            {"lambda_values", lambda_values},
            {"num_seeds", num_seeds},
            {"num_prompts", num_prompts},
            {"dataset_size", dataset_size},
            {"dataset_seed", dataset_seed},
            {"batch", batch},
            {"lr", lr}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("command", c.command);
    get("seed", c.seed);
    get("lambda", c.lambda);
    get("guidance_scale", c.guidance_scale);
    get("steps", c.steps);
    get("finetune_steps", c.finetune_steps);
    get("mask_resolution", c.mask_resolution);
    get("background_masking", c.background_masking);
    get("negative_attention", c.negative_attention);
    get("checkpoint_in", c.checkpoint_in);
    get("checkpoint_out", c.checkpoint_out);
    get("output_dir", c.output_dir);
    get("prompt", c.prompt);
    get("subject_prompt", c.subject_prompt);
    get("proxies_path", c.proxies_path);
    get("ppl_weight", c.ppl_weight);
    get("jobs", c.jobs);
    get("dump_masks", c.dump_masks);
    get("lambda_values", c.lambda_values);
    get("num_seeds", c.num_seeds);
    get("num_prompts", c.num_prompts);
    get("dataset_size", c.dataset_size);
    get("dataset_seed", c.dataset_seed);
    get("batch", c.batch);
    get("lr", c.lr);
    return c;
}

void RunConfig::validate() const {
    if (lambda < 0.0) throw ConfigError("--lambda must be >= 0");
    if (guidance_scale < 0.0) throw ConfigError("--guidance-scale must be >= 0");
    if (mask_resolution != 16 && mask_resolution != 24 && mask_resolution != 32) {
        throw ConfigError("--mask-resolution must be one of {16, 24, 32}");
    }
    if (ppl_weight < 0.0) throw ConfigError("--ppl-weight must be >= 0");
    if (jobs < 1) throw ConfigError("--jobs must be >= 1");
    for (double l : lambda_values) {
        if (l < 0.0) throw ConfigError("--lambda-values entries must be >= 0");
    }
    if (command == "generate" && prompt.empty()) {
        throw ConfigError("generate requires --prompt");
    }
    if ((command == "generate" || command == "finetune" || command == "sweep" ||
         command == "ablate" || command == "ppl-compare") &&
        checkpoint_in.empty()) {
        throw ConfigError(command + " requires --checkpoint-in");
    }
    if ((command == "train" || command == "finetune") && checkpoint_out.empty()) {
        throw ConfigError(command + " requires --checkpoint-out");
    }
}

RunConfig parse_args(const std::vector<std::string>& args) {
    CLI::App app{"toy latent-diffusion engine with negative-attention subject suppression"};
    app.require_subcommand(1);

    RunConfig flags;
    std::string config_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file; explicit flags win");
        cmd->add_option("--seed", flags.seed, "base RNG seed");
        cmd->add_option("--lambda", flags.lambda, "suppression scale (>= 0)");
        cmd->add_option("--guidance-scale", flags.guidance_scale, "classifier-free guidance scale");
        cmd->add_option("--steps", flags.steps,
                        "training steps (train/finetune) or sampler steps (others)");
        cmd->add_option("--finetune-steps", flags.finetune_steps, "ppl-compare arm training steps");
        cmd->add_option("--mask-resolution", flags.mask_resolution, "base mask resolution");
        cmd->add_option("--background-masking", flags.background_masking,
                        "apply the spatial background mask");
        cmd->add_option("--negative-attention", flags.negative_attention,
                        "enable the auxiliary suppression branch");
        cmd->add_option("--checkpoint-in", flags.checkpoint_in, "input checkpoint path");
        cmd->add_option("--checkpoint-out", flags.checkpoint_out, "output checkpoint path");
        cmd->add_option("--output-dir", flags.output_dir, "artifact directory");
        cmd->add_option("--prompt", flags.prompt, "main text prompt y");
        cmd->add_option("--subject-prompt", flags.subject_prompt, "subject prompt s");
        cmd->add_option("--proxies", flags.proxies_path, "proxy-classifier checkpoint path");
        cmd->add_option("--ppl-weight", flags.ppl_weight, "prior-preservation loss scale");
        cmd->add_option("--jobs", flags.jobs, "parallel sweep cells");
        cmd->add_flag("--dump-masks", flags.dump_masks, "write per-step mask PGMs");
        cmd->add_option("--lambda-values", flags.lambda_values, "sweep lambda grid");
        cmd->add_option("--num-seeds", flags.num_seeds, "seeds per sweep cell group");
        cmd->add_option("--num-prompts", flags.num_prompts, "prompts from the recontext set");
        cmd->add_option("--dataset-size", flags.dataset_size, "base training set size");
        cmd->add_option("--dataset-seed", flags.dataset_seed, "dataset generator seed");
        cmd->add_option("--batch", flags.batch, "training batch size");
        cmd->add_option("--lr", flags.lr, "learning rate (0 = command default)");
        return cmd;
    };

    std::vector<CLI::App*> cmds;
    for (const char* name : {"train", "finetune", "generate", "sweep", "ablate", "ppl-compare"}) {
        cmds.push_back(add_common(app.add_subcommand(name)));
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        throw ConfigError(std::string("usage error: ") + e.what());
    }

    CLI::App* active = nullptr;
    for (CLI::App* c : cmds) {
        if (c->parsed()) active = c;
    }

    RunConfig cfg;
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw ConfigError("cannot read config file '" + config_path + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(f);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad config JSON: " + std::string(e.what()));
        }
        cfg = RunConfig::from_json(j);
    }
    cfg.command = active->get_name();

    auto take = [&](const char* flag, auto member) {
        if (active->count(flag) > 0) cfg.*member = flags.*member;
    };
    take("--seed", &RunConfig::seed);
    take("--lambda", &RunConfig::lambda);
    take("--guidance-scale", &RunConfig::guidance_scale);
    take("--steps", &RunConfig::steps);
    take("--finetune-steps", &RunConfig::finetune_steps);
    take("--mask-resolution", &RunConfig::mask_resolution);
    take("--background-masking", &RunConfig::background_masking);
    take("--negative-attention", &RunConfig::negative_attention);
    take("--checkpoint-in", &RunConfig::checkpoint_in);
    take("--checkpoint-out", &RunConfig::checkpoint_out);
    take("--output-dir", &RunConfig::output_dir);
    take("--prompt", &RunConfig::prompt);
    take("--subject-prompt", &RunConfig::subject_prompt);
    take("--proxies", &RunConfig::proxies_path);
    take("--ppl-weight", &RunConfig::ppl_weight);
    take("--jobs", &RunConfig::jobs);
    take("--dump-masks", &RunConfig::dump_masks);
    take("--lambda-values", &RunConfig::lambda_values);
    take("--num-seeds", &RunConfig::num_seeds);
    take("--num-prompts", &RunConfig::num_prompts);
    take("--dataset-size", &RunConfig::dataset_size);
    take("--dataset-seed", &RunConfig::dataset_seed);
    take("--batch", &RunConfig::batch);
    take("--lr", &RunConfig::lr);

    // seed precedence: flag, then config file, then NEGATTN_SEED
    if (active->count("--seed") == 0) {
        bool config_has_seed = false;
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            nlohmann::json j = nlohmann::json::parse(f);
            config_has_seed = j.contains("seed");
        }
        if (!config_has_seed) {
            if (const char* env = std::getenv("NEGATTN_SEED")) {
                cfg.seed = std::strtoull(env, nullptr, 10);
            }
        }
    }

    cfg.validate();
    return cfg;
}

}  // namespace negattn
