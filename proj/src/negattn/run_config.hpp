#ifndef NEGATTN_RUN_CONFIG_HPP
#define NEGATTN_RUN_CONFIG_HPP

#include <string>
#include <vector>

#include <json.hpp>

namespace negattn {

// Parsed CLI state for one invocation. --config JSON merges under explicit
// flags (flags win); NEGATTN_SEED is the seed fallback.
struct RunConfig {
    std::string command;  // train|finetune|generate|sweep|ablate|ppl-compare

    uint64_t seed = 0;
    double lambda = 0.6;
    double guidance_scale = 7.5;
    int64_t steps = 0;  // 0 = per-command default; training steps for
                        // train/finetune, sampler steps elsewhere
    int64_t finetune_steps = 160;  // ppl-compare arms
    int64_t mask_resolution = 16;
    bool background_masking = true;
    bool negative_attention = true;

    std::string checkpoint_in;
    std::string checkpoint_out;
    std::string output_dir = ".";
    std::string prompt;
    std::string subject_prompt = "a sks circle";
    std::string proxies_path;

    double ppl_weight = 0.0;
    int64_t jobs = 1;
    bool dump_masks = false;
    std::vector<double> lambda_values;  // empty = default grid
    int64_t num_seeds = 16;
    int64_t num_prompts = 8;
    int64_t dataset_size = 256;
    uint64_t dataset_seed = 1013;
    int64_t batch = 4;
    double lr = 0.0;  // 0 = per-command default

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    void validate() const;  // ConfigError on bad values
};

// argv without the program name, natural order. Throws ConfigError with a
// usage message on unknown flags or invalid values.
RunConfig parse_args(const std::vector<std::string>& args);

// Dispatches to the module implementing the command; returns the process
// exit code.
int run(const RunConfig& cfg);

}  // namespace negattn

#endif
