#ifndef NEGATTN_TRAIN_HPP
#define NEGATTN_TRAIN_HPP

#include "negattn/dataset.hpp"
#include "negattn/model.hpp"

namespace negattn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct Adam {
    AdamConfig cfg;
    std::vector<Tensor> m, v;
    int64_t t = 0;

    void init(const std::vector<ParamRef>& params, const AdamConfig& cfg_in);
    void step(std::vector<ParamRef>& params);
};

struct TrainHyper {
    int64_t batch = 4;
    double lr = 1e-3;
    double cond_drop_prob = 0.1;  // unconditional training share for CFG
    ToyModelConfig model;
};

struct TrainStats {
    double initial_running_loss = 0.0;
    double final_running_loss = 0.0;
};

// Base training per the MSE noise-prediction objective. Seeds weights, batch
// order and noise from `rng`; NaN loss raises TrainingError with the step.
Checkpoint train_base(const ToyDataset& data, int64_t steps, Rng& rng, const TrainHyper& hp = {},
                      TrainStats* stats = nullptr, uint64_t dataset_seed = 0);

struct FinetuneHyper {
    int64_t batch = 4;          // subject images per step
    double lr = 5e-4;
    int64_t prior_count = 8;    // class images generated from the base model
    int64_t prior_sample_steps = 16;
    double prior_guidance = 3.0;
};

// DreamBooth-style fine-tune on the subject set, captioned
// "a photo of a <id> <class>"; ppl_weight > 0 adds the weighted MSE term on
// model-generated class images captioned "a photo of a <class>".
Checkpoint finetune_dreambooth(const Checkpoint& base, const std::vector<LabeledImage>& subject_images,
                               const std::string& identifier, double ppl_weight, int64_t steps,
                               Rng& rng, const FinetuneHyper& hp = {});

}  // namespace negattn

#endif
