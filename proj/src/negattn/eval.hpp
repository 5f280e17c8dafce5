#ifndef NEGATTN_EVAL_HPP
#define NEGATTN_EVAL_HPP

#include <string>
#include <vector>

#include "negattn/dataset.hpp"
#include "negattn/model.hpp"
#include "negattn/train.hpp"

namespace negattn {

struct ProxyScores {
    double subject_fidelity = 0.0;  // in [0,1]
    double text_alignment = 0.0;    // in [0,1]
};

// One small MLP classifier head on decoded-image pixels.
struct MlpHead {
    Tensor w1, b1, w2, b2;
    Tensor probs(const Tensor& features) const;  // [K]
    int64_t classes() const { return w2.dim(1); }
};

// Deterministic stand-ins for the image/text similarity metrics: per-attribute
// classifiers (shape, shape color, background color, accessory) and a
// subject-vs-rest detector keyed on the subject texture. Trained once on the
// synthetic generator, checkpointed.
struct ProxyHeads {
    MlpHead shape, fg, bg, accessory, subject;
    Vocabulary vocab;
    bool trained = false;

    static ProxyHeads train(uint64_t seed);
    void save(const std::string& path) const;
    static ProxyHeads load(const std::string& path);

    // subject_fidelity: detector confidence. text_alignment: mean indicator
    // over the attributes the prompt asserts (background color, accessory,
    // plus shape/shape-color only when no identifier token is present — with
    // an identifier the class word names the subject rather than a scene
    // constraint).
    ProxyScores score_image(const Tensor& image, const std::vector<int64_t>& prompt_tokens,
                            const std::vector<Tensor>& subject_refs) const;

    double subject_confidence(const Tensor& image) const;
};

struct GenerationSettings {
    double lambda = 0.6;
    bool negative_attention = true;
    bool background_masking = true;
    double guidance = 5.0;
    int64_t sample_steps = 16;
    int64_t mask_resolution = 16;
};

// One full reverse run; prompt/subject tokens already tokenized.
Tensor generate_latent(const ToyModel& model, const std::vector<int64_t>& prompt_tokens,
                       const std::vector<int64_t>& subject_tokens, const GenerationSettings& gs,
                       uint64_t seed,
                       std::vector<std::pair<int64_t, Tensor>>* mask_log = nullptr);

struct EvalRow {
    std::string arm;
    double lambda = 0.0;
    double ppl_weight = 0.0;
    int64_t seed = 0;
    int64_t prompt_id = 0;
    double subject_fidelity = 0.0;
    double text_alignment = 0.0;
};

// CSV: header arm,lambda,ppl_weight,seed,prompt_id,subject_fidelity,
// text_alignment; LF endings; reals as 6-decimal fixed point.
std::string to_csv(const std::vector<EvalRow>& rows);

struct SweepSpec {
    std::vector<double> lambda_values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<uint64_t> seeds;
    std::vector<std::vector<int64_t>> prompts;
    std::vector<double> ppl_weights = {0.1, 0.5, 0.75, 1.0};
    GenerationSettings gen;
    std::vector<int64_t> subject_tokens;
    std::vector<Tensor> subject_refs;
    int64_t jobs = 1;
    void validate() const;
};

// One row per (lambda, seed, prompt) plus "sweep-mean" aggregate rows per
// lambda (seed/prompt_id = -1), deterministic order.
std::vector<EvalRow> run_lambda_sweep(const ToyModel& model, const ProxyHeads& heads,
                                      const SweepSpec& spec);

// Arms: "baseline" (no negative attention), "no_mask" (negative attention,
// masking off), "masked" (full method), all at the given lambda, plus per-arm
// mean rows.
std::vector<EvalRow> run_ablation(const ToyModel& model, const ProxyHeads& heads, double lambda,
                                  const SweepSpec& spec);

// Trains one DreamBooth arm per ppl weight plus a plain arm swept over
// lambda. plain_db, when given, is reused as the ppl_weight = 0 / lambda
// sweep checkpoint instead of retraining.
struct PplCompareConfig {
    int64_t finetune_steps = 160;
    FinetuneHyper finetune;
};
std::vector<EvalRow> run_ppl_comparison(const Checkpoint& base,
                                        const std::vector<LabeledImage>& subject_images,
                                        const ProxyHeads& heads, const SweepSpec& spec,
                                        const PplCompareConfig& cfg,
                                        const Checkpoint* plain_db = nullptr);

// Mean (fidelity, alignment) per arm label + parameter, for Pareto reports.
struct ArmPoint {
    std::string arm;
    double param = 0.0;
    double fidelity = 0.0;
    double alignment = 0.0;
};
std::vector<ArmPoint> aggregate_mean_rows(const std::vector<EvalRow>& rows);
bool pareto_dominates(const ArmPoint& a, const ArmPoint& b);

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

// q95 of detector scores on subject-free images, plus a small margin.
double subject_absent_threshold(std::vector<double> absent_scores);

}  // namespace negattn

#endif
