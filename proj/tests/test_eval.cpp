#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "negattn/eval.hpp"
#include "negattn/image_io.hpp"

using namespace negattn;

namespace {
const ProxyHeads& heads() {
    static ProxyHeads h = ProxyHeads::train(555);
    return h;
}
const Vocabulary& vocab() {
    static Vocabulary v = Vocabulary::standard();
    return v;
}
}  // namespace

TEST_CASE("subject reference scores near one against itself") {
    ToyDataset ds = ToyDataset::generate(0, 1013);
    std::vector<Tensor> refs;
    for (const LabeledImage& li : ds.subject_images) refs.push_back(li.image);
    for (const LabeledImage& li : ds.subject_images) {
        ProxyScores sc = heads().score_image(li.image, li.caption, refs);
        CHECK(sc.subject_fidelity >= 0.99);
    }
}

TEST_CASE("plain shapes score as non-subject") {
    Rng rng(71);
    for (int i = 0; i < 8; ++i) {
        LabeledImage li = ToyDataset::sample_base(rng, vocab());
        CHECK(heads().subject_confidence(li.image) < 0.2);
    }
}

TEST_CASE("wrong color zeroes that attribute's contribution") {
    // red circle on white background, prompt asks blue
    Tensor img = ToyDataset::render(Shape::kCircle, 0, 0, false, 16, 16, 9, false);
    std::vector<int64_t> truthful = vocab().tokenize("a photo of a red circle on white background");
    std::vector<int64_t> wrong = vocab().tokenize("a photo of a blue circle on white background");
    ProxyScores t = heads().score_image(img, truthful, {});
    ProxyScores w = heads().score_image(img, wrong, {});
    CHECK(t.text_alignment == doctest::Approx(1.0));
    // bg + shape still match, fg does not: 2/3
    CHECK(w.text_alignment == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("scores are deterministic (mid-gray fixture)") {
    Tensor gray = Tensor({3, 32, 32});
    std::vector<int64_t> prompt = vocab().tokenize("a photo of a sks circle on green background");
    ProxyScores a = heads().score_image(gray, prompt, {});
    ProxyScores b = heads().score_image(gray, prompt, {});
    CHECK(a.subject_fidelity == b.subject_fidelity);
    CHECK(a.text_alignment == b.text_alignment);
    CHECK(a.subject_fidelity >= 0.0);
    CHECK(a.subject_fidelity <= 1.0);
}

TEST_CASE("alignment ignores the class word when an identifier is present") {
    // the subject render has no star and sits on orange background
    Tensor img = ToyDataset::render(Shape::kCircle, 0, 4, false, 16, 16, 9, true);
    std::vector<int64_t> p = vocab().tokenize("a photo of a sks circle on orange background");
    ProxyScores sc = heads().score_image(img, p, {});
    CHECK(sc.text_alignment == doctest::Approx(1.0));  // only bg scored, correct
}

TEST_CASE("csv formatting is exact") {
    std::vector<EvalRow> rows = {{"sweep", 0.0, 0.0, 3, 1, 0.5, 0.25},
                                 {"sweep-mean", 1.0, 0.75, -1, -1, 0.123456789, 1.0}};
    const std::string csv = to_csv(rows);
    const std::string expect =
        "arm,lambda,ppl_weight,seed,prompt_id,subject_fidelity,text_alignment\n"
        "sweep,0.000000,0.000000,3,1,0.500000,0.250000\n"
        "sweep-mean,1.000000,0.750000,-1,-1,0.123457,1.000000\n";
    CHECK(csv == expect);
}

TEST_CASE("spearman rank correlation") {
    CHECK(spearman_rho({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman_rho({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
    CHECK(spearman_rho({1, 2, 3, 4}, {1, 1, 1, 1}) == doctest::Approx(0.0));
    const double rho = spearman_rho({1, 2, 3, 4, 5, 6}, {2, 1, 3, 4, 6, 5});
    CHECK(rho > 0.6);
}

TEST_CASE("subject-absent threshold is q95 plus margin") {
    std::vector<double> scores;
    for (int i = 1; i <= 100; ++i) scores.push_back(i / 1000.0);  // 0.001..0.100
    CHECK(subject_absent_threshold(scores) == doctest::Approx(0.095 + 0.05));
    CHECK_THROWS_AS(subject_absent_threshold({}), ConfigError);
}

TEST_CASE("pareto dominance") {
    ArmPoint a{"negattn", 0.5, 0.8, 0.9};
    ArmPoint b{"ppl", 0.1, 0.7, 0.9};
    ArmPoint c{"ppl", 0.5, 0.9, 0.95};
    CHECK(pareto_dominates(a, b));
    CHECK(!pareto_dominates(a, c));
    CHECK(!pareto_dominates(a, a));
}

TEST_CASE("lambda sweep emits the full grid plus aggregates") {
    ToyModelConfig cfg;
    cfg.unet.c1 = 16;
    cfg.unet.c2 = 24;
    cfg.unet.heads = 2;
    cfg.unet.d_cond = 8;
    cfg.unet.temb_dim = 16;
    cfg.unet.gn_groups = 4;
    cfg.t_steps = 50;
    ToyModel m = ToyModel::create(cfg, 81);

    SweepSpec spec;
    spec.lambda_values = {0.0, 0.6};
    spec.seeds = {5, 6};
    PromptSet ps = recontext_prompts(m.vocab);
    spec.prompts = {ps.tokens[0]};
    spec.subject_tokens = m.vocab.tokenize("a sks circle");
    spec.gen.sample_steps = 3;
    spec.gen.guidance = 2.0;
    std::vector<EvalRow> rows = run_lambda_sweep(m, heads(), spec);
    // 2 lambdas x 2 seeds x 1 prompt + 2 aggregate rows
    CHECK(rows.size() == 6);
    CHECK(rows[0].lambda == 0.0);
    CHECK(rows[0].arm == "sweep");
    CHECK(rows[4].arm == "sweep-mean");
    CHECK(rows[4].seed == -1);
    // deterministic reruns produce identical bytes
    std::vector<EvalRow> again = run_lambda_sweep(m, heads(), spec);
    CHECK(to_csv(rows) == to_csv(again));
    // parallel cells produce the identical table
    spec.jobs = 2;
    std::vector<EvalRow> par = run_lambda_sweep(m, heads(), spec);
    CHECK(to_csv(rows) == to_csv(par));

    SweepSpec bad = spec;
    bad.seeds.clear();
    CHECK_THROWS_AS(run_lambda_sweep(m, heads(), bad), ConfigError);
}

TEST_CASE("ablation arms and consistency with the lambda=0 path") {
    ToyModelConfig cfg;
    cfg.unet.c1 = 16;
    cfg.unet.c2 = 24;
    cfg.unet.heads = 2;
    cfg.unet.d_cond = 8;
    cfg.unet.temb_dim = 16;
    cfg.unet.gn_groups = 4;
    cfg.t_steps = 50;
    ToyModel m = ToyModel::create(cfg, 83);

    SweepSpec spec;
    spec.lambda_values = {0.0};
    spec.seeds = {9};
    PromptSet ps = recontext_prompts(m.vocab);
    spec.prompts = {ps.tokens[1]};
    spec.subject_tokens = m.vocab.tokenize("a sks circle");
    spec.gen.sample_steps = 3;
    spec.gen.guidance = 2.0;

    std::vector<EvalRow> ab = run_ablation(m, heads(), 0.6, spec);
    CHECK(ab.size() == 6);  // 3 arms x 1 cell + 3 means
    CHECK(ab[0].arm == "baseline");
    CHECK(ab[1].arm == "no_mask");
    CHECK(ab[2].arm == "masked");

    std::vector<EvalRow> sweep = run_lambda_sweep(m, heads(), spec);
    CHECK(ab[0].subject_fidelity == sweep[0].subject_fidelity);
    CHECK(ab[0].text_alignment == sweep[0].text_alignment);
}
