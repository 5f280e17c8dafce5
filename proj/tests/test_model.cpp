#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "negattn/dataset.hpp"
#include "negattn/eval.hpp"
#include "negattn/image_io.hpp"
#include "negattn/model.hpp"
#include "negattn/train.hpp"

using namespace negattn;

namespace {

ToyModelConfig tiny_config() {
    ToyModelConfig cfg;
    cfg.unet.c1 = 16;
    cfg.unet.c2 = 24;
    cfg.unet.heads = 2;
    cfg.unet.d_cond = 8;
    cfg.unet.temb_dim = 16;
    cfg.unet.latent_h = 16;
    cfg.unet.latent_w = 16;
    cfg.unet.gn_groups = 4;
    cfg.t_steps = 100;
    return cfg;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("vocabulary basics") {
    Vocabulary v = Vocabulary::standard();
    CHECK(v.id("<null>") == 0);
    CHECK(v.contains("sks"));
    CHECK_THROWS_AS(v.id("doge"), VocabularyError);
    std::vector<int64_t> toks = v.tokenize("a photo of a red circle on blue background");
    CHECK(toks.size() == 9);
    CHECK(Vocabulary::find(toks, v.id("red")) == 4);
}

TEST_CASE("the caption generator never emits the identifier") {
    ToyDataset ds = ToyDataset::generate(128, 7);
    const int64_t sks = Vocabulary::standard().identifier_id();
    for (const LabeledImage& li : ds.images) {
        CHECK(Vocabulary::find(li.caption, sks) == -1);
    }
    CHECK(ds.subject_images.size() == 4);
    for (const LabeledImage& li : ds.subject_images) {
        CHECK(li.is_subject);
        CHECK(li.bg_color == ToyDataset::subject_bg_color());
    }
}

TEST_CASE("dataset generation is deterministic and well-formed") {
    ToyDataset a = ToyDataset::generate(16, 3);
    ToyDataset b = ToyDataset::generate(16, 3);
    for (size_t i = 0; i < a.images.size(); ++i) {
        CHECK(bit_equal(a.images[i].image, b.images[i].image));
        CHECK(a.images[i].caption == b.images[i].caption);
        CHECK(a.images[i].image.shape() == std::vector<int64_t>{3, 32, 32});
        for (int64_t j = 0; j < a.images[i].image.size(); ++j) {
            CHECK(a.images[i].image[j] >= -1.0);
            CHECK(a.images[i].image[j] <= 1.0);
        }
    }
}

TEST_CASE("encode_prompt: empty prompt is the null token row") {
    ToyModel m = ToyModel::create(tiny_config(), 5);
    Tensor c = m.encode_prompt(std::vector<int64_t>{});
    CHECK(c.dim(0) == 1);
    Tensor direct = m.encode_prompt(std::vector<int64_t>{Vocabulary::kNullId});
    CHECK(bit_equal(c, direct));
}

TEST_CASE("encode_prompt: swapping tokens changes only the swapped rows") {
    ToyModel m = ToyModel::create(tiny_config(), 5);
    const int64_t a = m.vocab.id("red"), b = m.vocab.id("blue"), c = m.vocab.id("circle");
    Tensor e1 = m.encode_prompt(std::vector<int64_t>{a, b, c});
    Tensor e2 = m.encode_prompt(std::vector<int64_t>{b, a, c});
    // row 2 unchanged
    for (int64_t j = 0; j < e1.dim(1); ++j) CHECK(e1.at(2, j) == e2.at(2, j));
    // rows 0/1 follow the embedding table: e2[0] = emb[b] + pos[0]
    for (int64_t j = 0; j < e1.dim(1); ++j) {
        CHECK(e2.at(0, j) == doctest::Approx(m.text.token_emb.at(b, j) + m.text.pos_emb.at(0, j)));
        CHECK(e2.at(1, j) == doctest::Approx(m.text.token_emb.at(a, j) + m.text.pos_emb.at(1, j)));
    }
    CHECK(bit_equal(m.encode_prompt(std::vector<int64_t>{a, b, c}), e1));
}

TEST_CASE("latent codec round trip") {
    Rng rng(9);
    Tensor z = gaussian(rng, {3, 16, 16});
    // decode then encode is exact (nearest up, mean of equal values down)
    Tensor round = latent_encode(latent_decode(z));
    CHECK(max_abs_diff(round, z) < 1e-12);
}

TEST_CASE("denoise shape contract and lambda=0 equivalence") {
    ToyModel m = ToyModel::create(tiny_config(), 11);
    Rng rng(12);
    Tensor z = gaussian(rng, {3, 16, 16});
    Tensor cond = m.encode_prompt("a photo of a sks circle");
    Tensor subj = m.encode_prompt("a sks circle");

    AttentionConfig off;
    off.negative_attention_enabled = false;
    Tensor base = m.denoise(z, 50, cond, nullptr, off, nullptr);
    CHECK(base.shape() == z.shape());

    AttentionConfig zero;
    zero.lambda = 0.0;
    Tensor with_zero = m.denoise(z, 50, cond, &subj, zero, nullptr);
    CHECK(bit_equal(base, with_zero));

    AttentionConfig strong;
    strong.lambda = 0.8;
    Tensor suppressed = m.denoise(z, 50, cond, &subj, strong, nullptr);
    CHECK(!bit_equal(base, suppressed));
}

TEST_CASE("denoise records base-resolution maps for the conditional pass") {
    ToyModel m = ToyModel::create(tiny_config(), 13);
    Rng rng(14);
    Tensor z = gaussian(rng, {3, 16, 16});
    std::vector<int64_t> prompt = m.vocab.tokenize("a photo of a sks circle");
    Tensor cond = m.text.encode(prompt);
    Tensor subj = m.encode_prompt("a sks circle");
    MaskState state(16, 16, Vocabulary::find(prompt, m.vocab.identifier_id()));
    AttentionConfig cfg;
    cfg.lambda = 0.5;
    m.denoise(z, 50, cond, &subj, cfg, &state);
    // two 16x16 attention layers x heads
    CHECK(state.accumulated_maps.size() == static_cast<size_t>(2 * m.cfg.unet.heads));
    Tensor bg = finalize_mask(state);
    CHECK(bg.dim(0) == 16);
}

TEST_CASE("full sampling run: lambda=0 equals baseline bit-exactly") {
    ToyModel m = ToyModel::create(tiny_config(), 15);
    GenerationSettings gs;
    gs.sample_steps = 4;
    gs.guidance = 3.0;
    std::vector<int64_t> prompt = m.vocab.tokenize("a photo of a sks circle on green background");
    std::vector<int64_t> subj = m.vocab.tokenize("a sks circle");

    gs.lambda = 0.0;
    gs.negative_attention = true;
    Tensor with_zero = generate_latent(m, prompt, subj, gs, 77);
    gs.negative_attention = false;
    Tensor baseline = generate_latent(m, prompt, subj, gs, 77);
    CHECK(bit_equal(with_zero, baseline));

    gs.negative_attention = true;
    gs.lambda = 0.7;
    Tensor suppressed = generate_latent(m, prompt, subj, gs, 77);
    CHECK(!bit_equal(with_zero, suppressed));

    Tensor again = generate_latent(m, prompt, subj, gs, 77);
    CHECK(bit_equal(suppressed, again));
}

TEST_CASE("checkpoint round trip is bit-exact and byte-stable") {
    ToyModel m = ToyModel::create(tiny_config(), 17);
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "negattn_test_ckpt").string();
    fs::create_directories(dir);
    const std::string p1 = dir + "/a.ckpt", p2 = dir + "/b.ckpt";

    Checkpoint c1 = m.to_checkpoint({{"mode", "base"}, {"steps", 0}});
    c1.save(p1);
    Checkpoint c2 = Checkpoint::load(p1);
    ToyModel m2 = ToyModel::from_checkpoint(c2);
    for (size_t i = 0; i < m.params().size(); ++i) {
        CHECK(bit_equal(*m.params()[i].value, *m2.params()[i].value));
    }
    c2.save(p2);
    CHECK(read_file(p1) == read_file(p2));

    // f32 storage narrows but loads
    const std::string p3 = dir + "/c32.ckpt";
    c1.save(p3, true);
    Checkpoint c3 = Checkpoint::load(p3);
    CHECK(c3.get("text.token_emb").same_shape(c1.get("text.token_emb")));
    CHECK(max_abs_diff(c3.get("text.token_emb"), c1.get("text.token_emb")) < 1e-6);
}

TEST_CASE("model init is deterministic per seed") {
    ToyModel a = ToyModel::create(tiny_config(), 23);
    ToyModel b = ToyModel::create(tiny_config(), 23);
    ToyModel c = ToyModel::create(tiny_config(), 24);
    auto pa = a.params(), pb = b.params(), pc = c.params();
    bool any_diff = false;
    for (size_t i = 0; i < pa.size(); ++i) {
        CHECK(bit_equal(*pa[i].value, *pb[i].value));
        if (!bit_equal(*pa[i].value, *pc[i].value)) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("unet analytic gradients match finite differences") {
    ToyModelConfig cfg = tiny_config();
    cfg.unet.latent_h = 8;
    cfg.unet.latent_w = 8;
    ToyModel m = ToyModel::create(cfg, 29);
    Rng rng(30);
    Tensor z = gaussian(rng, {3, 8, 8});
    std::vector<int64_t> prompt = m.vocab.tokenize("a photo of a red circle");
    Tensor probe = gaussian(rng, {3, 8, 8});

    auto objective = [&]() {
        Tensor cond = m.text.encode(prompt);
        UNet::Cache cache;
        Tensor out = m.unet.forward_train(z, 37, cond, cache);
        double s = 0.0;
        for (int64_t i = 0; i < out.size(); ++i) s += out[i] * probe[i];
        return s;
    };

    m.zero_grads();
    {
        Tensor cond = m.text.encode(prompt);
        UNet::Cache cache;
        m.unet.forward_train(z, 37, cond, cache);
        Tensor dcond = m.unet.backward(cache, probe);
        m.text.backward(prompt, dcond);
    }

    std::vector<ParamRef> params = m.params();
    Rng pick(31);
    int checked = 0;
    for (int trial = 0; trial < 24; ++trial) {
        ParamRef& p = params[pick.below(params.size())];
        if (p.value->size() == 0) continue;
        const int64_t idx = static_cast<int64_t>(pick.below(static_cast<uint64_t>(p.value->size())));
        const double orig = (*p.value)[idx];
        const double h = 1e-5;
        (*p.value)[idx] = orig + h;
        const double up = objective();
        (*p.value)[idx] = orig - h;
        const double dn = objective();
        (*p.value)[idx] = orig;
        const double fd = (up - dn) / (2.0 * h);
        const double an = (*p.grad)[idx];
        const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-6});
        INFO(p.name, "[", idx, "] fd=", fd, " an=", an);
        CHECK(std::fabs(fd - an) / denom < 1e-4);
        ++checked;
    }
    CHECK(checked >= 20);
}
