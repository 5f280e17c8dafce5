#include "negattn/dataset.hpp"

#include <array>
#include <cmath>

namespace negattn {

namespace {

struct Rgb {
    double r, g, b;
};

const std::array<Rgb, 4> kFgPalette = {{
    {1.0, -1.0, -1.0},   // red
    {-1.0, 1.0, -1.0},   // green
    {-1.0, -1.0, 1.0},   // blue
    {1.0, 1.0, -1.0},    // yellow
}};

const std::array<Rgb, 5> kBgPalette = {{
    {1.0, 1.0, 1.0},     // white
    {-1.0, -1.0, -1.0},  // black
    {-1.0, -1.0, 1.0},   // blue
    {-1.0, 1.0, -1.0},   // green
    {1.0, 0.0, -1.0},    // orange
}};

constexpr Rgb kSubjectA = {1.0, -1.0, 1.0};   // magenta
constexpr Rgb kSubjectB = {-1.0, 1.0, 1.0};   // cyan
constexpr int kSubjectBg = 4;                 // orange
constexpr int64_t kSide = 32;

void put(Tensor& img, int64_t x, int64_t y, const Rgb& c) {
    img[0 * kSide * kSide + y * kSide + x] = c.r;
    img[1 * kSide * kSide + y * kSide + x] = c.g;
    img[2 * kSide * kSide + y * kSide + x] = c.b;
}

bool inside_shape(Shape shape, int64_t x, int64_t y, int64_t cx, int64_t cy, int64_t size) {
    const double dx = static_cast<double>(x - cx), dy = static_cast<double>(y - cy);
    switch (shape) {
        case Shape::kCircle:
            return dx * dx + dy * dy <= static_cast<double>(size * size);
        case Shape::kSquare:
            return std::abs(x - cx) <= size && std::abs(y - cy) <= size;
        case Shape::kTriangle: {
            // upward triangle: apex (cx, cy-size), base y = cy+size
            if (y < cy - size || y > cy + size) return false;
            const double frac = static_cast<double>(y - (cy - size)) / (2.0 * size);
            return std::abs(dx) <= frac * size;
        }
    }
    return false;
}

}  // namespace

const std::vector<std::string>& ToyDataset::fg_color_names() {
    static const std::vector<std::string> n = {"red", "green", "blue", "yellow"};
    return n;
}

const std::vector<std::string>& ToyDataset::bg_color_names() {
    static const std::vector<std::string> n = {"white", "black", "blue", "green", "orange"};
    return n;
}

const std::vector<std::string>& ToyDataset::shape_names() {
    static const std::vector<std::string> n = {"circle", "square", "triangle"};
    return n;
}

int ToyDataset::subject_bg_color() { return kSubjectBg; }

Tensor ToyDataset::render(Shape shape, int fg_color, int bg_color, bool accessory, int64_t cx,
                          int64_t cy, int64_t size, bool subject_texture) {
    Tensor img({3, kSide, kSide});
    const Rgb bg = kBgPalette[static_cast<size_t>(bg_color)];
    const Rgb fg = kFgPalette[static_cast<size_t>(fg_color)];
    for (int64_t y = 0; y < kSide; ++y) {
        for (int64_t x = 0; x < kSide; ++x) {
            if (inside_shape(shape, x, y, cx, cy, size)) {
                if (subject_texture) {
                    // 4x4-px checker: coarse enough to survive 2x pooling
                    const bool a = ((x / 4) + (y / 4)) % 2 == 0;
                    put(img, x, y, a ? kSubjectA : kSubjectB);
                } else {
                    put(img, x, y, fg);
                }
            } else {
                put(img, x, y, bg);
            }
        }
    }
    if (accessory) {
        // four-point star glyph in the top-left corner, yellow unless the
        // scene already uses yellow, then red
        const bool clash = (!subject_texture && fg_color == 3) || bg_color == 0;
        const Rgb star = clash ? kFgPalette[0] : kFgPalette[3];
        const int64_t sx = 5, sy = 5;
        for (int64_t d = -3; d <= 3; ++d) {
            if (sx + d >= 0 && sx + d < kSide) put(img, sx + d, sy, star);
            if (sy + d >= 0 && sy + d < kSide) put(img, sx, sy + d, star);
        }
        for (int64_t d = -1; d <= 1; ++d) {
            put(img, sx + d, sy - 1, star);
            put(img, sx + d, sy + 1, star);
        }
    }
    return img;
}

LabeledImage ToyDataset::sample_base(Rng& rng, const Vocabulary& vocab) {
    LabeledImage li;
    li.shape = static_cast<int>(rng.below(3));
    li.fg_color = static_cast<int>(rng.below(kFgPalette.size()));
    // avoid same-named fg/bg (invisible shape): bg "blue"/"green" collide
    // with fg indices 2/1
    while (true) {
        li.bg_color = static_cast<int>(rng.below(kBgPalette.size()));
        const bool clash = (li.bg_color == 2 && li.fg_color == 2) ||
                           (li.bg_color == 3 && li.fg_color == 1);
        if (!clash) break;
    }
    li.accessory = rng.below(10) < 3;
    const int64_t cx = 16 + static_cast<int64_t>(rng.below(7)) - 3;
    const int64_t cy = 16 + static_cast<int64_t>(rng.below(7)) - 3;
    const int64_t size = 8 + static_cast<int64_t>(rng.below(3));
    li.image = render(static_cast<Shape>(li.shape), li.fg_color, li.bg_color, li.accessory, cx, cy,
                      size, false);
    li.caption_text = "a photo of a " + fg_color_names()[static_cast<size_t>(li.fg_color)] + " " +
                      shape_names()[static_cast<size_t>(li.shape)] + " on " +
                      bg_color_names()[static_cast<size_t>(li.bg_color)] + " background";
    if (li.accessory) li.caption_text += " with a star";
    li.caption = vocab.tokenize(li.caption_text);
    return li;
}

LabeledImage ToyDataset::render_subject(Rng& rng, const Vocabulary& vocab, int bg_color) {
    LabeledImage li;
    li.is_subject = true;
    li.shape = static_cast<int>(Shape::kCircle);
    li.fg_color = 0;  // unused under the subject texture
    li.bg_color = bg_color < 0 ? kSubjectBg : bg_color;
    const int64_t cx = 16 + static_cast<int64_t>(rng.below(5)) - 2;
    const int64_t cy = 16 + static_cast<int64_t>(rng.below(5)) - 2;
    const int64_t size = 9 + static_cast<int64_t>(rng.below(2));
    li.image = render(Shape::kCircle, li.fg_color, li.bg_color, false, cx, cy, size, true);
    li.caption_text = "a photo of a sks circle";
    li.caption = vocab.tokenize(li.caption_text);
    return li;
}

ToyDataset ToyDataset::generate(int64_t count, uint64_t seed, int64_t subject_count) {
    const Vocabulary vocab = Vocabulary::standard();
    ToyDataset ds;
    Rng base_rng = Rng(seed).child(1);
    ds.images.reserve(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) ds.images.push_back(sample_base(base_rng, vocab));
    Rng subj_rng = Rng(seed).child(2);
    for (int64_t i = 0; i < subject_count; ++i) {
        ds.subject_images.push_back(render_subject(subj_rng, vocab));
    }
    return ds;
}

PromptSet recontext_prompts(const Vocabulary& vocab) {
    PromptSet ps;
    ps.texts = {
        "a photo of a sks circle on white background",
        "a photo of a sks circle on black background",
        "a photo of a sks circle on blue background",
        "a photo of a sks circle on green background",
        "a photo of a sks circle on white background with a star",
        "a photo of a sks circle on black background with a star",
        "a photo of a sks circle on blue background with a star",
        "a photo of a sks circle on green background with a star",
    };
    for (const std::string& t : ps.texts) ps.tokens.push_back(vocab.tokenize(t));
    return ps;
}

std::string subject_prompt_text() { return "a sks circle"; }

}  // namespace negattn
