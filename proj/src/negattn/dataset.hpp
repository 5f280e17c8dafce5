#ifndef NEGATTN_DATASET_HPP
#define NEGATTN_DATASET_HPP

#include <string>
#include <vector>

#include "negattn/rng.hpp"
#include "negattn/tensor.hpp"
#include "negattn/text_encoder.hpp"

namespace negattn {

// Color indices into the palettes below.
enum class Shape { kCircle = 0, kSquare = 1, kTriangle = 2 };

struct LabeledImage {
    Tensor image;                   // [3, 32, 32] in [-1, 1]
    std::vector<int64_t> caption;   // token ids
    std::string caption_text;
    int shape = 0;
    int fg_color = 0;   // index into fg_palette
    int bg_color = 0;   // index into bg_palette
    bool accessory = false;
    bool is_subject = false;
};

// 32x32 procedural shapes on flat backgrounds, captioned deterministically.
// The subject is a circle with a magenta/cyan checker texture that the base
// generator never produces; its training images share one background.
struct ToyDataset {
    std::vector<LabeledImage> images;
    std::vector<LabeledImage> subject_images;

    static const std::vector<std::string>& fg_color_names();   // red green blue yellow
    static const std::vector<std::string>& bg_color_names();   // white black blue green orange
    static const std::vector<std::string>& shape_names();      // circle square triangle

    static ToyDataset generate(int64_t count, uint64_t seed, int64_t subject_count = 4);

    // One base-distribution sample (solid shape, random attributes).
    static LabeledImage sample_base(Rng& rng, const Vocabulary& vocab);
    // Subject instance; bg index < 0 draws the canonical subject background
    // (orange). Jitters position slightly.
    static LabeledImage render_subject(Rng& rng, const Vocabulary& vocab, int bg_color = -1);
    // Deterministic render used by tests and the proxy trainer.
    static Tensor render(Shape shape, int fg_color, int bg_color, bool accessory,
                         int64_t cx, int64_t cy, int64_t size, bool subject_texture);

    static int subject_bg_color();  // index of the memorized background
};

// Recontextualization prompt set: the subject in unseen scenes.
struct PromptSet {
    std::vector<std::string> texts;
    std::vector<std::vector<int64_t>> tokens;
};
PromptSet recontext_prompts(const Vocabulary& vocab);

// Subject prompt s: "a <id> <class>".
std::string subject_prompt_text();

}  // namespace negattn

#endif
