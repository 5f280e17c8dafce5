#ifndef NEGATTN_MASK_HPP
#define NEGATTN_MASK_HPP

#include <optional>
#include <vector>

#include "negattn/tensor.hpp"

namespace negattn {

// Per-step recorder for identifier-token attention maps and the derived
// binary background mask. Owned by exactly one sampling run.
//
// Carry scheme: the mask applied during step t is the one finalized at the
// end of step t+1 (all-ones before the first finalize); the maps recorded
// during step t produce the mask for step t-1.
struct MaskState {
    int64_t base_h = 0, base_w = 0;
    // Position of the identifier token in the tokenized main prompt; when the
    // main prompt lacks the identifier, use_aux_branch selects the auxiliary
    // branch and the index refers to the subject prompt instead.
    int64_t identifier_token_index = 0;
    bool use_aux_branch = false;
    std::vector<Tensor> accumulated_maps;         // each [base_h*base_w]
    std::optional<Tensor> background_mask;        // [base_h, base_w], entries in {0,1}

    MaskState() = default;
    MaskState(int64_t h, int64_t w, int64_t token_index)
        : base_h(h), base_w(w), identifier_token_index(token_index) {}

    // Clears the per-step accumulation; called at the start of every
    // denoising step.
    void begin_step() { accumulated_maps.clear(); }
    bool has_recorded() const { return !accumulated_maps.empty(); }
};

// Appends the H per-head identifier-token columns of map_probs [H, N, L] to
// the accumulation. Layers whose spatial token count differs from the base
// resolution are skipped without touching the state.
void record(const Tensor& map_probs, int64_t token_index, MaskState& state);

// Averages the accumulated maps, binarizes by strictly-above-mean (ties go to
// background), inverts to the background mask, stores and returns it.
Tensor finalize_mask(MaskState& state);

// Nearest-neighbor resize of the finalized background mask to h2 x w2,
// flattened row-major.
Tensor mask_for_resolution(const MaskState& state, int64_t h2, int64_t w2);

// All-ones background mask before any finalize; afterwards the most recently
// finalized mask (the carry rule).
Tensor first_step_mask(const MaskState& state);

// first_step_mask resized to a layer's resolution and flattened; what the
// attention layers actually consume.
Tensor carried_mask_for(const MaskState& state, int64_t h2, int64_t w2);

}  // namespace negattn

#endif
