#include "negattn/mask.hpp"

#include "negattn/kernels.hpp"

namespace negattn {

void record(const Tensor& map_probs, int64_t token_index, MaskState& state) {
    if (map_probs.rank() != 3) {
        throw DimensionError("record: expected probs [H,N,L], got " + shape_str(map_probs.shape()));
    }
    const int64_t heads = map_probs.dim(0), n = map_probs.dim(1), l = map_probs.dim(2);
    if (token_index < 0 || token_index >= l) {
        throw IndexError("record: token index " + std::to_string(token_index) +
                         " out of range for L=" + std::to_string(l));
    }
    if (n != state.base_h * state.base_w) return;  // non-base resolution: skip
    for (int64_t h = 0; h < heads; ++h) {
        Tensor col({n});
        for (int64_t i = 0; i < n; ++i) col[i] = map_probs[h * n * l + i * l + token_index];
        state.accumulated_maps.push_back(std::move(col));
    }
}

Tensor finalize_mask(MaskState& state) {
    if (state.accumulated_maps.empty()) {
        throw StateError("finalize_mask: no maps recorded this step");
    }
    const int64_t n = state.base_h * state.base_w;
    Tensor avg({n});
    for (const Tensor& m : state.accumulated_maps) {
        if (m.size() != n) throw DimensionError("finalize_mask: accumulated map of wrong length");
        add_inplace(avg, m);
    }
    const double inv_count = 1.0 / static_cast<double>(state.accumulated_maps.size());
    for (int64_t i = 0; i < n; ++i) avg[i] *= inv_count;

    double mean = 0.0;
    for (int64_t i = 0; i < n; ++i) mean += avg[i];
    mean /= static_cast<double>(n);

    // subject = strictly above mean; background is its exact complement
    Tensor background({state.base_h, state.base_w});
    for (int64_t i = 0; i < n; ++i) background[i] = avg[i] > mean ? 0.0 : 1.0;
    state.background_mask = background;
    return background;
}

Tensor mask_for_resolution(const MaskState& state, int64_t h2, int64_t w2) {
    if (!state.background_mask) {
        throw StateError("mask_for_resolution: no finalized mask");
    }
    Tensor resized = resize_nearest(*state.background_mask, h2, w2);
    return resized.reshaped({h2 * w2});
}

Tensor first_step_mask(const MaskState& state) {
    if (state.background_mask) return *state.background_mask;
    return Tensor::ones({state.base_h, state.base_w});
}

Tensor carried_mask_for(const MaskState& state, int64_t h2, int64_t w2) {
    Tensor base = first_step_mask(state);
    return resize_nearest(base, h2, w2).reshaped({h2 * w2});
}

}  // namespace negattn
