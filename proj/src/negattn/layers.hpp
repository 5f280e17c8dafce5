#ifndef NEGATTN_LAYERS_HPP
#define NEGATTN_LAYERS_HPP

#include <string>
#include <vector>

#include "negattn/rng.hpp"
#include "negattn/tensor.hpp"

namespace negattn {

// Named handle onto a parameter tensor and its gradient buffer; the optimizer
// and the checkpoint writer both walk these.
struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

// y = x W (+ b). x: [n, in].
struct Linear {
    Tensor w, b, g_w, g_b;
    bool has_bias = true;

    void init(int64_t in, int64_t out, Rng& rng, bool bias = true);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    Tensor forward(const Tensor& x) const;
    Tensor backward(const Tensor& x, const Tensor& dy);  // returns dx, accumulates grads
};

// 3x3 same-padding conv on [C,H,W] maps, stored as the im2col weight matrix.
struct Conv3x3 {
    Tensor wm;  // [cin*9, cout]
    Tensor b;   // [cout]
    Tensor g_wm, g_b;
    int64_t cin = 0, cout = 0;

    void init(int64_t in, int64_t out, Rng& rng);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    Tensor forward(const Tensor& x) const;
    Tensor forward_train(const Tensor& x, Tensor& cols_cache) const;
    Tensor backward(const Tensor& cols_cache, const Tensor& dy, int64_t h, int64_t w);
};

// 1x1 conv, i.e. a per-pixel channel mix.
struct Conv1x1 {
    Tensor w;  // [cin, cout]
    Tensor b;  // [cout]
    Tensor g_w, g_b;

    void init(int64_t in, int64_t out, Rng& rng);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    Tensor forward(const Tensor& x) const;
    Tensor backward(const Tensor& x, const Tensor& dy);
};

struct GroupNormCache {
    Tensor xhat;
    std::vector<double> inv_std;  // per group
};

struct GroupNorm {
    Tensor gamma, beta, g_gamma, g_beta;
    int64_t groups = 8;
    static constexpr double kEps = 1e-5;

    void init(int64_t channels, int64_t groups_in);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    Tensor forward(const Tensor& x) const;
    Tensor forward_train(const Tensor& x, GroupNormCache& cache) const;
    Tensor backward(const GroupNormCache& cache, const Tensor& dy);
};

Tensor silu(const Tensor& x);
Tensor silu_backward(const Tensor& x, const Tensor& dy);

Tensor avg_pool2(const Tensor& x);                 // [C,H,W] -> [C,H/2,W/2]
Tensor avg_pool2_backward(const Tensor& dy, int64_t h, int64_t w);
Tensor upsample_nearest2(const Tensor& x);         // [C,H,W] -> [C,2H,2W]
Tensor upsample_nearest2_backward(const Tensor& dy);

// [C,H,W] <-> [H*W, C] (attention token layout)
Tensor chw_to_tokens(const Tensor& x);
Tensor tokens_to_chw(const Tensor& t, int64_t c, int64_t h, int64_t w);

// Sinusoidal timestep features, dim even: first half sin, second half cos.
Tensor timestep_embedding(int64_t t, int64_t dim);

}  // namespace negattn

#endif
