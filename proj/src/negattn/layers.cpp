#include "negattn/layers.hpp"

#include <cmath>

#include "negattn/kernels.hpp"

namespace negattn {

namespace {
// N(0, 1/sqrt(fan_in)) keeps activations O(1) through the stack.
void init_normal(Tensor& t, int64_t fan_in, Rng& rng) {
    Tensor n = gaussian(rng, t.shape());
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int64_t i = 0; i < t.size(); ++i) t[i] = n[i] * s;
}
}  // namespace

void Linear::init(int64_t in, int64_t out, Rng& rng, bool bias) {
    has_bias = bias;
    w = Tensor({in, out});
    g_w = Tensor({in, out});
    init_normal(w, in, rng);
    if (has_bias) {
        b = Tensor({out});
        g_b = Tensor({out});
    }
}

void Linear::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w, &g_w});
    if (has_bias) out.push_back({prefix + ".b", &b, &g_b});
}

Tensor Linear::forward(const Tensor& x) const {
    Tensor y = matmul(x, w);
    if (has_bias) {
        const int64_t n = y.dim(0), c = y.dim(1);
        for (int64_t i = 0; i < n; ++i) {
            for (int64_t j = 0; j < c; ++j) y.at(i, j) += b[j];
        }
    }
    return y;
}

Tensor Linear::backward(const Tensor& x, const Tensor& dy) {
    add_inplace(g_w, matmul(transpose(x), dy));
    if (has_bias) {
        const int64_t n = dy.dim(0), c = dy.dim(1);
        for (int64_t j = 0; j < c; ++j) {
            double s = 0.0;
            for (int64_t i = 0; i < n; ++i) s += dy.at(i, j);
            g_b[j] += s;
        }
    }
    return matmul(dy, transpose(w));
}

void Conv3x3::init(int64_t in, int64_t out, Rng& rng) {
    cin = in;
    cout = out;
    wm = Tensor({in * 9, out});
    g_wm = Tensor({in * 9, out});
    b = Tensor({out});
    g_b = Tensor({out});
    init_normal(wm, in * 9, rng);
}

void Conv3x3::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &wm, &g_wm});
    out.push_back({prefix + ".b", &b, &g_b});
}

namespace {
Tensor conv_apply(const Tensor& cols, const Tensor& wm, const Tensor& b, int64_t cout,
                  int64_t h, int64_t w) {
    Tensor ym = matmul(cols, wm);  // [H*W, cout]
    Tensor y({cout, h, w});
    for (int64_t p = 0; p < h * w; ++p) {
        for (int64_t co = 0; co < cout; ++co) y[co * h * w + p] = ym.at(p, co) + b[co];
    }
    return y;
}
}  // namespace

Tensor Conv3x3::forward(const Tensor& x) const {
    if (x.dim(0) != cin) {
        throw DimensionError("conv3x3: input " + shape_str(x.shape()) + " expected cin=" +
                             std::to_string(cin));
    }
    return conv_apply(im2col3x3(x), wm, b, cout, x.dim(1), x.dim(2));
}

Tensor Conv3x3::forward_train(const Tensor& x, Tensor& cols_cache) const {
    cols_cache = im2col3x3(x);
    return conv_apply(cols_cache, wm, b, cout, x.dim(1), x.dim(2));
}

Tensor Conv3x3::backward(const Tensor& cols_cache, const Tensor& dy, int64_t h, int64_t w) {
    Tensor dym({h * w, cout});
    for (int64_t p = 0; p < h * w; ++p) {
        for (int64_t co = 0; co < cout; ++co) dym.at(p, co) = dy[co * h * w + p];
    }
    for (int64_t co = 0; co < cout; ++co) {
        double s = 0.0;
        for (int64_t p = 0; p < h * w; ++p) s += dym.at(p, co);
        g_b[co] += s;
    }
    add_inplace(g_wm, matmul(transpose(cols_cache), dym));
    Tensor dcols = matmul(dym, transpose(wm));
    return col2im3x3(dcols, cin, h, w);
}

void Conv1x1::init(int64_t in, int64_t out, Rng& rng) {
    w = Tensor({in, out});
    g_w = Tensor({in, out});
    b = Tensor({out});
    g_b = Tensor({out});
    init_normal(w, in, rng);
}

void Conv1x1::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w, &g_w});
    out.push_back({prefix + ".b", &b, &g_b});
}

Tensor Conv1x1::forward(const Tensor& x) const {
    const int64_t h = x.dim(1), wd = x.dim(2);
    Tensor tk = chw_to_tokens(x);
    Tensor y = matmul(tk, w);
    const int64_t cout = w.dim(1);
    for (int64_t p = 0; p < h * wd; ++p) {
        for (int64_t co = 0; co < cout; ++co) y.at(p, co) += b[co];
    }
    return tokens_to_chw(y, cout, h, wd);
}

Tensor Conv1x1::backward(const Tensor& x, const Tensor& dy) {
    const int64_t h = x.dim(1), wd = x.dim(2);
    Tensor tk = chw_to_tokens(x);
    Tensor dtk = chw_to_tokens(dy);
    add_inplace(g_w, matmul(transpose(tk), dtk));
    const int64_t cout = w.dim(1);
    for (int64_t co = 0; co < cout; ++co) {
        double s = 0.0;
        for (int64_t p = 0; p < h * wd; ++p) s += dtk.at(p, co);
        g_b[co] += s;
    }
    return tokens_to_chw(matmul(dtk, transpose(w)), w.dim(0), h, wd);
}

void GroupNorm::init(int64_t channels, int64_t groups_in) {
    if (channels % groups_in != 0) {
        throw DimensionError("group_norm: channels " + std::to_string(channels) +
                             " not divisible by groups " + std::to_string(groups_in));
    }
    groups = groups_in;
    gamma = Tensor::ones({channels});
    beta = Tensor({channels});
    g_gamma = Tensor({channels});
    g_beta = Tensor({channels});
}

void GroupNorm::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".gamma", &gamma, &g_gamma});
    out.push_back({prefix + ".beta", &beta, &g_beta});
}

Tensor GroupNorm::forward(const Tensor& x) const {
    GroupNormCache scratch;
    return forward_train(x, scratch);
}

Tensor GroupNorm::forward_train(const Tensor& x, GroupNormCache& cache) const {
    const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int64_t cg = c / groups, ng = cg * h * w;
    Tensor y(x.shape());
    cache.xhat = Tensor(x.shape());
    cache.inv_std.assign(static_cast<size_t>(groups), 0.0);
    for (int64_t g = 0; g < groups; ++g) {
        const double* xs = x.data() + g * ng;
        double mean = 0.0;
        for (int64_t i = 0; i < ng; ++i) mean += xs[i];
        mean /= static_cast<double>(ng);
        double var = 0.0;
        for (int64_t i = 0; i < ng; ++i) {
            const double d = xs[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(ng);
        const double inv = 1.0 / std::sqrt(var + kEps);
        cache.inv_std[static_cast<size_t>(g)] = inv;
        for (int64_t i = 0; i < ng; ++i) {
            const int64_t idx = g * ng + i;
            const int64_t ch = idx / (h * w);
            const double xh = (xs[i] - mean) * inv;
            cache.xhat[idx] = xh;
            y[idx] = gamma[ch] * xh + beta[ch];
        }
    }
    return y;
}

Tensor GroupNorm::backward(const GroupNormCache& cache, const Tensor& dy) {
    const int64_t c = gamma.size();
    const int64_t total = cache.xhat.size();
    const int64_t hw = total / c;
    const int64_t cg = c / groups, ng = cg * hw;
    Tensor dx(cache.xhat.shape());
    for (int64_t ch = 0; ch < c; ++ch) {
        double dg = 0.0, db = 0.0;
        for (int64_t i = 0; i < hw; ++i) {
            const int64_t idx = ch * hw + i;
            dg += dy[idx] * cache.xhat[idx];
            db += dy[idx];
        }
        g_gamma[ch] += dg;
        g_beta[ch] += db;
    }
    for (int64_t g = 0; g < groups; ++g) {
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (int64_t i = 0; i < ng; ++i) {
            const int64_t idx = g * ng + i;
            const int64_t ch = idx / hw;
            const double dxhat = dy[idx] * gamma[ch];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * cache.xhat[idx];
        }
        const double inv = cache.inv_std[static_cast<size_t>(g)];
        const double m1 = sum_dxhat / static_cast<double>(ng);
        const double m2 = sum_dxhat_xhat / static_cast<double>(ng);
        for (int64_t i = 0; i < ng; ++i) {
            const int64_t idx = g * ng + i;
            const int64_t ch = idx / hw;
            const double dxhat = dy[idx] * gamma[ch];
            dx[idx] = inv * (dxhat - m1 - cache.xhat[idx] * m2);
        }
    }
    return dx;
}

Tensor silu(const Tensor& x) {
    Tensor y = x;
    for (int64_t i = 0; i < y.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-x[i]));
        y[i] = x[i] * s;
    }
    return y;
}

Tensor silu_backward(const Tensor& x, const Tensor& dy) {
    Tensor dx = x;
    for (int64_t i = 0; i < dx.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-x[i]));
        dx[i] = dy[i] * s * (1.0 + x[i] * (1.0 - s));
    }
    return dx;
}

Tensor avg_pool2(const Tensor& x) {
    const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor y({c, h / 2, w / 2});
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t i = 0; i < h / 2; ++i) {
            for (int64_t j = 0; j < w / 2; ++j) {
                const double s = x[ch * h * w + (2 * i) * w + 2 * j] +
                                 x[ch * h * w + (2 * i) * w + 2 * j + 1] +
                                 x[ch * h * w + (2 * i + 1) * w + 2 * j] +
                                 x[ch * h * w + (2 * i + 1) * w + 2 * j + 1];
                y[ch * (h / 2) * (w / 2) + i * (w / 2) + j] = s * 0.25;
            }
        }
    }
    return y;
}

Tensor avg_pool2_backward(const Tensor& dy, int64_t h, int64_t w) {
    const int64_t c = dy.dim(0);
    Tensor dx({c, h, w});
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t i = 0; i < h; ++i) {
            for (int64_t j = 0; j < w; ++j) {
                dx[ch * h * w + i * w + j] =
                    dy[ch * (h / 2) * (w / 2) + (i / 2) * (w / 2) + j / 2] * 0.25;
            }
        }
    }
    return dx;
}

Tensor upsample_nearest2(const Tensor& x) {
    const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor y({c, 2 * h, 2 * w});
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t i = 0; i < 2 * h; ++i) {
            for (int64_t j = 0; j < 2 * w; ++j) {
                y[ch * 4 * h * w + i * 2 * w + j] = x[ch * h * w + (i / 2) * w + j / 2];
            }
        }
    }
    return y;
}

Tensor upsample_nearest2_backward(const Tensor& dy) {
    const int64_t c = dy.dim(0), h2 = dy.dim(1), w2 = dy.dim(2);
    const int64_t h = h2 / 2, w = w2 / 2;
    Tensor dx({c, h, w});
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t i = 0; i < h; ++i) {
            for (int64_t j = 0; j < w; ++j) {
                double s = 0.0;
                s += dy[ch * h2 * w2 + (2 * i) * w2 + 2 * j];
                s += dy[ch * h2 * w2 + (2 * i) * w2 + 2 * j + 1];
                s += dy[ch * h2 * w2 + (2 * i + 1) * w2 + 2 * j];
                s += dy[ch * h2 * w2 + (2 * i + 1) * w2 + 2 * j + 1];
                dx[ch * h * w + i * w + j] = s;
            }
        }
    }
    return dx;
}

Tensor chw_to_tokens(const Tensor& x) {
    const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor t({h * w, c});
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t p = 0; p < h * w; ++p) t.at(p, ch) = x[ch * h * w + p];
    }
    return t;
}

Tensor tokens_to_chw(const Tensor& t, int64_t c, int64_t h, int64_t w) {
    Tensor x({c, h, w});
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t p = 0; p < h * w; ++p) x[ch * h * w + p] = t.at(p, ch);
    }
    return x;
}

Tensor timestep_embedding(int64_t t, int64_t dim) {
    Tensor e({dim});
    const int64_t half = dim / 2;
    for (int64_t i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                     static_cast<double>(half));
        e[i] = std::sin(static_cast<double>(t) * freq);
        e[half + i] = std::cos(static_cast<double>(t) * freq);
    }
    return e;
}

}  // namespace negattn
