#include "negattn/kernels.hpp"

#include <cmath>

namespace negattn {

namespace {

void check_matmul_shapes(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    }
}

// One output row: out[j] = sum_k a_row[k] * b[k, j], k strictly ascending.
inline void matmul_row(const double* a_row, const double* b, double* out, int64_t k, int64_t n) {
    for (int64_t j = 0; j < n; ++j) out[j] = 0.0;
    for (int64_t kk = 0; kk < k; ++kk) {
        const double aik = a_row[kk];
        const double* b_row = b + kk * n;
        for (int64_t j = 0; j < n; ++j) out[j] += aik * b_row[j];
    }
}

inline void softmax_row(const double* in, double* out, int64_t n) {
    double mx = in[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (int64_t j = 0; j < n; ++j) {
        out[j] = std::exp(in[j] - mx);
        sum += out[j];
    }
    double inv = 1.0 / sum;
    for (int64_t j = 0; j < n; ++j) out[j] *= inv;
}

inline int64_t nearest_src(int64_t i, int64_t dst, int64_t src) {
    // floor((i + 0.5) * src / dst), clamped for rounding at the top edge
    int64_t s = static_cast<int64_t>(std::floor((static_cast<double>(i) + 0.5) *
                                                static_cast<double>(src) / static_cast<double>(dst)));
    return std::min(s, src - 1);
}

void check_resize_args(const Tensor& a, int64_t h2, int64_t w2) {
    if (a.rank() != 2) {
        throw DimensionError("resize_nearest: expected rank-2 input, got " + shape_str(a.shape()));
    }
    if (a.dim(0) < 1 || a.dim(1) < 1 || h2 < 1 || w2 < 1) {
        throw DimensionError("resize_nearest: sizes must be >= 1");
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_matmul_shapes(a, b);
    const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    const double* ap = a.data();
    const double* bp = b.data();
    double* op = out.data();
#pragma omp parallel for schedule(static) if (m * n * k > 32768)
    for (int64_t i = 0; i < m; ++i) {
        matmul_row(ap + i * k, bp, op + i * n, k, n);
    }
    return out;
}

Tensor ref::matmul(const Tensor& a, const Tensor& b) {
    check_matmul_shapes(a, b);
    const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    for (int64_t i = 0; i < m; ++i) {
        matmul_row(a.data() + i * k, b.data(), out.data() + i * n, k, n);
    }
    return out;
}

Tensor softmax_rows(const Tensor& a) {
    if (a.rank() != 2) {
        throw DimensionError("softmax_rows: expected rank-2 input, got " + shape_str(a.shape()));
    }
    const int64_t m = a.dim(0), n = a.dim(1);
    Tensor out({m, n});
#pragma omp parallel for schedule(static) if (m * n > 16384)
    for (int64_t i = 0; i < m; ++i) {
        softmax_row(a.data() + i * n, out.data() + i * n, n);
    }
    return out;
}

Tensor ref::softmax_rows(const Tensor& a) {
    if (a.rank() != 2) {
        throw DimensionError("softmax_rows: expected rank-2 input, got " + shape_str(a.shape()));
    }
    const int64_t m = a.dim(0), n = a.dim(1);
    Tensor out({m, n});
    for (int64_t i = 0; i < m; ++i) {
        softmax_row(a.data() + i * n, out.data() + i * n, n);
    }
    return out;
}

Tensor resize_nearest(const Tensor& a, int64_t h2, int64_t w2) {
    check_resize_args(a, h2, w2);
    const int64_t h = a.dim(0), w = a.dim(1);
    Tensor out({h2, w2});
#pragma omp parallel for schedule(static) if (h2 * w2 > 16384)
    for (int64_t i = 0; i < h2; ++i) {
        const int64_t si = nearest_src(i, h2, h);
        for (int64_t j = 0; j < w2; ++j) {
            out.at(i, j) = a.at(si, nearest_src(j, w2, w));
        }
    }
    return out;
}

Tensor ref::resize_nearest(const Tensor& a, int64_t h2, int64_t w2) {
    check_resize_args(a, h2, w2);
    const int64_t h = a.dim(0), w = a.dim(1);
    Tensor out({h2, w2});
    for (int64_t i = 0; i < h2; ++i) {
        const int64_t si = nearest_src(i, h2, h);
        for (int64_t j = 0; j < w2; ++j) {
            out.at(i, j) = a.at(si, nearest_src(j, w2, w));
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) {
        throw DimensionError("transpose: expected rank-2 input, got " + shape_str(a.shape()));
    }
    const int64_t m = a.dim(0), n = a.dim(1);
    Tensor out({n, m});
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    }
    return out;
}

Tensor im2col3x3(const Tensor& x) {
    if (x.rank() != 3) {
        throw DimensionError("im2col3x3: expected [C,H,W], got " + shape_str(x.shape()));
    }
    const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor cols({h * w, c * 9});
    const double* xp = x.data();
    double* cp = cols.data();
#pragma omp parallel for schedule(static) if (h * w * c > 8192)
    for (int64_t p = 0; p < h * w; ++p) {
        const int64_t y = p / w, xx = p % w;
        double* row = cp + p * c * 9;
        for (int64_t ci = 0; ci < c; ++ci) {
            const double* plane = xp + ci * h * w;
            for (int64_t ky = 0; ky < 3; ++ky) {
                const int64_t sy = y + ky - 1;
                for (int64_t kx = 0; kx < 3; ++kx) {
                    const int64_t sx = xx + kx - 1;
                    row[ci * 9 + ky * 3 + kx] =
                        (sy >= 0 && sy < h && sx >= 0 && sx < w) ? plane[sy * w + sx] : 0.0;
                }
            }
        }
    }
    return cols;
}

Tensor col2im3x3(const Tensor& cols, int64_t c, int64_t h, int64_t w) {
    if (cols.rank() != 2 || cols.dim(0) != h * w || cols.dim(1) != c * 9) {
        throw DimensionError("col2im3x3: got " + shape_str(cols.shape()) + " for c=" +
                             std::to_string(c) + " h=" + std::to_string(h) + " w=" + std::to_string(w));
    }
    Tensor x({c, h, w});
    const double* cp = cols.data();
    double* xp = x.data();
    // Gather form of the adjoint: each input pixel sums the <=9 patch slots
    // that read it, in fixed (ky, kx) order.
#pragma omp parallel for schedule(static) if (h * w * c > 8192)
    for (int64_t idx = 0; idx < c * h * w; ++idx) {
        const int64_t ci = idx / (h * w);
        const int64_t iy = (idx / w) % h;
        const int64_t ix = idx % w;
        double acc = 0.0;
        for (int64_t ky = 0; ky < 3; ++ky) {
            const int64_t oy = iy - ky + 1;
            if (oy < 0 || oy >= h) continue;
            for (int64_t kx = 0; kx < 3; ++kx) {
                const int64_t ox = ix - kx + 1;
                if (ox < 0 || ox >= w) continue;
                acc += cp[(oy * w + ox) * c * 9 + ci * 9 + ky * 3 + kx];
            }
        }
        xp[idx] = acc;
    }
    return x;
}

}  // namespace negattn
