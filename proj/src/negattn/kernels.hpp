#ifndef NEGATTN_KERNELS_HPP
#define NEGATTN_KERNELS_HPP

#include "negattn/tensor.hpp"

namespace negattn {

// Data-parallel kernels. The default entry points parallelize with OpenMP
// over independent output elements; every output element is produced by
// exactly one thread with a fixed arithmetic order, so results are
// bit-identical to the serial reference twins in negattn::ref (asserted by
// tests, compared by tools/bench).
//
// matmul accumulates strictly left-to-right over the inner dimension.

Tensor matmul(const Tensor& a, const Tensor& b);   // [m,k] x [k,n] -> [m,n]
Tensor softmax_rows(const Tensor& a);              // [m,n] max-subtracted rows
Tensor resize_nearest(const Tensor& a, int64_t h2, int64_t w2);
Tensor transpose(const Tensor& a);                 // [m,n] -> [n,m]

// 3x3 same-padding conv support: feature maps are [C, H, W] row-major.
// Patch matrix layout: row = spatial index y*W+x, column = ci*9 + ky*3 + kx.
Tensor im2col3x3(const Tensor& x);                              // [C,H,W] -> [H*W, C*9]
Tensor col2im3x3(const Tensor& cols, int64_t c, int64_t h, int64_t w);  // adjoint gather

namespace ref {
// Serial references kept for the kernel equivalence tests; same per-element
// loops as the OpenMP versions.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& a);
Tensor resize_nearest(const Tensor& a, int64_t h2, int64_t w2);
}  // namespace ref

}  // namespace negattn

#endif
