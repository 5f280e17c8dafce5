// Serial-reference vs OpenMP kernel comparison: times both variants and
// checks they agree bit-for-bit.
#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "negattn/kernels.hpp"
#include "negattn/rng.hpp"

using namespace negattn;

namespace {

using clock_type = std::chrono::steady_clock;

double time_ms(const std::function<Tensor()>& fn, int reps, Tensor& out) {
    out = fn();  // warmup + result capture
    auto t0 = clock_type::now();
    for (int i = 0; i < reps; ++i) {
        Tensor r = fn();
    }
    auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, const std::function<Tensor()>& serial,
            const std::function<Tensor()>& parallel, int reps) {
    Tensor a, b;
    const double ts = time_ms(serial, reps, a);
    const double tp = time_ms(parallel, reps, b);
    std::printf("%-24s serial %8.3f ms   omp %8.3f ms   speedup %5.2fx   bit-equal %s\n", name,
                ts, tp, ts / tp, bit_equal(a, b) ? "yes" : "NO");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp: max threads %d\n", omp_get_max_threads());
#else
    std::printf("openmp: disabled at build time\n");
#endif
    Rng rng(7);
    Tensor a = gaussian(rng, {256, 256});
    Tensor b = gaussian(rng, {256, 256});
    Tensor wide = gaussian(rng, {512, 2048});
    Tensor img = gaussian(rng, {64, 16, 16});
    Tensor small = gaussian(rng, {128, 128});

    report("matmul 256x256x256", [&] { return ref::matmul(a, b); }, [&] { return matmul(a, b); },
           20);
    report("softmax_rows 512x2048", [&] { return ref::softmax_rows(wide); },
           [&] { return softmax_rows(wide); }, 20);
    report("resize 128 -> 512", [&] { return ref::resize_nearest(small, 512, 512); },
           [&] { return resize_nearest(small, 512, 512); }, 20);

    // conv as used by the denoiser: im2col + matmul
    Tensor wm = gaussian(rng, {64 * 9, 64});
    report("conv3x3 64ch 16x16",
           [&] { return ref::matmul(im2col3x3(img), wm); },
           [&] { return matmul(im2col3x3(img), wm); }, 20);
    return 0;
}
