#include "negattn/rng.hpp"

#include <cmath>

namespace negattn {

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

uint64_t mix64(uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}
}  // namespace

uint64_t Rng::next_u64() {
    ++counter_;
    return mix64(seed_ + counter_ * kGolden);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::below(uint64_t n) {
    // Modulo bias is irrelevant at our n (dataset sizes, timestep counts).
    return n == 0 ? 0 : next_u64() % n;
}

Rng Rng::child(uint64_t tag) const {
    return Rng(mix64(seed_ ^ mix64(tag + kGolden)));
}

static inline void box_muller(double u1, double u2, double& z0, double& z1) {
    // u1 in (0, 1]: guards log(0).
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    double a = 2.0 * M_PI * u2;
    z0 = r * std::cos(a);
    z1 = r * std::sin(a);
}

Tensor gaussian(Rng& rng, std::vector<int64_t> shape) {
    Tensor out(std::move(shape));
    int64_t n = out.size();
    for (int64_t i = 0; i < n; i += 2) {
        double z0, z1;
        box_muller(rng.uniform(), rng.uniform(), z0, z1);
        out[i] = z0;
        if (i + 1 < n) out[i + 1] = z1;
    }
    return out;
}

double gaussian_scalar(Rng& rng) {
    double z0, z1;
    box_muller(rng.uniform(), rng.uniform(), z0, z1);
    return z0;
}

}  // namespace negattn
