#ifndef NEGATTN_RNG_HPP
#define NEGATTN_RNG_HPP

#include <cstdint>
#include <vector>

#include "negattn/tensor.hpp"

namespace negattn {

// Counter-based PRNG: draw i of stream `seed` is the splitmix64 finalizer
// applied to seed + (i+1) * golden-gamma. No hidden state beyond the counter,
// so identical seed + identical call sequence gives an identical stream on
// every platform. Parallel users derive independent child streams via child();
// one Rng instance is never shared.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), counter_(0) {}

    uint64_t seed() const { return seed_; }
    uint64_t counter() const { return counter_; }

    uint64_t next_u64();
    // Uniform in [0, 1), 53-bit resolution.
    double uniform();
    // Uniform integer in [0, n).
    uint64_t below(uint64_t n);

    // Independent stream keyed off (seed, tag): used to split work across
    // sweep cells and weight-init sites without sharing a counter.
    Rng child(uint64_t tag) const;

private:
    uint64_t seed_;
    uint64_t counter_;
};

// i.i.d. standard normal samples via Box-Muller (two uniforms per pair; the
// spare half of an odd-length draw is discarded so the stream consumed depends
// only on the requested count).
Tensor gaussian(Rng& rng, std::vector<int64_t> shape);
double gaussian_scalar(Rng& rng);

}  // namespace negattn

#endif
