#ifndef NEGATTN_SCHEDULE_HPP
#define NEGATTN_SCHEDULE_HPP

#include "negattn/tensor.hpp"

namespace negattn {

// Per-step alpha_t and cumulative alpha_bar_t tables, 1-based timestep
// convention: arrays index t-1 for t in [1, T]; alpha_bar_at(0) == 1.
struct NoiseSchedule {
    int64_t steps = 0;  // T
    Tensor beta;        // [T]
    Tensor alpha;       // [T] 1 - beta
    Tensor alpha_bar;   // [T] running product of alpha

    static NoiseSchedule linear(int64_t t_steps, double beta_start = 1e-4, double beta_end = 0.02);

    double alpha_at(int64_t t) const;
    double alpha_bar_at(int64_t t) const;  // t in [0, T]
    void check_t(int64_t t) const;         // t in [1, T] else ScheduleError
    void validate() const;
};

}  // namespace negattn

#endif
