#include "negattn/schedule.hpp"

#include <cmath>

namespace negattn {

NoiseSchedule NoiseSchedule::linear(int64_t t_steps, double beta_start, double beta_end) {
    if (t_steps < 1) throw ScheduleError("schedule: step count must be >= 1");
    NoiseSchedule s;
    s.steps = t_steps;
    s.beta = Tensor({t_steps});
    s.alpha = Tensor({t_steps});
    s.alpha_bar = Tensor({t_steps});
    double prod = 1.0;
    for (int64_t t = 0; t < t_steps; ++t) {
        const double frac = t_steps == 1 ? 0.0
                                         : static_cast<double>(t) / static_cast<double>(t_steps - 1);
        const double b = beta_start + (beta_end - beta_start) * frac;
        s.beta[t] = b;
        s.alpha[t] = 1.0 - b;
        prod *= s.alpha[t];
        s.alpha_bar[t] = prod;
    }
    s.validate();
    return s;
}

void NoiseSchedule::check_t(int64_t t) const {
    if (t < 1 || t > steps) {
        throw ScheduleError("schedule: timestep " + std::to_string(t) + " outside [1, " +
                            std::to_string(steps) + "]");
    }
}

double NoiseSchedule::alpha_at(int64_t t) const {
    check_t(t);
    return alpha[t - 1];
}

double NoiseSchedule::alpha_bar_at(int64_t t) const {
    if (t == 0) return 1.0;
    check_t(t);
    return alpha_bar[t - 1];
}

void NoiseSchedule::validate() const {
    if (steps < 1 || alpha.size() != steps || alpha_bar.size() != steps || beta.size() != steps) {
        throw ScheduleError("schedule: inconsistent table sizes");
    }
    double prod = 1.0;
    double prev = 2.0;
    for (int64_t t = 0; t < steps; ++t) {
        if (!(alpha[t] > 0.0 && alpha[t] < 1.0)) {
            throw ScheduleError("schedule: alpha out of (0,1) at t=" + std::to_string(t + 1));
        }
        prod *= alpha[t];
        if (std::fabs(prod - alpha_bar[t]) > 1e-12) {
            throw ScheduleError("schedule: alpha_bar inconsistent at t=" + std::to_string(t + 1));
        }
        if (!(alpha_bar[t] < prev)) {
            throw ScheduleError("schedule: alpha_bar not strictly decreasing at t=" +
                                std::to_string(t + 1));
        }
        prev = alpha_bar[t];
    }
}

}  // namespace negattn
