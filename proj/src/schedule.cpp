// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/schedule.hpp"

#include <cmath>
#include <string>

#include "pepbridge/error.hpp"

namespace pepbridge {

DdpmSchedule DdpmSchedule::linear(int steps, double beta_start, double beta_end) {
    if (steps < 1) fail(Errc::InvalidArgument, "schedule needs at least one step");
    std::vector<double> betas(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        const double f = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
        betas[static_cast<std::size_t>(i)] = beta_start + f * (beta_end - beta_start);
    }
    return from_betas(std::move(betas));
}

DdpmSchedule DdpmSchedule::from_betas(std::vector<double> betas) {
    if (betas.empty()) fail(Errc::InvalidArgument, "schedule needs at least one step");
    DdpmSchedule s;
    s.alpha_bar_.reserve(betas.size());
    double prod = 1.0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const double b = betas[i];
        if (!(b >= 0.0 && b < 1.0))
            fail(Errc::InvalidArgument, "beta outside [0,1) at step " + std::to_string(i + 1));
        prod *= 1.0 - b;
        s.alpha_bar_.push_back(prod);
    }
    s.beta_ = std::move(betas);
    return s;
}

void DdpmSchedule::check_index(int t) const {
    if (t < 1 || t > steps())
        fail(Errc::IndexOutOfSchedule,
             "step " + std::to_string(t) + " outside 1.." + std::to_string(steps()));
}

double DdpmSchedule::beta(int t) const {
    check_index(t);
    return beta_[static_cast<std::size_t>(t - 1)];
}

double DdpmSchedule::alpha_bar(int t) const {
    if (t == 0) return 1.0;
    check_index(t);
    return alpha_bar_[static_cast<std::size_t>(t - 1)];
}

}  // namespace pepbridge
