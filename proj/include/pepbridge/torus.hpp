// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "pepbridge/random.hpp"
#include "pepbridge/schedule.hpp"

namespace pepbridge {

inline constexpr int kTorsionCount = 5;

/// [chi1, chi2, chi3, chi4, psi], each in [-pi, pi).
using TorsionVector = std::array<double, kTorsionCount>;
using TorsionNoise = std::array<double, kTorsionCount>;

/// (x + pi) mod 2pi - pi, landing in [-pi, pi).
double wrap_angle(double x);
TorsionVector wrap(const TorsionVector& chi);

/// Closed-form multi-step forward noising with explicit noise.
TorsionVector torus_forward(const TorsionVector& chi0, int t, const DdpmSchedule& schedule,
                            const TorsionNoise& eps);
TorsionVector torus_forward(const TorsionVector& chi0, int t, const DdpmSchedule& schedule,
                            RandomStream& rng);

/// Single DDPM transition chi_{t-1} -> chi_t with explicit per-step noise.
TorsionVector torus_forward_step(const TorsionVector& chi_prev, int t, const DdpmSchedule& schedule,
                                 const TorsionNoise& eps);

/// Mean of the reverse transition given the predicted cumulative noise.
TorsionVector torus_reverse_mean(const TorsionVector& chi_t, const TorsionNoise& eps_hat, int t,
                                 const DdpmSchedule& schedule);

/// Draw from the wrapped normal around torus_reverse_mean with variance beta_t
/// (zero at t == 1).
TorsionVector torus_reverse_step(const TorsionVector& chi_t, const TorsionNoise& eps_hat, int t,
                                 const DdpmSchedule& schedule, RandomStream& rng);

/// Wrapped-normal log density on the circle, wrapping sum truncated at +-3 windows.
double wrapped_normal_logpdf(double x, double mean, double sigma);

}  // namespace pepbridge
