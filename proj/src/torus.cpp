// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/torus.hpp"

#include <cmath>
#include <numbers>

#include "pepbridge/error.hpp"

namespace pepbridge {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

double wrap_angle(double x) {
    double r = std::fmod(x + kPi, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    // fmod can return exactly 2pi after the correction above for tiny negatives.
    if (r >= kTwoPi) r -= kTwoPi;
    return r - kPi;
}

TorsionVector wrap(const TorsionVector& chi) {
    TorsionVector out;
    for (int i = 0; i < kTorsionCount; ++i) out[i] = wrap_angle(chi[i]);
    return out;
}

TorsionVector torus_forward(const TorsionVector& chi0, int t, const DdpmSchedule& schedule,
                            const TorsionNoise& eps) {
    schedule.check_index(t);
    const double ab = schedule.alpha_bar(t);
    const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab);
    TorsionVector out;
    for (int i = 0; i < kTorsionCount; ++i) out[i] = wrap_angle(a * chi0[i] + s * eps[i]);
    return out;
}

TorsionVector torus_forward(const TorsionVector& chi0, int t, const DdpmSchedule& schedule,
                            RandomStream& rng) {
    schedule.check_index(t);
    TorsionNoise eps;
    for (double& e : eps) e = rng.normal();
    return torus_forward(chi0, t, schedule, eps);
}

TorsionVector torus_forward_step(const TorsionVector& chi_prev, int t, const DdpmSchedule& schedule,
                                 const TorsionNoise& eps) {
    const double a = schedule.alpha(t);
    TorsionVector out;
    for (int i = 0; i < kTorsionCount; ++i)
        out[i] = wrap_angle(std::sqrt(a) * chi_prev[i] + std::sqrt(1.0 - a) * eps[i]);
    return out;
}

TorsionVector torus_reverse_mean(const TorsionVector& chi_t, const TorsionNoise& eps_hat, int t,
                                 const DdpmSchedule& schedule) {
    const double a = schedule.alpha(t);
    const double ab = schedule.alpha_bar(t);
    const double coef = ab < 1.0 ? (1.0 - a) / std::sqrt(1.0 - ab) : 0.0;
    TorsionVector out;
    for (int i = 0; i < kTorsionCount; ++i)
        out[i] = wrap_angle((chi_t[i] - coef * eps_hat[i]) / std::sqrt(a));
    return out;
}

TorsionVector torus_reverse_step(const TorsionVector& chi_t, const TorsionNoise& eps_hat, int t,
                                 const DdpmSchedule& schedule, RandomStream& rng) {
    TorsionVector mu = torus_reverse_mean(chi_t, eps_hat, t, schedule);
    if (t == 1) return mu;
    const double sigma = std::sqrt(schedule.beta(t));
    for (int i = 0; i < kTorsionCount; ++i) mu[i] = wrap_angle(mu[i] + sigma * rng.normal());
    return mu;
}

double wrapped_normal_logpdf(double x, double mean, double sigma) {
    if (!(sigma > 0.0)) fail(Errc::InvalidArgument, "wrapped normal needs sigma > 0");
    const double d = wrap_angle(x - mean);
    double p = 0.0;
    for (int k = -3; k <= 3; ++k) {
        const double z = (d + kTwoPi * k) / sigma;
        p += std::exp(-0.5 * z * z);
    }
    return std::log(p / (sigma * std::sqrt(kTwoPi)));
}

}  // namespace pepbridge
