// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pepbridge/geom3.hpp"
#include "pepbridge/random.hpp"

namespace pepbridge {

/// Surface point cloud with per-point hydrogen-bond and hydrophobicity channels.
struct SurfaceCloud {
    std::vector<Vec3> positions;
    std::vector<double> hbond;
    std::vector<double> hphob;

    std::size_t size() const { return positions.size(); }
    /// Throws EmptyInput, ShapeMismatch or NonFiniteValue.
    void validate() const;
};

/// Driftless bridge schedule: alpha_t = 1, sigma_t^2 = c t on [0, T].
struct BridgeSchedule {
    double T = 1.0;
    double c = 1.0;

    double sigma2(double t) const { return c * t; }
    double snr(double t) const { return 1.0 / sigma2(t); }
};

struct BridgeMarginal {
    std::vector<Vec3> mean;
    double variance = 0.0;
};

/// q(U_t | U_0, U_T) = N(mean, variance I).
BridgeMarginal bridge_marginal(std::span<const Vec3> u0, std::span<const Vec3> ut_end, double t,
                               const BridgeSchedule& sched);
std::vector<Vec3> bridge_sample_t(std::span<const Vec3> u0, std::span<const Vec3> ut_end, double t,
                                  const BridgeSchedule& sched, RandomStream& rng);
/// -(U_t - mean) / variance. Throws DegenerateTime at the endpoints.
std::vector<Vec3> bridge_score_target(std::span<const Vec3> ut, std::span<const Vec3> u0,
                                      std::span<const Vec3> ut_end, double t, const BridgeSchedule& sched);
/// Doob term grad log p(U_T | U_t) = (U_T - U_t) / (sigma_T^2 - sigma_t^2).
std::vector<Vec3> h_drift(std::span<const Vec3> ut, std::span<const Vec3> ut_end, double t,
                          const BridgeSchedule& sched);

using BridgeScoreFn = std::function<std::vector<Vec3>(const std::vector<Vec3>& ut, double t)>;

/// One reverse-time Euler-Maruyama step from t to t - dt:
///   U <- U + c (s - h) dt + sqrt(c dt) z.
/// `t_eval` is where s and h are evaluated; noise is skipped when `noisy` is false.
void bridge_reverse_step(std::vector<Vec3>& u, std::span<const Vec3> ut_end, std::span<const Vec3> score,
                         double t_eval, double dt, const BridgeSchedule& sched, RandomStream& rng, bool noisy);

/// Time used for the drift at grid time t_i = T i / steps. The first step
/// (t_i = T) is evaluated at T - dt/2, where s and h are finite.
double bridge_eval_time(int i, int steps, const BridgeSchedule& sched);

/// Integrates the reverse SDE from U_T at t = T down to t = 0 on a uniform grid.
/// The last step is noise-free. Throws NonFiniteState on divergence.
std::vector<Vec3> bridge_reverse_sample(std::span<const Vec3> ut_end, const BridgeScoreFn& score_fn, int steps,
                                        const BridgeSchedule& sched, RandomStream& rng);

using BridgeWeight = std::function<double(double)>;

/// w(t) * mean squared error between score_pred and the target, averaged over
/// points and coordinates.
double bridge_loss(std::span<const Vec3> score_pred, std::span<const Vec3> ut, std::span<const Vec3> u0,
                   std::span<const Vec3> ut_end, double t, const BridgeSchedule& sched,
                   const BridgeWeight& w = [](double) { return 1.0; });

}  // namespace pepbridge
