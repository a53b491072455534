// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/bridge.hpp"

#include <cmath>
#include <string>

#include "pepbridge/error.hpp"

namespace pepbridge {

namespace {

void check_pair(std::span<const Vec3> a, std::span<const Vec3> b) {
    if (a.size() != b.size())
        fail(Errc::ShapeMismatch, "bridge endpoints differ in size: " + std::to_string(a.size()) + " vs " +
                                      std::to_string(b.size()));
    if (a.empty()) fail(Errc::ShapeMismatch, "bridge endpoints are empty");
}

void check_time(double t, const BridgeSchedule& sched) {
    if (!(t >= 0.0 && t <= sched.T))
        fail(Errc::TimeOutOfRange, "bridge time " + std::to_string(t) + " outside [0, T]");
}


}  // namespace

void SurfaceCloud::validate() const {
    if (positions.empty()) fail(Errc::EmptyInput, "surface cloud has no points");
    if (hbond.size() != positions.size() || hphob.size() != positions.size())
        fail(Errc::ShapeMismatch, "surface feature channels do not match point count");
    for (std::size_t i = 0; i < positions.size(); ++i)
        if (!finite(positions[i]) || !std::isfinite(hbond[i]) || !std::isfinite(hphob[i]))
            fail(Errc::NonFiniteValue, "non-finite surface value at point " + std::to_string(i));
}

BridgeMarginal bridge_marginal(std::span<const Vec3> u0, std::span<const Vec3> ut_end, double t,
                               const BridgeSchedule& sched) {
    check_pair(u0, ut_end);
    check_time(t, sched);
    // alpha = 1 and SNR_T / SNR_t = sigma_t^2 / sigma_T^2 = t / T.
    const double ratio = t / sched.T;
    BridgeMarginal m;
    m.mean.resize(u0.size());
    for (std::size_t i = 0; i < u0.size(); ++i) m.mean[i] = ratio * ut_end[i] + (1.0 - ratio) * u0[i];
    m.variance = sched.sigma2(t) * (1.0 - ratio);
    return m;
}

std::vector<Vec3> bridge_sample_t(std::span<const Vec3> u0, std::span<const Vec3> ut_end, double t,
                                  const BridgeSchedule& sched, RandomStream& rng) {
    BridgeMarginal m = bridge_marginal(u0, ut_end, t, sched);
    if (m.variance == 0.0) return m.mean;
    const double sd = std::sqrt(m.variance);
    for (Vec3& p : m.mean) p += Vec3{rng.normal(), rng.normal(), rng.normal()} * sd;
    return m.mean;
}

std::vector<Vec3> bridge_score_target(std::span<const Vec3> ut, std::span<const Vec3> u0,
                                      std::span<const Vec3> ut_end, double t, const BridgeSchedule& sched) {
    check_pair(ut, u0);
    const BridgeMarginal m = bridge_marginal(u0, ut_end, t, sched);
    if (!(m.variance > 0.0)) fail(Errc::DegenerateTime, "bridge score undefined at t = " + std::to_string(t));
    std::vector<Vec3> s(ut.size());
    for (std::size_t i = 0; i < ut.size(); ++i) s[i] = (m.mean[i] - ut[i]) * (1.0 / m.variance);
    return s;
}

std::vector<Vec3> h_drift(std::span<const Vec3> ut, std::span<const Vec3> ut_end, double t,
                          const BridgeSchedule& sched) {
    check_pair(ut, ut_end);
    check_time(t, sched);
    const double gap = sched.sigma2(sched.T) - sched.sigma2(t);
    if (!(gap > 0.0)) fail(Errc::DegenerateTime, "Doob drift undefined at t = T");
    std::vector<Vec3> h(ut.size());
    for (std::size_t i = 0; i < ut.size(); ++i) h[i] = (ut_end[i] - ut[i]) * (1.0 / gap);
    return h;
}

double bridge_eval_time(int i, int steps, const BridgeSchedule& sched) {
    const double dt = sched.T / steps;
    if (i >= steps) return sched.T - 0.5 * dt;
    return sched.T * i / steps;
}

void bridge_reverse_step(std::vector<Vec3>& u, std::span<const Vec3> ut_end, std::span<const Vec3> score,
                         double t_eval, double dt, const BridgeSchedule& sched, RandomStream& rng, bool noisy) {
    if (score.size() != u.size()) fail(Errc::ShapeMismatch, "score size does not match state");
    const std::vector<Vec3> h = h_drift(u, ut_end, t_eval, sched);
    const double drift = sched.c * dt;
    const double sd = std::sqrt(sched.c * dt);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] += (score[i] - h[i]) * drift;
        if (noisy) u[i] += Vec3{rng.normal(), rng.normal(), rng.normal()} * sd;
        if (!finite(u[i])) fail(Errc::NonFiniteState, "bridge state diverged at t = " + std::to_string(t_eval));
    }
}

std::vector<Vec3> bridge_reverse_sample(std::span<const Vec3> ut_end, const BridgeScoreFn& score_fn, int steps,
                                        const BridgeSchedule& sched, RandomStream& rng) {
    if (steps < 1) fail(Errc::InvalidArgument, "bridge sampler needs at least one step");
    if (ut_end.empty()) fail(Errc::EmptyInput, "bridge sampler needs a non-empty terminal cloud");
    const double dt = sched.T / steps;
    std::vector<Vec3> u(ut_end.begin(), ut_end.end());
    for (int i = steps; i >= 1; --i) {
        const double te = bridge_eval_time(i, steps, sched);
        const std::vector<Vec3> s = score_fn(u, te);
        bridge_reverse_step(u, ut_end, s, te, dt, sched, rng, i > 1);
    }
    return u;
}

double bridge_loss(std::span<const Vec3> score_pred, std::span<const Vec3> ut, std::span<const Vec3> u0,
                   std::span<const Vec3> ut_end, double t, const BridgeSchedule& sched, const BridgeWeight& w) {
    check_pair(score_pred, ut);
    const std::vector<Vec3> target = bridge_score_target(ut, u0, ut_end, t, sched);
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const Vec3 d = score_pred[i] - target[i];
        acc += dot(d, d);
    }
    return w(t) * acc / (3.0 * static_cast<double>(target.size()));
}

}  // namespace pepbridge
