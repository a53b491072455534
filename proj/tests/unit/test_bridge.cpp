// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "oracles/stats.hpp"
#include "pepbridge/bridge.hpp"
#include "pepbridge/error.hpp"

using namespace pepbridge;

namespace {

std::vector<Vec3> cloud(RandomStream& rng, int n, double scale) {
    std::vector<Vec3> c(n);
    for (auto& p : c) p = Vec3{rng.normal(), rng.normal(), rng.normal()} * scale;
    return c;
}

double log_gaussian(const std::vector<Vec3>& x, const std::vector<Vec3>& mean, double var) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += dot(x[i] - mean[i], x[i] - mean[i]);
    return -0.5 * acc / var - 1.5 * x.size() * std::log(2 * M_PI * var);
}

}  // namespace

TEST_CASE("marginal endpoints and midpoint") {
    RandomStream rng(51);
    const BridgeSchedule sched;
    const auto u0 = cloud(rng, 9, 3.0), ut = cloud(rng, 9, 3.0);
    BridgeMarginal m = bridge_marginal(u0, ut, 0.0, sched);
    CHECK(m.variance == 0.0);
    CHECK(m.mean == u0);
    m = bridge_marginal(u0, ut, 1.0, sched);
    CHECK(m.variance == 0.0);
    CHECK(m.mean == ut);
    CHECK(bridge_sample_t(u0, ut, 0.0, sched, rng) == u0);
    CHECK(bridge_sample_t(u0, ut, 1.0, sched, rng) == ut);
    m = bridge_marginal(u0, ut, 0.5, sched);
    CHECK(m.variance == 0.25);
    for (std::size_t i = 0; i < u0.size(); ++i) CHECK(m.mean[i] == (u0[i] + ut[i]) * 0.5);

    const BridgeSchedule wide{2.0, 3.0};
    CHECK(bridge_marginal(u0, ut, 1.0, wide).variance == 3.0 * 2.0 / 4.0);
    for (double t : {0.1, 0.3, 0.7})
        CHECK(std::abs(bridge_marginal(u0, ut, t, wide).variance - bridge_marginal(u0, ut, 2.0 - t, wide).variance) <
              1e-14);

    CHECK_THROWS_AS(bridge_marginal(u0, std::vector<Vec3>(3), 0.5, sched), Error);
    CHECK_THROWS_AS(bridge_marginal(u0, ut, 1.5, sched), Error);
    CHECK_THROWS_AS(bridge_marginal(u0, ut, -0.1, sched), Error);
}

TEST_CASE("bridge samples match the marginal moments") {
    RandomStream rng(52);
    const BridgeSchedule sched;
    const std::vector<Vec3> u0{{1.0, -2.0, 0.5}}, ut{{-3.0, 0.0, 2.0}};
    const int n = 100000;
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const BridgeMarginal m = bridge_marginal(u0, ut, t, sched);
        std::vector<double> xs[3];
        for (int i = 0; i < n; ++i) {
            const Vec3 p = bridge_sample_t(u0, ut, t, sched, rng)[0];
            for (int k = 0; k < 3; ++k) xs[k].push_back(p[k]);
        }
        for (int k = 0; k < 3; ++k) {
            CHECK(std::abs(oracle::mean(xs[k]) - m.mean[0][k]) < 4 * std::sqrt(m.variance / n));
            CHECK(std::abs(oracle::variance(xs[k]) - m.variance) < 0.05 * m.variance);
        }
    }
}

TEST_CASE("score target") {
    RandomStream rng(53);
    const BridgeSchedule sched;
    const auto u0 = cloud(rng, 4, 2.0), ut_end = cloud(rng, 4, 2.0);
    const double t = 0.37;
    const BridgeMarginal m = bridge_marginal(u0, ut_end, t, sched);
    for (const Vec3& s : bridge_score_target(m.mean, u0, ut_end, t, sched)) CHECK(norm(s) == 0.0);
    CHECK_THROWS_AS(bridge_score_target(u0, u0, ut_end, 0.0, sched), Error);
    CHECK_THROWS_AS(bridge_score_target(u0, u0, ut_end, 1.0, sched), Error);

    auto x = bridge_sample_t(u0, ut_end, t, sched, rng);
    const auto s = bridge_score_target(x, u0, ut_end, t, sched);
    const double h = 1e-5;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (int k = 0; k < 3; ++k) {
            auto xp = x, xm = x;
            xp[i][k] += h;
            xm[i][k] -= h;
            const double fd = (log_gaussian(xp, m.mean, m.variance) - log_gaussian(xm, m.mean, m.variance)) / (2 * h);
            CHECK(std::abs(fd - s[i][k]) < 1e-6 * std::max(1.0, std::abs(fd)));
        }
    // Linear in the residual from the mean.
    std::vector<Vec3> x2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) x2[i] = m.mean[i] + (x[i] - m.mean[i]) * 2.0;
    const auto s2 = bridge_score_target(x2, u0, ut_end, t, sched);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(norm(s2[i] - s[i] * 2.0) < 1e-12 * (1 + norm(s[i])));
}

TEST_CASE("Doob drift") {
    const BridgeSchedule sched;
    const std::vector<Vec3> a{{1, 2, 3}}, b{{0, 0, 1}};
    CHECK(norm(h_drift(b, b, 0.3, sched)[0]) == 0.0);
    CHECK_THROWS_AS(h_drift(a, b, 1.0, sched), Error);
    const double m1 = norm(h_drift(a, b, 0.9, sched)[0]);
    const double m2 = norm(h_drift(a, b, 0.99, sched)[0]);
    CHECK(std::abs(m2 / m1 - 10.0) < 1e-9);

    // Forward Brownian motion with the Doob drift is pinned at U_T.
    RandomStream rng(54);
    const int steps = 1000;
    const double dt = sched.T / steps;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vec3> u{{0.0, 0.0, 0.0}};
        const std::vector<Vec3> target{{2.0, -1.0, 0.5}};
        for (int i = 0; i < steps - 1; ++i) {
            const Vec3 h = h_drift(u, target, i * dt, sched)[0];
            u[0] += h * (sched.c * dt) + Vec3{rng.normal(), rng.normal(), rng.normal()} * std::sqrt(sched.c * dt);
        }
        // Last step lands exactly on U_T: h dt = (U_T - U) at t = T - dt.
        const Vec3 h = h_drift(u, target, (steps - 1) * dt, sched)[0];
        const Vec3 before = u[0];
        u[0] += h * (sched.c * dt);
        CHECK(norm(u[0] - target[0]) < 1e-12);
        CHECK(norm(before - target[0]) < 3 * std::sqrt(3 * sched.c * dt) * 2);
    }
}

TEST_CASE("reverse sampler recovers the analytic posterior") {
    // U_T = 0, U_0 | U_T ~ N(m, s^2 I): the marginal score is available in closed form.
    const BridgeSchedule sched;
    const Vec3 mu{1.0, -0.5, 0.3};
    const double s2 = 0.25;
    const std::vector<Vec3> end{{0.0, 0.0, 0.0}};
    auto score = [&](const std::vector<Vec3>& u, double t) {
        const double a = 1.0 - t / sched.T;
        const double v = a * a * s2 + sched.c * t * a;
        return std::vector<Vec3>{(mu * a - u[0]) * (1.0 / v)};
    };
    auto mean_error = [&](int steps) {
        Vec3 acc;
        const int pairs = 500;
        for (int i = 0; i < pairs; ++i) {
            for (bool flip : {false, true}) {
                RandomStream rng(1000 + i);
                rng.set_antithetic(flip);
                acc += bridge_reverse_sample(end, score, steps, sched, rng)[0];
            }
        }
        return norm(acc * (1.0 / (2 * pairs)) - mu);
    };
    const double e500 = mean_error(500), e1000 = mean_error(1000);
    CHECK(e1000 < 0.05);
    CHECK(e1000 < e500);

    RandomStream rng(55);
    std::vector<double> xs;
    for (int i = 0; i < 2000; ++i) xs.push_back(bridge_reverse_sample(end, score, 200, sched, rng)[0].x);
    CHECK(std::abs(oracle::variance(xs) - s2) < 0.1 * s2);

    const auto one = bridge_reverse_sample(end, score, 1, sched, rng);
    CHECK(std::isfinite(one[0].x));
    CHECK_THROWS_AS(bridge_reverse_sample(end, score, 0, sched, rng), Error);
    auto bad = [](const std::vector<Vec3>&, double) { return std::vector<Vec3>{{NAN, 0, 0}}; };
    CHECK_THROWS_AS(bridge_reverse_sample(end, bad, 10, sched, rng), Error);
}

TEST_CASE("bridge loss") {
    RandomStream rng(56);
    const BridgeSchedule sched;
    const auto u0 = cloud(rng, 5, 1.0), ut_end = cloud(rng, 5, 1.0);
    const double t = 0.4;
    const auto x = bridge_sample_t(u0, ut_end, t, sched, rng);
    const auto target = bridge_score_target(x, u0, ut_end, t, sched);
    CHECK(bridge_loss(target, x, u0, ut_end, t, sched) == 0.0);
    auto pert = target;
    pert[2] += Vec3{1.0, 0.0, 0.0};
    const double l1 = bridge_loss(pert, x, u0, ut_end, t, sched);
    CHECK(std::abs(l1 - 1.0 / 15.0) < 1e-12);
    pert[2] += Vec3{1.0, 0.0, 0.0};
    CHECK(std::abs(bridge_loss(pert, x, u0, ut_end, t, sched) - 4 * l1) < 1e-12);
    CHECK(bridge_loss(pert, x, u0, ut_end, t, sched, [](double tt) { return 2 * tt; }) ==
          doctest::Approx(0.8 * 4 * l1));
    CHECK_THROWS_AS(bridge_loss(target, x, u0, ut_end, 1.0, sched), Error);
}
