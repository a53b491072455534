// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/pipeline/losses.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

#include "pepbridge/error.hpp"
#include "pepbridge/igso3.hpp"
#include "pepbridge/torus.hpp"

namespace pepbridge {

namespace {

constexpr int kGridPoints = 500;
constexpr double kGridMin = 1e-3;
constexpr double kGridMax = 10.0;
constexpr int kQuadIntervals = 1000;

void check_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) fail(Errc::InvalidTime, "time must be positive, got " + std::to_string(t));
}

template <class A, class B>
void check_sizes(const A& a, const B& b) {
    if (a.size() != b.size() || a.empty())
        fail(Errc::ShapeMismatch, "loss inputs differ in size: " + std::to_string(a.size()) + " vs " +
                                      std::to_string(b.size()));
}

struct LambdaCache {
    std::vector<double> log_t;
    std::vector<double> log_lambda;
};

const LambdaCache& cache() {
    static const LambdaCache c = [] {
        LambdaCache out;
        for (int i = 0; i < kGridPoints; ++i) {
            const double lt = std::log(kGridMin) + (std::log(kGridMax) - std::log(kGridMin)) * i / (kGridPoints - 1);
            out.log_t.push_back(lt);
            out.log_lambda.push_back(-std::log(igso3_expected_score_sq(std::exp(lt))));
        }
        return out;
    }();
    return c;
}

}  // namespace

double igso3_expected_score_sq(double t) {
    check_time(t);
    // The angle law concentrates at w ~ sqrt(3t); integrate where it has mass.
    const double hi = std::min(std::numbers::pi, 15.0 * std::sqrt(t));
    const double h = hi / kQuadIntervals;
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= kQuadIntervals; ++i) {
        const double w = i * h;
        const double wt = (i == 0 || i == kQuadIntervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double p = igso3_angle_pdf(w, t);
        const double s = w > 0.0 ? igso3_dlog_density(w, t) : 0.0;
        num += wt * p * s * s;
        den += wt * p;
    }
    return num / den;
}

double lambda_r(double t) {
    check_time(t);
    if (t < kGridMin || t > kGridMax) return 1.0 / igso3_expected_score_sq(t);
    const LambdaCache& c = cache();
    const double x = (std::log(t) - c.log_t.front()) / (c.log_t[1] - c.log_t[0]);
    const int i = std::min(static_cast<int>(x), kGridPoints - 2);
    const double w = x - i;
    const auto ui = static_cast<std::size_t>(i);
    return std::exp((1.0 - w) * c.log_lambda[ui] + w * c.log_lambda[ui + 1]);
}

double lambda_m(double t) {
    check_time(t);
    return (1.0 - std::exp(-t)) / std::exp(-t / 2.0);
}

double loss_rotation(std::span<const Vec3> score_pred, std::span<const Rotation> r0, std::span<const Rotation> rt,
                     double t) {
    check_sizes(score_pred, r0);
    check_sizes(r0, rt);
    double acc = 0.0;
    for (std::size_t i = 0; i < r0.size(); ++i) {
        const Vec3 d = igso3_score(r0[i], rt[i], t) - score_pred[i];
        acc += dot(d, d);
    }
    return lambda_r(t) * acc / static_cast<double>(r0.size());
}

double loss_translation(std::span<const Vec3> m0_hat, std::span<const Vec3> m0) {
    check_sizes(m0_hat, m0);
    double acc = 0.0;
    for (std::size_t i = 0; i < m0.size(); ++i) acc += dot(m0[i] - m0_hat[i], m0[i] - m0_hat[i]);
    return acc / static_cast<double>(m0.size());
}

double loss_surface(std::span<const Vec3> u0_hat, std::span<const Vec3> u0) { return loss_translation(u0_hat, u0); }

double loss_type(std::span<const double> eps_hat, std::span<const double> eps) {
    check_sizes(eps_hat, eps);
    double acc = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) acc += (eps_hat[i] - eps[i]) * (eps_hat[i] - eps[i]);
    return acc / static_cast<double>(eps.size());
}

double loss_ang(std::span<const double> eps_hat, std::span<const double> eps) {
    check_sizes(eps_hat, eps);
    double acc = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const double d = wrap_angle(eps_hat[i] - eps[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(eps.size());
}

void LossWeights::validate() const {
    double sum = 0.0;
    for (double m : mu) {
        if (!(m >= 0.0) || !std::isfinite(m)) fail(Errc::InvalidArgument, "loss weights must be finite and >= 0");
        sum += m;
    }
    if (!(sum > 0.0)) fail(Errc::InvalidArgument, "at least one loss weight must be positive");
}

double loss_total(const LossComponents& components, const LossWeights& weights) {
    double total = 0.0;
    for (std::size_t i = 0; i < components.size(); ++i) {
        if (!std::isfinite(components[i]))
            fail(Errc::NonFiniteComponent, "loss component " + std::to_string(i) + " is not finite");
        total += weights.mu[i] * components[i];
    }
    return total;
}

}  // namespace pepbridge
