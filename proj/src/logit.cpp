// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/logit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pepbridge/error.hpp"

namespace pepbridge {

namespace {
void check_k(double k) {
    if (!(k > 0.0) || !std::isfinite(k)) fail(Errc::InvalidK, "sharpness K must be positive");
}
}  // namespace

LogitVector logit_encode(int type, double k) {
    if (type < 0 || type >= kResidueTypes)
        fail(Errc::InvalidType, "residue type " + std::to_string(type) + " outside 0..19");
    check_k(k);
    LogitVector v;
    v.fill(-k);
    v[static_cast<std::size_t>(type)] = k;
    return v;
}

int logit_decode(const LogitVector& v) {
    int best = 0;
    for (int i = 1; i < kResidueTypes; ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

LogitVector softmax(const LogitVector& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    LogitVector p;
    double z = 0.0;
    for (int i = 0; i < kResidueTypes; ++i) {
        p[i] = std::exp(v[i] - mx);
        z += p[i];
    }
    for (double& x : p) x /= z;
    return p;
}

int logit_sample_type(const LogitVector& v, RandomStream& rng) {
    const LogitVector p = softmax(v);
    const double u = rng.uniform();
    double acc = 0.0;
    for (int i = 0; i < kResidueTypes; ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    return logit_decode(v);
}

LogitVector logit_forward(const LogitVector& v0, int t, const DdpmSchedule& schedule, double k,
                          const LogitVector& eps_unit) {
    check_k(k);
    schedule.check_index(t);
    const double ab = schedule.alpha_bar(t);
    const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab) * k;
    LogitVector out;
    for (int i = 0; i < kResidueTypes; ++i) out[i] = a * v0[i] + s * eps_unit[i];
    return out;
}

LogitVector logit_forward(const LogitVector& v0, int t, const DdpmSchedule& schedule, double k,
                          RandomStream& rng) {
    schedule.check_index(t);
    LogitVector eps;
    for (double& e : eps) e = rng.normal();
    return logit_forward(v0, t, schedule, k, eps);
}

LogitVector logit_reverse_renoise(const LogitVector& v0_hat, int t, const DdpmSchedule& schedule,
                                  double k, RandomStream& rng) {
    check_k(k);
    schedule.check_index(t);
    if (t == 1) return v0_hat;
    return logit_forward(v0_hat, t, schedule, k, rng);
}

}  // namespace pepbridge
