// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "pepbridge/random.hpp"
#include "pepbridge/schedule.hpp"

namespace pepbridge {

inline constexpr int kResidueTypes = 20;
inline constexpr double kDefaultSharpness = 10.0;

using LogitVector = std::array<double, kResidueTypes>;

/// Sharp one-hot logits: +K at `type`, -K elsewhere.
LogitVector logit_encode(int type, double k);
/// Argmax with ties resolved to the lowest index.
int logit_decode(const LogitVector& v);
LogitVector softmax(const LogitVector& v);
/// Draws a type index from softmax(v).
int logit_sample_type(const LogitVector& v, RandomStream& rng);

/// sqrt(abar_t) v0 + sqrt(1 - abar_t) eps, eps ~ N(0, K^2 I). `eps` is the
/// unit-variance draw; it is scaled by K here.
LogitVector logit_forward(const LogitVector& v0, int t, const DdpmSchedule& schedule, double k,
                          const LogitVector& eps_unit);
LogitVector logit_forward(const LogitVector& v0, int t, const DdpmSchedule& schedule, double k,
                          RandomStream& rng);

/// Re-noises a clean-logit prediction to the previous step using abar_t as
/// written in the method; at t == 1 returns v0_hat unchanged.
LogitVector logit_reverse_renoise(const LogitVector& v0_hat, int t, const DdpmSchedule& schedule,
                                  double k, RandomStream& rng);

}  // namespace pepbridge
