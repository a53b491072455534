// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "pepbridge/geom3.hpp"

namespace pepbridge {

struct GaussianMoments {
    Vec3 mean;
    double variance = 0.0;  // isotropic, per coordinate
};

/// Transition of dm = -m/2 dt + dB: mean e^{-t/2} m0, variance 1 - e^{-t}.
GaussianMoments r3_transition(const Vec3& m0, double t);

/// Gradient of the log transition density with respect to mt.
Vec3 r3_score(const Vec3& m0, const Vec3& mt, double t);

/// Subtracts the centroid. Throws EmptyInput on an empty list.
std::vector<Vec3> com_project(std::span<const Vec3> points);
Vec3 centroid(std::span<const Vec3> points);

}  // namespace pepbridge
