// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/vpsde.hpp"

#include <cmath>
#include <string>

#include "pepbridge/error.hpp"

namespace pepbridge {

GaussianMoments r3_transition(const Vec3& m0, double t) {
    if (!(t >= 0.0)) fail(Errc::InvalidTime, "negative time " + std::to_string(t));
    return {m0 * std::exp(-0.5 * t), -std::expm1(-t)};
}

Vec3 r3_score(const Vec3& m0, const Vec3& mt, double t) {
    if (!(t > 0.0)) fail(Errc::InvalidTime, "translation score needs t > 0");
    return (m0 * std::exp(-0.5 * t) - mt) * (1.0 / -std::expm1(-t));
}

Vec3 centroid(std::span<const Vec3> points) {
    if (points.empty()) fail(Errc::EmptyInput, "centroid of empty point list");
    Vec3 c;
    for (const Vec3& p : points) c += p;
    return c * (1.0 / static_cast<double>(points.size()));
}

std::vector<Vec3> com_project(std::span<const Vec3> points) {
    const Vec3 c = centroid(points);
    std::vector<Vec3> out(points.begin(), points.end());
    for (Vec3& p : out) p -= c;
    return out;
}

}  // namespace pepbridge
