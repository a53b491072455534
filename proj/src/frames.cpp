// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/frames.hpp"

#include "pepbridge/error.hpp"
#include "pepbridge/torus.hpp"

namespace pepbridge {

namespace {
constexpr double kDegenerateNorm = 1e-8;
}

const IdealBackbone& ideal_backbone() {
    static const IdealBackbone ideal{
        {-0.525, 1.363, 0.0},
        {0.0, 0.0, 0.0},
        {1.526, 0.0, 0.0},
        {0.627, 1.062, 0.0},
    };
    return ideal;
}

BackboneAtoms frame_to_atoms(const Transform& frame, double psi) {
    const IdealBackbone& ideal = ideal_backbone();
    const Transform psi_frame{Rotation::about_x(wrap_angle(psi)), kPsiFrameOffset};
    return {
        frame * ideal.n,
        frame * ideal.ca,
        frame * ideal.c,
        (frame * psi_frame) * ideal.o,
    };
}

Transform atoms_to_frame(const Vec3& n, const Vec3& ca, const Vec3& c) {
    const Vec3 w1 = c - ca;
    const Vec3 w2 = n - ca;
    const double n1 = norm(w1);
    if (!(n1 >= kDegenerateNorm)) fail(Errc::DegenerateGeometry, "C coincides with CA");
    const Vec3 e1 = w1 * (1.0 / n1);
    const Vec3 u2 = w2 - e1 * dot(e1, w2);
    const double n2 = norm(u2);
    if (!(n2 >= kDegenerateNorm)) fail(Errc::DegenerateGeometry, "N collinear with CA-C");
    const Vec3 e2 = u2 * (1.0 / n2);
    const Vec3 e3 = cross(e1, e2);
    const Mat3 r{{e1.x, e2.x, e3.x, e1.y, e2.y, e3.y, e1.z, e2.z, e3.z}};
    return {Rotation(r), ca};
}

Vec3 virtual_cbeta(const Vec3& n, const Vec3& ca, const Vec3& c) {
    return atoms_to_frame(n, ca, c) * kCbetaLocal;
}

}  // namespace pepbridge
