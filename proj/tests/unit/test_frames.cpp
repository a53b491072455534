// SPDX-License-Identifier: Apache-2.0
#include <numbers>

#include "doctest.h"
#include "pepbridge/error.hpp"
#include "pepbridge/frames.hpp"
#include "pepbridge/torus.hpp"

using namespace pepbridge;

namespace {

double vdiff(const Vec3& a, const Vec3& b) {
    return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

Transform random_transform(RandomStream& rng) {
    return {random_rotation(rng), {5 * rng.normal(), 5 * rng.normal(), 5 * rng.normal()}};
}

}  // namespace

TEST_CASE("ideal backbone constants") {
    const IdealBackbone& b = ideal_backbone();
    CHECK(b.n.x == -0.525);
    CHECK(b.n.y == 1.363);
    CHECK(b.n.z == 0.0);
    CHECK(vdiff(b.ca, {0, 0, 0}) == 0.0);
    CHECK(b.c.x == 1.526);
    CHECK(b.c.y == 0.0);
    CHECK(b.o.x == 0.627);
    CHECK(b.o.y == 1.062);
}

TEST_CASE("frame_to_atoms examples") {
    const BackboneAtoms a0 = frame_to_atoms(Transform::identity(), 0.0);
    CHECK(vdiff(a0.o, {2.153, 1.062, 0.0}) < 1e-15);
    CHECK(vdiff(a0.ca, {0, 0, 0}) == 0.0);
    const BackboneAtoms api = frame_to_atoms(Transform::identity(), std::numbers::pi);
    CHECK(vdiff(api.o, {2.153, -1.062, 0.0}) < 1e-12);
}

TEST_CASE("atoms_to_frame round trip") {
    const BackboneAtoms a0 = frame_to_atoms(Transform::identity(), 0.3);
    const Transform f0 = atoms_to_frame(a0.n, a0.ca, a0.c);
    CHECK(max_abs_diff(f0.r.matrix(), Mat3::identity()) < 1e-15);

    RandomStream rng(11);
    double rot_err = 0.0, trans_err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Transform t = random_transform(rng);
        const double psi = wrap_angle(7.0 * rng.normal());
        const BackboneAtoms a = frame_to_atoms(t, psi);
        const Transform back = atoms_to_frame(a.n, a.ca, a.c);
        rot_err = std::max(rot_err, max_abs_diff(back.r.matrix(), t.r.matrix()));
        trans_err = std::max(trans_err, vdiff(back.m, t.m));
    }
    CHECK(rot_err < 1e-9);
    CHECK(trans_err < 1e-9);
}

TEST_CASE("atoms_to_frame rejects degenerate input") {
    CHECK_THROWS_AS(atoms_to_frame({2, 0, 0}, {0, 0, 0}, {1, 0, 0}), Error);
    CHECK_THROWS_AS(atoms_to_frame({0, 1, 0}, {0, 0, 0}, {0, 0, 0}), Error);
    try {
        atoms_to_frame({-3, 0, 0}, {0, 0, 0}, {1, 0, 0});
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DegenerateGeometry);
    }
}

TEST_CASE("frame_to_atoms is SE(3)-equivariant with ideal bond lengths") {
    RandomStream rng(12);
    for (int i = 0; i < 200; ++i) {
        const Transform t = random_transform(rng), g = random_transform(rng);
        const double psi = wrap_angle(5.0 * rng.normal());
        const BackboneAtoms a = frame_to_atoms(t, psi);
        const BackboneAtoms ga = frame_to_atoms(g * t, psi);
        CHECK(vdiff(ga.n, g * a.n) < 1e-12);
        CHECK(vdiff(ga.ca, g * a.ca) < 1e-12);
        CHECK(vdiff(ga.c, g * a.c) < 1e-12);
        CHECK(vdiff(ga.o, g * a.o) < 1e-12);
        CHECK(std::abs(distance(a.c, a.ca) - 1.526) < 1e-6);
        CHECK(std::abs(distance(a.n, a.ca) - norm(ideal_backbone().n)) < 1e-6);
        // O rotates about the local x axis: its local x coordinate is psi-independent.
        const Vec3 local_o = transform_inverse(t) * a.o;
        CHECK(std::abs(local_o.x - 2.153) < 1e-12);
    }
}

TEST_CASE("virtual C-beta") {
    const BackboneAtoms a = frame_to_atoms(Transform::identity(), 0.0);
    CHECK(vdiff(virtual_cbeta(a.n, a.ca, a.c), kCbetaLocal) < 1e-15);
    // |(-0.529, -0.774, -1.205)| evaluated directly.
    CHECK(std::abs(distance(virtual_cbeta(a.n, a.ca, a.c), a.ca) - 1.526742) < 1e-6);

    RandomStream rng(13);
    const Transform g = random_transform(rng);
    const BackboneAtoms b = frame_to_atoms(g, 0.4);
    CHECK(vdiff(virtual_cbeta(b.n, b.ca, b.c), g * kCbetaLocal) < 1e-12);
}
