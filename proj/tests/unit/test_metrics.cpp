// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "pepbridge/error.hpp"
#include "pepbridge/frames.hpp"
#include "pepbridge/metrics.hpp"
#include "pepbridge/random.hpp"
#include "pepbridge/vpsde.hpp"

using namespace pepbridge;
using namespace pepbridge::metrics;

namespace {

std::vector<Vec3> random_chain(RandomStream& rng, int n) {
    std::vector<Vec3> p{{0, 0, 0}};
    for (int i = 1; i < n; ++i) p.push_back(p.back() + 3.8 * random_unit_vector(rng));
    return p;
}

std::vector<Vec3> moved(const std::vector<Vec3>& p, const Transform& g) {
    std::vector<Vec3> out;
    for (const Vec3& x : p) out.push_back(g * x);
    return out;
}

double brute_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    auto directed = [](const std::vector<Vec3>& f, const std::vector<Vec3>& t) {
        double acc = 0.0;
        for (const Vec3& p : f) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& q : t) best = std::min(best, norm(p - q));
            acc += best;
        }
        return acc / static_cast<double>(f.size());
    };
    return 0.5 * (directed(a, b) + directed(b, a));
}

}  // namespace

TEST_CASE("kabsch exact and rigid matches") {
    RandomStream rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_chain(rng, 3 + trial % 20);
        const Superposition self = kabsch(a, a);
        CHECK(self.rmsd < 1e-12);
        CHECK(max_abs_diff(self.rotation.matrix(), Mat3::identity()) < 1e-9);
        const Transform g{random_rotation(rng), {rng.normal() * 50, rng.normal() * 50, rng.normal() * 50}};
        const Superposition s = kabsch(a, moved(a, g));
        CHECK(s.rmsd < 1e-9);
        CHECK(determinant(s.rotation.matrix()) == doctest::Approx(1.0).epsilon(1e-12));
        // Rigid-motion invariance of the minimized rmsd.
        const auto b = random_chain(rng, static_cast<int>(a.size()));
        CHECK(kabsch(moved(a, g), b).rmsd == doctest::Approx(kabsch(a, b).rmsd).epsilon(1e-9));
    }
    const std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    CHECK_THROWS_AS(kabsch(line, line), Error);
    CHECK_THROWS_AS(rmsd_ca(line, std::vector<Vec3>(3)), Error);
}

TEST_CASE("kabsch enforces a proper rotation on a mirror image") {
    const std::vector<Vec3> chiral{{0, 0, 0}, {1.5, 0, 0}, {0, 1.0, 0}, {0, 0, 2.0}};
    std::vector<Vec3> mirror;
    for (const Vec3& p : chiral) mirror.push_back({p.x, p.y, -p.z});
    const double got = kabsch(chiral, mirror).rmsd;
    CHECK(got > 0.1);

    // Brute force over rotations with centroid alignment.
    RandomStream rng(2);
    const Vec3 ca = centroid(chiral), cb = centroid(mirror);
    double best = std::numeric_limits<double>::infinity();
    Rotation best_r;
    auto rmsd_of = [&](const Rotation& r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            const Vec3 e = r * (chiral[i] - ca) - (mirror[i] - cb);
            acc += dot(e, e);
        }
        return std::sqrt(acc / 4.0);
    };
    for (int i = 0; i < 200000; ++i) {
        const Rotation r = random_rotation(rng);
        const double v = rmsd_of(r);
        if (v < best) best = v, best_r = r;
    }
    for (double step = 0.1; step > 1e-7; step *= 0.7)
        for (int i = 0; i < 200; ++i) {
            const Rotation r = best_r * so3_exp({{step * rng.normal(), step * rng.normal(), step * rng.normal()}});
            const double v = rmsd_of(r);
            if (v < best) best = v, best_r = r;
        }
    CHECK(got <= best + 1e-9);
    CHECK(got == doctest::Approx(best).epsilon(1e-6));
}

TEST_CASE("rmsd of a planted displacement") {
    RandomStream rng(3);
    const auto a = random_chain(rng, 10);
    auto b = a;
    const double d = 2.0;
    b[4] += Vec3{0, d, 0};
    const double r = rmsd_ca(b, a);
    CHECK(r > 0.0);
    CHECK(r <= d / std::sqrt(10.0) + 1e-12);
    CHECK(rmsd_ca(a, a) < 1e-12);
}

TEST_CASE("tm score") {
    CHECK(tm_d0(8) == 0.5);
    CHECK(tm_d0(100) == doctest::Approx(1.24 * std::cbrt(85.0) - 1.8));
    const std::vector<double> at_d0(7, 0.5);
    CHECK(tm_from_distances(at_d0, 0.5) == doctest::Approx(0.5).epsilon(1e-15));

    RandomStream rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_chain(rng, 5 + trial);
        CHECK(tm_score(a, a) == doctest::Approx(1.0).epsilon(1e-12));
        const Transform g{random_rotation(rng), {rng.normal() * 9, 0, 1}};
        CHECK(tm_score(a, moved(a, g)) == doctest::Approx(1.0).epsilon(1e-9));
        const auto b = random_chain(rng, 5 + trial);
        const double ab = tm_score(a, b);
        CHECK(ab > 0.0);
        CHECK(ab <= 1.0);
        CHECK(ab == doctest::Approx(tm_score(b, a)).epsilon(1e-6));
        // Any single superposition gives a lower bound.
        const Superposition s = kabsch(a, b);
        std::vector<double> d;
        for (std::size_t i = 0; i < a.size(); ++i) d.push_back(norm(s.rotation * a[i] + s.translation - b[i]));
        CHECK(ab >= tm_from_distances(d, tm_d0(a.size())) - 1e-12);
    }
}

TEST_CASE("structural diversity") {
    RandomStream rng(5);
    const auto a = random_chain(rng, 12);
    const Transform g{random_rotation(rng), {1, 2, 3}};
    CHECK(diversity({a, a, moved(a, g)}) == doctest::Approx(0.0).epsilon(1e-9));
    const auto c = random_chain(rng, 12), d = random_chain(rng, 12);
    const double planted = diversity({a, moved(a, g), c});
    const double distinct = diversity({a, c, d});
    CHECK(planted > 1e-6);
    CHECK(planted < distinct);
    CHECK(distinct < 1.0);
    CHECK_THROWS_AS(diversity({a}), Error);
}

TEST_CASE("chamfer distance") {
    RandomStream rng(6);
    std::vector<Vec3> a, b;
    for (int i = 0; i < 300; ++i) a.push_back({rng.normal(), rng.normal(), rng.normal()});
    for (int i = 0; i < 170; ++i) b.push_back({rng.normal() + 1, rng.normal(), rng.normal()});
    CHECK(chamfer(a, a) == 0.0);
    CHECK(chamfer(a, b) == chamfer(b, a));
    CHECK(chamfer(a, b) == doctest::Approx(brute_chamfer(a, b)).epsilon(1e-12));
    CHECK(chamfer(std::vector<Vec3>{{0, 0, 0}}, std::vector<Vec3>{{1, 0, 0}}) == 1.0);
    CHECK_THROWS_AS(chamfer(a, std::vector<Vec3>{}), Error);

    CHECK(surface_dissimilarity(a, moved(a, {random_rotation(rng), {4, 5, 6}})) < 1e-9);
    const double s = surface_dissimilarity(a, b);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    CHECK(surface_diversity({a, a}) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("binding-site ratio on planted complexes") {
    // Receptor residues in a row along x, 10 A apart; ligands contact chosen ones.
    std::vector<io::PdbResidue> receptor;
    for (int i = 0; i < 6; ++i) {
        io::PdbResidue r;
        const Transform f{Rotation::identity(), {10.0 * i, 0, 0}};
        const BackboneAtoms a = frame_to_atoms(f, 0.0);
        r.n = a.n;
        r.ca = a.ca;
        r.c = a.c;
        receptor.push_back(r);
    }
    auto ligand_near = [&](std::vector<int> idx) {
        std::vector<Vec3> atoms;
        for (int i : idx) {
            const io::PdbResidue& r = receptor[static_cast<std::size_t>(i)];
            atoms.push_back(virtual_cbeta(r.n, r.ca, r.c) + Vec3{0, 0, 4.0});
        }
        return atoms;
    };
    const auto native = ligand_near({0, 1, 2, 3});
    // Oracle: brute-force scan for the native site.
    std::vector<int> brute;
    for (int i = 0; i < 6; ++i) {
        const auto& r = receptor[static_cast<std::size_t>(i)];
        for (const Vec3& p : native)
            if (norm(virtual_cbeta(r.n, r.ca, r.c) - p) <= 6.0) {
                brute.push_back(i);
                break;
            }
    }
    CHECK(binding_site(receptor, native) == brute);
    CHECK(bsr(receptor, native, native) == 1.0);
    CHECK(bsr(receptor, ligand_near({4, 5}), native) == 0.0);
    CHECK(bsr(receptor, ligand_near({2, 3, 4}), native) == 0.5);
    CHECK_THROWS_AS(bsr(receptor, native, std::vector<Vec3>{{500, 0, 0}}), Error);
}

TEST_CASE("cramers v") {
    std::vector<int> x, y;
    for (int i = 0; i < 40; ++i) x.push_back(i % 4);
    CHECK(cramers_v(x, x) == doctest::Approx(1.0).epsilon(1e-14));
    for (int v : x) y.push_back((v * 3 + 1) % 4 + 10);  // relabeled copy
    CHECK(cramers_v(x, y) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(cramers_v(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 0, 1}) == 0.0);

    RandomStream rng(7);
    std::vector<int> a(10000), b(10000);
    for (int i = 0; i < 10000; ++i) {
        a[static_cast<std::size_t>(i)] = static_cast<int>(rng.index(4));
        b[static_cast<std::size_t>(i)] = static_cast<int>(rng.index(4));
    }
    const double v = cramers_v(a, b);
    CHECK(v < 0.05);
    // Relabeling either side leaves V unchanged.
    std::vector<int> b2;
    for (int l : b) b2.push_back(3 - l);
    CHECK(cramers_v(a, b2) == doctest::Approx(v).epsilon(1e-12));
    CHECK_THROWS_AS(cramers_v(std::vector<int>{1, 1, 1}, std::vector<int>{0, 1, 2}), Error);
    CHECK_THROWS_AS(cramers_v(std::vector<int>{1, 2}, std::vector<int>{0, 1, 2}), Error);
}

TEST_CASE("consistency of coupled groups") {
    RandomStream rng(8);
    const auto s1 = random_chain(rng, 30), s2 = random_chain(rng, 30);
    const auto c1 = random_chain(rng, 8), c2 = random_chain(rng, 8);
    std::vector<std::vector<Vec3>> surfaces, structures;
    for (int i = 0; i < 6; ++i) {
        const Transform g{random_rotation(rng), {rng.normal(), rng.normal(), rng.normal()}};
        surfaces.push_back(moved(i % 2 ? s1 : s2, g));
        structures.push_back(moved(i % 2 ? c1 : c2, g));
    }
    CHECK(consistency(surfaces, structures, 2, 0) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<std::vector<Vec3>> rs, rt;
    for (int i = 0; i < 12; ++i) {
        rs.push_back(random_chain(rng, 20));
        rt.push_back(random_chain(rng, 8));
    }
    const double v = consistency(rs, rt, 3, 11);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(consistency(rs, rt, 3, 11) == v);
}
