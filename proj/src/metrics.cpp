// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "pepbridge/error.hpp"
#include "pepbridge/frames.hpp"
#include "pepbridge/parallel.hpp"
#include "pepbridge/random.hpp"
#include "pepbridge/simd.hpp"
#include "pepbridge/vpsde.hpp"

namespace pepbridge::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b)
        fail(Errc::LengthMismatch, "point sets differ in length: " + std::to_string(a) + " vs " + std::to_string(b));
}

double rms_radius(std::span<const Vec3> p) {
    const Vec3 c = centroid(p);
    double acc = 0.0;
    for (const Vec3& x : p) acc += dot(x - c, x - c);
    return std::sqrt(acc / static_cast<double>(p.size()));
}

double nearest_sq(std::span<const Vec3> points, const Vec3& q) {
    double best = 0.0;
    simd::nearest(points.data(), points.size(), q, &best);
    return best;
}

double directed_chamfer(std::span<const Vec3> from, std::span<const Vec3> to) {
    double acc = 0.0;
    for (const Vec3& q : from) acc += std::sqrt(nearest_sq(to, q));
    return acc / static_cast<double>(from.size());
}

template <class F>
std::vector<double> pair_matrix(std::size_t n, F&& dist) {
    std::vector<double> m(n * n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) m[i * n + j] = dist(i, j);
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) m[i * n + j] = m[j * n + i];
    return m;
}

double mean_upper(const std::vector<double>& m, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) acc += m[i * n + j];
    return acc / (0.5 * static_cast<double>(n * (n - 1)));
}

}  // namespace

Superposition kabsch(std::span<const Vec3> a, std::span<const Vec3> b) {
    check_lengths(a.size(), b.size());
    if (a.size() < 3) fail(Errc::DegenerateInput, "kabsch needs at least 3 points");
    const Vec3 ca = centroid(a), cb = centroid(b);
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d saa = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Vec3 p = a[i] - ca, q = b[i] - cb;
        const Eigen::Vector3d ep(p.x, p.y, p.z), eq(q.x, q.y, q.z);
        h += ep * eq.transpose();
        saa += ep * ep.transpose();
    }
    const Eigen::Vector3d spread = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(saa).eigenvalues();
    if (!(spread(1) > 1e-10 * std::max(spread(2), 1e-300)))
        fail(Errc::DegenerateInput, "kabsch input is collinear after centering");

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    const Eigen::Matrix3d r = svd.matrixV() * d * svd.matrixU().transpose();

    Superposition s;
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m.a[static_cast<std::size_t>(3 * i + j)] = r(i, j);
    s.rotation = orthonormalize(m);
    s.translation = cb - s.rotation * ca;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Vec3 e = s.rotation * a[i] + s.translation - b[i];
        acc += dot(e, e);
    }
    s.rmsd = std::sqrt(acc / static_cast<double>(a.size()));
    return s;
}

double rmsd_ca(std::span<const Vec3> gen, std::span<const Vec3> ref) { return kabsch(gen, ref).rmsd; }

double tm_d0(std::size_t length) {
    return std::max(1.24 * std::cbrt(static_cast<double>(length) - 15.0) - 1.8, 0.5);
}

double tm_from_distances(std::span<const double> d, double d0) {
    double acc = 0.0;
    for (double x : d) acc += 1.0 / (1.0 + (x / d0) * (x / d0));
    return acc / static_cast<double>(d.size());
}

double tm_score(std::span<const Vec3> a, std::span<const Vec3> b) {
    check_lengths(a.size(), b.size());
    const std::size_t n = a.size();
    if (n < 3) fail(Errc::DegenerateInput, "tm_score needs at least 3 residues");
    const double d0 = tm_d0(n);
    std::vector<double> d(n);
    double best = 0.0;

    auto evaluate = [&](const Superposition& s) {
        for (std::size_t i = 0; i < n; ++i) d[i] = norm(s.rotation * a[i] + s.translation - b[i]);
        best = std::max(best, tm_from_distances(d, d0));
    };
    auto refine = [&](std::vector<std::size_t> sel) {
        for (int iter = 0; iter < 20; ++iter) {
            std::vector<Vec3> pa, pb;
            for (std::size_t i : sel) {
                pa.push_back(a[i]);
                pb.push_back(b[i]);
            }
            Superposition s;
            try {
                s = kabsch(pa, pb);
            } catch (const Error&) {
                return;
            }
            evaluate(s);
            std::vector<std::size_t> next;
            for (double cut = 2.0 * d0; next.size() < 3 && cut < 1e6; cut *= 1.5) {
                next.clear();
                for (std::size_t i = 0; i < n; ++i)
                    if (d[i] < cut) next.push_back(i);
            }
            if (next == sel) return;
            sel = std::move(next);
        }
    };

    std::set<std::size_t> lengths{n};
    for (std::size_t len = n / 2; len >= 4; len /= 2) lengths.insert(len);
    if (n >= 4) lengths.insert(4);
    for (std::size_t len : lengths) {
        const std::size_t stride = std::max<std::size_t>(1, len / 2);
        for (std::size_t start = 0; start + len <= n; start += stride) {
            std::vector<std::size_t> sel(len);
            std::iota(sel.begin(), sel.end(), start);
            refine(std::move(sel));
        }
    }
    return best;
}

double chamfer(std::span<const Vec3> u1, std::span<const Vec3> u2) {
    if (u1.empty() || u2.empty()) fail(Errc::EmptyCloud, "chamfer distance needs two non-empty clouds");
    return 0.5 * (directed_chamfer(u1, u2) + directed_chamfer(u2, u1));
}

double surface_dissimilarity(std::span<const Vec3> u1, std::span<const Vec3> u2) {
    if (u1.empty() || u2.empty()) fail(Errc::EmptyCloud, "surface dissimilarity needs two non-empty clouds");
    std::vector<Vec3> moved(u1.begin(), u1.end());
    bool aligned = false;
    if (u1.size() == u2.size() && u1.size() >= 3) {
        try {
            const Superposition s = kabsch(u1, u2);
            for (Vec3& p : moved) p = s.rotation * p + s.translation;
            aligned = true;
        } catch (const Error&) {
        }
    }
    if (!aligned) {
        const Vec3 shift = centroid(u2) - centroid(u1);
        for (Vec3& p : moved) p += shift;
    }
    const double c = chamfer(moved, u2);
    const double rho = 0.5 * (rms_radius(u1) + rms_radius(u2));
    if (c == 0.0) return 0.0;
    return c / (c + rho);
}

double diversity(const std::vector<std::vector<Vec3>>& structures) {
    const std::size_t n = structures.size();
    if (n < 2) fail(Errc::TooFewItems, "diversity needs at least 2 structures");
    return mean_upper(pair_matrix(n, [&](std::size_t i, std::size_t j) {
                          return 1.0 - tm_score(structures[i], structures[j]);
                      }),
                      n);
}

double surface_diversity(const std::vector<std::vector<Vec3>>& surfaces) {
    const std::size_t n = surfaces.size();
    if (n < 2) fail(Errc::TooFewItems, "surface diversity needs at least 2 surfaces");
    return mean_upper(pair_matrix(n, [&](std::size_t i, std::size_t j) {
                          return surface_dissimilarity(surfaces[i], surfaces[j]);
                      }),
                      n);
}

std::vector<int> binding_site(const std::vector<io::PdbResidue>& receptor, std::span<const Vec3> ligand_atoms,
                              double cutoff) {
    std::vector<int> site;
    if (ligand_atoms.empty()) return site;
    for (std::size_t i = 0; i < receptor.size(); ++i) {
        const io::PdbResidue& r = receptor[i];
        const Vec3 cb = r.cb ? *r.cb : virtual_cbeta(r.n, r.ca, r.c);
        if (nearest_sq(ligand_atoms, cb) <= cutoff * cutoff)
            site.push_back(static_cast<int>(i));
    }
    return site;
}

double bsr(const std::vector<io::PdbResidue>& receptor, std::span<const Vec3> gen_atoms,
           std::span<const Vec3> native_atoms) {
    const std::vector<int> native = binding_site(receptor, native_atoms);
    if (native.empty()) fail(Errc::EmptyNativeSite, "native ligand contacts no receptor residue");
    const std::vector<int> gen = binding_site(receptor, gen_atoms);
    std::vector<int> both;
    std::set_intersection(native.begin(), native.end(), gen.begin(), gen.end(), std::back_inserter(both));
    return static_cast<double>(both.size()) / static_cast<double>(native.size());
}

double cramers_v(std::span<const int> x, std::span<const int> y) {
    check_lengths(x.size(), y.size());
    if (x.size() < 2) fail(Errc::DegenerateLabels, "cramers_v needs at least 2 labels");
    std::map<int, int> xi, yi;
    for (int v : x) xi.emplace(v, 0);
    for (int v : y) yi.emplace(v, 0);
    if (xi.size() < 2 || yi.size() < 2) fail(Errc::DegenerateLabels, "cramers_v needs 2 or more categories per side");
    int k = 0;
    for (auto& [v, idx] : xi) idx = k++;
    k = 0;
    for (auto& [v, idx] : yi) idx = k++;
    const std::size_t kx = xi.size(), ky = yi.size();
    std::vector<double> table(kx * ky, 0.0), rows(kx, 0.0), cols(ky, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto r = static_cast<std::size_t>(xi[x[i]]), c = static_cast<std::size_t>(yi[y[i]]);
        table[r * ky + c] += 1.0;
        rows[r] += 1.0;
        cols[c] += 1.0;
    }
    const double n = static_cast<double>(x.size());
    double chi2 = 0.0;
    for (std::size_t r = 0; r < kx; ++r)
        for (std::size_t c = 0; c < ky; ++c) {
            const double e = rows[r] * cols[c] / n;
            chi2 += (table[r * ky + c] - e) * (table[r * ky + c] - e) / e;
        }
    const double v = std::sqrt(chi2 / (n * static_cast<double>(std::min(kx, ky) - 1)));
    return std::min(v, 1.0);
}

std::vector<int> k_medoids(const std::vector<double>& dist, std::size_t n, int k, std::uint64_t seed) {
    if (dist.size() != n * n) fail(Errc::ShapeMismatch, "distance matrix must be n x n");
    if (k < 2 || static_cast<std::size_t>(k) > n) fail(Errc::InvalidArgument, "k-medoids needs 2 <= k <= n");
    auto d = [&](std::size_t i, std::size_t j) { return dist[i * n + j]; };
    RandomStream rng(seed);

    // k-medoids++ seeding.
    std::vector<std::size_t> medoids{rng.index(n)};
    std::vector<double> near(n);
    while (medoids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            near[i] = std::numeric_limits<double>::infinity();
            for (std::size_t m : medoids) near[i] = std::min(near[i], d(i, m));
            total += near[i] * near[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (std::size_t i = 0; i < n && pick == n; ++i) {
                u -= near[i] * near[i];
                if (u < 0.0 && near[i] > 0.0) pick = i;
            }
        }
        if (pick == n)  // all remaining points coincide with a medoid
            for (std::size_t i = 0; i < n && pick == n; ++i)
                if (std::find(medoids.begin(), medoids.end(), i) == medoids.end()) pick = i;
        medoids.push_back(pick);
    }

    std::vector<int> label(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < medoids.size(); ++c)
                if (d(i, medoids[c]) < d(i, medoids[best])) best = c;
            label[i] = static_cast<int>(best);
        }
        bool changed = false;
        for (std::size_t c = 0; c < medoids.size(); ++c) {
            std::size_t best = medoids[c];
            double best_cost = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                if (label[i] != static_cast<int>(c)) continue;
                double cost = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    if (label[j] == static_cast<int>(c)) cost += d(i, j);
                if (cost < best_cost) {
                    best_cost = cost;
                    best = i;
                }
            }
            if (best != medoids[c]) {
                medoids[c] = best;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return label;
}

double consistency(const std::vector<std::vector<Vec3>>& surfaces, const std::vector<std::vector<Vec3>>& structures,
                   int k, std::uint64_t seed) {
    check_lengths(surfaces.size(), structures.size());
    const std::size_t n = surfaces.size();
    if (n < static_cast<std::size_t>(std::max(k, 2))) fail(Errc::TooFewItems, "consistency needs n >= k >= 2");
    const auto ds = pair_matrix(n, [&](std::size_t i, std::size_t j) {
        return surface_dissimilarity(surfaces[i], surfaces[j]);
    });
    const auto dt = pair_matrix(n, [&](std::size_t i, std::size_t j) {
        return 1.0 - tm_score(structures[i], structures[j]);
    });
    const auto ls = k_medoids(ds, n, k, seed);
    const auto lt = k_medoids(dt, n, k, seed);
    return cramers_v(ls, lt);
}

}  // namespace pepbridge::metrics
