// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pepbridge/geom3.hpp"
#include "pepbridge/io/pdb.hpp"

namespace pepbridge::metrics {

/// Maps A onto B: b_i ~ rotation * a_i + translation.
struct Superposition {
    Rotation rotation;
    Vec3 translation;
    double rmsd = 0.0;
};

/// Least-squares proper superposition. Throws DegenerateInput for n < 3 or
/// collinear points, LengthMismatch for unequal sizes.
Superposition kabsch(std::span<const Vec3> a, std::span<const Vec3> b);
double rmsd_ca(std::span<const Vec3> gen, std::span<const Vec3> ref);

/// max(1.24 (L - 15)^(1/3) - 1.8, 0.5)
double tm_d0(std::size_t length);
/// (1/L) sum 1 / (1 + (d_i / d0)^2)
double tm_from_distances(std::span<const double> d, double d0);
/// Sequential one-to-one TM-score with iterated fragment superposition search.
double tm_score(std::span<const Vec3> a, std::span<const Vec3> b);

/// Symmetric mean nearest-neighbour distance. Throws EmptyCloud.
double chamfer(std::span<const Vec3> u1, std::span<const Vec3> u2);
/// Chamfer distance after Kabsch pre-alignment (index pairing when sizes match,
/// centroid alignment otherwise), mapped to [0, 1) by c / (c + rho) with rho the
/// mean RMS radius of the two clouds.
double surface_dissimilarity(std::span<const Vec3> u1, std::span<const Vec3> u2);

/// Mean over unordered pairs of 1 - tm_score. Throws TooFewItems.
double diversity(const std::vector<std::vector<Vec3>>& structures);
double surface_diversity(const std::vector<std::vector<Vec3>>& surfaces);

/// Indices of receptor residues whose C-beta (virtual when absent) lies within
/// `cutoff` of any ligand atom.
std::vector<int> binding_site(const std::vector<io::PdbResidue>& receptor, std::span<const Vec3> ligand_atoms,
                              double cutoff = 6.0);
/// |site(gen) n site(native)| / |site(native)|. Throws EmptyNativeSite.
double bsr(const std::vector<io::PdbResidue>& receptor, std::span<const Vec3> gen_atoms,
           std::span<const Vec3> native_atoms);

/// Cramer's V of two labelings. Throws LengthMismatch, DegenerateLabels.
double cramers_v(std::span<const int> x, std::span<const int> y);

/// k-medoids on a row-major n x n distance matrix; deterministic per seed.
std::vector<int> k_medoids(const std::vector<double>& dist, std::size_t n, int k, std::uint64_t seed);

/// Cramer's V between k-medoid clusterings of surfaces (surface dissimilarity)
/// and structures (1 - TM-score).
double consistency(const std::vector<std::vector<Vec3>>& surfaces, const std::vector<std::vector<Vec3>>& structures,
                   int k = 5, std::uint64_t seed = 0);

}  // namespace pepbridge::metrics
