// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pepbridge/bridge.hpp"
#include "pepbridge/geom3.hpp"
#include "pepbridge/io/pdb.hpp"
#include "pepbridge/torus.hpp"

namespace pepbridge {

/// One peptide residue: backbone frame (Angstrom), torsions and type index.
struct Residue {
    Transform frame;
    TorsionVector torsions{};
    int type = 0;
};

struct Peptide {
    SurfaceCloud surface;
    std::vector<Residue> residues;
};

/// Receptor binding-site surface (point i paired with peptide surface point i),
/// receptor backbone, and the bound peptide.
struct ComplexPair {
    std::string name;
    SurfaceCloud receptor_surface;
    std::vector<io::PdbResidue> receptor;
    Peptide peptide;
};

/// Backbone atoms N, CA, C, O of every residue, in order.
std::vector<Vec3> peptide_atoms(const Peptide& p);
std::vector<Vec3> peptide_ca(const Peptide& p);
std::vector<io::PdbResidue> peptide_to_pdb(const Peptide& p, char chain = 'P');
/// psi recovered from the carbonyl oxygen placement.
double psi_from_oxygen(const Transform& frame, const Vec3& o);

/// Farthest-point subsample of `count` indices starting at `first`.
std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t count, std::size_t first);

/// Outward normal estimate at each surface point: direction from the centroid
/// of receptor C-alpha atoms within 12 A (all C-alpha atoms when none are that close).
std::vector<Vec3> surface_normals(std::span<const Vec3> points, const std::vector<io::PdbResidue>& receptor);

/// Distance of the binding-site origin from the patch centroid along the mean normal.
inline constexpr double kSiteOffset = 7.0;
/// Binding-site origin: patch centroid + kSiteOffset * mean normal.
Vec3 site_origin(std::span<const Vec3> patch, std::span<const Vec3> normals);

struct SynthConfig {
    int surface_points = 128;
    int peptide_length = 8;
    int receptor_residues = 120;
    int receptor_surface_points = 1500;
    double receptor_radius = 18.0;
    double patch_radius = 15.0;
    double shell_offset = 3.5;      // mean peptide-surface offset from the receptor patch
    double shell_variation = 0.5;   // smooth variation of that offset
};

/// Procedural receptor blobs with complementary peptide shells; deterministic per seed.
std::vector<ComplexPair> synthetic_pairs(std::uint64_t seed, int n_complexes, const SynthConfig& cfg = {});

/// FNV-1a digest over the canonical text form of every complex.
std::uint64_t dataset_digest(const std::vector<ComplexPair>& data);

/// Directory layout: one sub-directory per complex holding receptor.pdb,
/// receptor.surf, peptide.pdb, peptide.surf and peptide.tors.
void save_complex(const std::filesystem::path& dir, const ComplexPair& c);
ComplexPair load_complex(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const std::vector<ComplexPair>& data);
/// Sub-directories in name order. Throws EmptyInput when none exist.
std::vector<ComplexPair> load_dataset(const std::filesystem::path& dir);

/// "type chi1 chi2 chi3 chi4 psi" per residue.
std::string format_torsions(const std::vector<Residue>& residues);
void parse_torsions(std::string_view text, std::vector<Residue>& residues);

}  // namespace pepbridge
