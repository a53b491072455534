// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pepbridge/geom3.hpp"

namespace pepbridge {

/// Local backbone coordinates (Angstrom) in the residue frame centred on C-alpha.
struct IdealBackbone {
    Vec3 n, ca, c, o;
};

struct BackboneAtoms {
    Vec3 n, ca, c, o;
};

const IdealBackbone& ideal_backbone();

/// Offset of the carbonyl-oxygen frame from C-alpha (the ideal C position).
inline constexpr Vec3 kPsiFrameOffset{1.526, 0.0, 0.0};

/// Idealized tetrahedral C-beta in the residue frame, used for binding-site
/// detection on backbone-only structures.
inline constexpr Vec3 kCbetaLocal{-0.529, -0.774, -1.205};

/// Places N, CA, C and the psi-dependent O of one residue.
BackboneAtoms frame_to_atoms(const Transform& frame, double psi);

/// Gram-Schmidt frame from backbone atoms: x along CA->C, N in the xy plane,
/// origin at CA. Throws DegenerateGeometry for coincident or collinear atoms.
Transform atoms_to_frame(const Vec3& n, const Vec3& ca, const Vec3& c);

Vec3 virtual_cbeta(const Vec3& n, const Vec3& ca, const Vec3& c);

}  // namespace pepbridge
