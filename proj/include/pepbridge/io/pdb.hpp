// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pepbridge/geom3.hpp"

namespace pepbridge::io {

struct PdbResidue {
    char chain = 'A';
    int resseq = 0;
    char icode = ' ';
    std::string name = "GLY";
    Vec3 n, ca, c;
    std::optional<Vec3> o;
    std::optional<Vec3> cb;
};

struct PdbParseResult {
    std::vector<PdbResidue> residues;
    int dropped = 0;  // residues missing N, CA or C
};

/// ATOM records of the first model. Throws MalformedRecord (with line number)
/// or EmptyStructure.
PdbParseResult parse_pdb_backbone(std::string_view text);
std::string write_pdb_backbone(const std::vector<PdbResidue>& residues);

/// Standard three-letter codes, indexed by residue type.
const std::array<std::string_view, 20>& residue_names();
/// Index of a three-letter code, or -1.
int residue_index(std::string_view name);

}  // namespace pepbridge::io
