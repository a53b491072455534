// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "pepbridge/pipeline/data.hpp"
#include "pepbridge/pipeline/model.hpp"
#include "pepbridge/random.hpp"

namespace pepbridge {

struct SampleConfig {
    int steps = 1000;
    int length = 8;
    int surface_points = 128;
};

struct ReceptorInput {
    SurfaceCloud surface;                   // binding-site surface
    std::vector<io::PdbResidue> residues;   // receptor backbone
};

/// Binding-site patch used as the bridge start: the whole surface when it has
/// at most `count` points, else a farthest-point subsample seeded at the point
/// nearest the centroid.
SurfaceCloud select_patch(const SurfaceCloud& surface, int count);

/// Joint reverse process on the shared grid: surface bridge from the receptor
/// patch, frames from uniform rotations and centred unit Gaussian positions,
/// torsions from the uniform torus, logits from N(0, K^2). Output coordinates
/// are in the receptor frame; generated surface channels are zero.
/// Throws EmptyReceptor, NonFiniteState.
Peptide sample_complex(const ScoreModel& model, const ReceptorInput& receptor, const SampleConfig& cfg,
                       RandomStream& rng);

}  // namespace pepbridge
