// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "pepbridge/io/config.hpp"
#include "pepbridge/pipeline/data.hpp"
#include "pepbridge/pipeline/losses.hpp"
#include "pepbridge/pipeline/model.hpp"

namespace pepbridge {

/// A complex expressed in its binding-site frame: receptor and peptide
/// surfaces in Angstrom relative to the site origin, centred C-alpha in nm.
struct PreparedComplex {
    Vec3 origin;
    SurfaceCloud receptor;
    std::vector<Vec3> normals;
    std::vector<Vec3> u0;
    std::vector<Rotation> r0;
    std::vector<Vec3> m0;
    std::vector<TorsionVector> chi0;
    std::vector<int> types;
};
PreparedComplex prepare_complex(const ComplexPair& c);

/// Noisy input at grid index k with the regression targets.
struct TrainingExample {
    ModelInput input;
    int k = 1;
    double tau = 0.0;
    double se3_t = 0.0;
    std::vector<Vec3> rot_score;          // true IGSO(3) score, body frame of r_t
    std::vector<double> eps_type;         // B x 20, unit variance
    std::vector<double> eps_ang;          // B x 5
};
TrainingExample make_example(const PreparedComplex& c, const TimeGrid& grid, int k, double K, RandomStream& rng);

struct ExampleLoss {
    ad::Var total;
    LossComponents components{};
};
/// The weighted objective of one example on a tape.
ExampleLoss example_loss(ad::Tape& tape, const ScoreModel& model, const PreparedComplex& c,
                         const TrainingExample& ex, const LossWeights& weights);

LossWeights loss_weights(const TrainConfig& c);

struct TrainResult {
    std::vector<double> loss;                  // mean total loss per step
    std::vector<LossComponents> components;    // mean components per step
    std::vector<double> learning_rate;         // rate used at each step
};

using TrainProgress = std::function<void(int step, double loss, double lr)>;

/// Minibatch SGD with global-norm clipping and plateau decay of the learning
/// rate. Batch items are evaluated in parallel with per-item random streams and
/// reduced in a fixed order, so results do not depend on the thread count.
/// Throws NonFiniteLoss naming the step.
TrainResult train_toy(ScoreModel& model, const std::vector<ComplexPair>& data, const TrainConfig& cfg,
                      const TrainProgress& progress = {});

/// Centred moving average with the given window (shrinking at the ends).
std::vector<double> smooth(const std::vector<double>& v, int window);

}  // namespace pepbridge
