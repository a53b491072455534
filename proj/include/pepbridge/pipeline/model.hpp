// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "pepbridge/autodiff.hpp"
#include "pepbridge/bridge.hpp"
#include "pepbridge/io/config.hpp"
#include "pepbridge/logit.hpp"
#include "pepbridge/nn.hpp"
#include "pepbridge/schedule.hpp"
#include "pepbridge/sfmnet.hpp"
#include "pepbridge/torus.hpp"

namespace pepbridge {

/// SE(3) diffusion time reached at the end of the shared grid.
inline constexpr double kSe3Horizon = 5.0;
/// Per-coordinate prior variance of centred C-alpha positions (nm^2).
inline constexpr double kPositionVariance = 0.25;
inline constexpr double kNmPerAngstrom = 0.1;

/// Shared discretization: grid index k in 1..steps, tau = k / steps.
/// Bridge time is tau, SE(3) time is kSe3Horizon * tau and the torus / logit
/// chains use DDPM index k.
class TimeGrid {
public:
    explicit TimeGrid(int steps);
    int steps() const { return steps_; }
    double tau(int k) const { return static_cast<double>(k) / steps_; }
    double se3_time(int k) const { return kSe3Horizon * tau(k); }
    const DdpmSchedule& ddpm() const { return ddpm_; }
    const BridgeSchedule& bridge() const { return bridge_; }

private:
    int steps_;
    DdpmSchedule ddpm_;
    BridgeSchedule bridge_;
};

/// E[m0 | m_t] coefficient for m0 ~ N(0, kPositionVariance) under the VP transition.
double position_skip(double t);

struct ModelConfig {
    int d_node = 128;
    int d_edge = 64;      // also the SFMNet surface / attention width
    int d_surface = 16;   // surface embedding hidden width
    int heads = 8;
    int layers = 2;
    int time_freqs = 8;
    double gamma = 6.0;
    double K = kDefaultSharpness;
    static ModelConfig from(const TrainConfig& c);
};

/// Noisy residue state at one time point. Translations in nm, in the
/// binding-site frame.
struct ResidueState {
    Rotation r;
    Vec3 m;
    TorsionVector chi{};
    LogitVector v{};
};

/// Network input in the binding-site frame (Angstrom for surfaces).
struct ModelInput {
    std::vector<Vec3> surface;      // U_t
    SurfaceCloud receptor;          // U_T with its chemical channels
    std::vector<Vec3> normals;      // outward normals at U_T
    std::vector<ResidueState> residues;
};

struct ModelOutput {
    ad::Var u0;         // N x 3, Angstrom
    ad::Var rot_score;  // B x 3, body-frame tangent
    ad::Var m0;         // B x 3, nm
    ad::Var eps_type;   // B x 20
    ad::Var eps_ang;    // B x 5
};

class ScoreModel {
public:
    ScoreModel(const ModelConfig& cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }
    ad::ParamSet& params() { return params_; }
    const ad::ParamSet& params() const { return params_; }

    ModelOutput forward(ad::Tape& tape, const ModelInput& in, double tau) const;

    /// Node features before interaction layers.
    std::vector<double> node_embed(const ResidueState& r, int index, double tau) const;
    /// Pair features: types, signed offset i - j, distance and geodesic angle between frames, time.
    std::vector<double> edge_embed(const ResidueState& ri, int i, const ResidueState& rj, int j, double tau) const;
    /// Receptor points use position and both chemical channels; generated
    /// peptide points use position only.
    std::vector<double> surface_embed(const Vec3& position) const;
    std::vector<double> surface_embed(const Vec3& position, double hbond, double hphob) const;

private:
    ad::Matrix node_features(const std::vector<ResidueState>& rs, double tau) const;
    ad::Matrix edge_features(const std::vector<ResidueState>& rs, double tau, std::vector<int>& target) const;

    ModelConfig cfg_;
    std::uint64_t seed_;
    ad::ParamSet params_;
    nn::Mlp node_;
    nn::Mlp edge_;
    int edge_proj_ = -1;
    nn::Mlp surf_rec_;
    nn::Mlp surf_pep_;
    std::vector<sfm::SfmLayer> layers_;
    nn::Mlp frame_head_;
    nn::Mlp surface_head_;
};

}  // namespace pepbridge
