// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "pepbridge/autodiff.hpp"
#include "pepbridge/geom3.hpp"
#include "pepbridge/nn.hpp"

namespace pepbridge::sfm {

struct SfmConfig {
    int d_node = 128;      // d_B
    int d_surface = 64;    // d_U
    int heads = 8;
    int hidden = 128;
    int time_freqs = 8;    // sinusoidal time encoding has 2x this many features
    int dist_basis = 16;   // radial basis size for distances
    double gamma = 6.0;    // neighbourhood radius, Angstrom
    double message_scale = 0.1;
    double pose_scale = 0.1;  // initial scale of the pose heads
};

/// Parameters of one shape-frame matching layer.
class SfmLayer {
public:
    SfmLayer() = default;
    SfmLayer(ad::ParamSet& params, const std::string& name, const SfmConfig& cfg, RandomStream& rng);

    const SfmConfig& config() const { return cfg_; }
    int w_query() const { return w_q_; }
    int w_key() const { return w_k_; }
    const nn::Mlp& geodesic() const { return geo_; }
    const nn::Mlp& message() const { return nu_; }
    const nn::Mlp& update() const { return h_; }
    const nn::Mlp& shift() const { return m_; }
    const nn::Mlp& turn() const { return r_; }
    std::vector<double> distance_centers() const;
    double distance_width() const;

private:
    SfmConfig cfg_;
    int w_q_ = -1;
    int w_k_ = -1;
    nn::Mlp geo_;
    nn::Mlp nu_;
    nn::Mlp h_;
    nn::Mlp m_;
    nn::Mlp r_;
};

/// Plain-value node state.
struct NodeState {
    ad::Matrix h_u;                 // N_U x d_U
    std::vector<Vec3> x_u;          // N_U positions
    ad::Matrix h_b;                 // N_B x d_B
    std::vector<Transform> frames;  // N_B poses
};

/// Tape-level frame state: h_b [N_B x d_B], rotations [N_B x 9], translations [N_B x 3].
struct FrameVars {
    ad::Var h_b;
    ad::Var rot;
    ad::Var trans;
};

/// Tape-level surface: features [N_U x d_U] and fixed positions.
struct SurfaceVars {
    ad::Var h_u;
    std::vector<Vec3> x;
};

/// Scalar attention score summed over heads:
/// (h_b W_Q) . (h_u W_K + g) / sqrt(d_U).
double attention(const std::vector<double>& h_b, const std::vector<double>& h_u, const std::vector<double>& g,
                 const SfmLayer& layer, const ad::ParamSet& params);
/// Per-head attention scores.
std::vector<double> attention_heads(const std::vector<double>& h_b, const std::vector<double>& h_u,
                                    const std::vector<double>& g, const SfmLayer& layer, const ad::ParamSet& params);
/// d_U embedding of a distance. Throws NegativeDistance.
std::vector<double> geodesic_embed(double dist, const SfmLayer& layer, const ad::ParamSet& params);
/// Surface indices within gamma of frame b, ordered by (distance, position).
std::vector<int> neighborhood(int b, const NodeState& state, double gamma);
/// phi_nu([h_b, h_u, att, time encoding, distance basis]) -> d_B.
std::vector<double> message(const std::vector<double>& h_b, const std::vector<double>& h_u,
                            const std::vector<double>& att_heads, double t, double dist, const SfmLayer& layer,
                            const ad::ParamSet& params);
/// m' = m + r phi_m(h), r' = r exp(phi_r(h)).
Transform pose_update(const Transform& pose, const std::vector<double>& h, const SfmLayer& layer,
                      const ad::ParamSet& params);

/// One layer on the tape.
FrameVars sfm_layer(ad::Tape& tape, const SfmLayer& layer, const FrameVars& frames, const SurfaceVars& surface,
                    double t);
/// One layer on plain values. Surface states pass through unchanged.
NodeState sfm_layer(const NodeState& state, const SfmLayer& layer, const ad::ParamSet& params, double t);

/// Builds frame vars from plain transforms.
FrameVars frame_vars(ad::Tape& tape, ad::Var h_b, const std::vector<Transform>& frames);
std::vector<Transform> frames_of(const FrameVars& f);

/// Time encoding shared by all modules: sinusoidal(1000 t) with `freqs` frequencies.
std::vector<double> time_encoding(double t, int freqs);

}  // namespace pepbridge::sfm
