// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/pipeline/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pepbridge/error.hpp"
#include "pepbridge/random.hpp"

namespace pepbridge {

namespace {

constexpr int kIndexFreqs = 8;
constexpr int kDistBasis = 16;
constexpr int kAngleBasis = 8;
constexpr double kMaxPairDistance = 30.0;
// Normal offset of the surface head is emitted in units of this many angstroms.
constexpr double kOffsetGain = 4.0;

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return v;
}

// Gaussian radial basis evaluated on plain values.
void basis(double x, const std::vector<double>& centers, double width, double* out) {
    for (std::size_t k = 0; k < centers.size(); ++k) {
        const double z = (x - centers[k]) / width;
        out[k] = std::exp(-z * z);
    }
}

ad::Matrix tile(const std::vector<double>& v, int rows) {
    ad::Matrix m(rows, static_cast<int>(v.size()));
    for (int i = 0; i < rows; ++i) std::copy(v.begin(), v.end(), m.row(i));
    return m;
}

ad::Matrix vec_rows(const std::vector<Vec3>& v, double s = 1.0) {
    ad::Matrix m(static_cast<int>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i) {
        m(static_cast<int>(i), 0) = s * v[i].x;
        m(static_cast<int>(i), 1) = s * v[i].y;
        m(static_cast<int>(i), 2) = s * v[i].z;
    }
    return m;
}

int node_width(const ModelConfig& c) { return kResidueTypes + 2 * kTorsionCount + 2 * kIndexFreqs + 2 * c.time_freqs; }
int edge_width(const ModelConfig& c) {
    return 2 * kResidueTypes + 2 * kIndexFreqs + kDistBasis + kAngleBasis + 2 * c.time_freqs;
}

}  // namespace

TimeGrid::TimeGrid(int steps)
    : steps_(steps),
      // The linear ramp is rescaled so that any grid length reaches the same
      // terminal noise level as 1e-4..0.02 over 1000 steps.
      ddpm_(DdpmSchedule::linear(std::max(steps, 1), std::min(0.1 / std::max(steps, 1), 0.5),
                                 std::min(20.0 / std::max(steps, 1), 0.999))) {
    if (steps < 1) fail(Errc::InvalidArgument, "time grid needs at least one step");
}

double position_skip(double t) {
    const double a = std::exp(-t / 2.0);
    return a * kPositionVariance / (a * a * kPositionVariance + 1.0 - a * a);
}

ModelConfig ModelConfig::from(const TrainConfig& c) {
    ModelConfig m;
    m.d_node = c.d_node;
    m.d_edge = c.d_edge;
    m.d_surface = c.d_surface;
    m.heads = c.attn_heads;
    m.gamma = c.gamma;
    m.K = c.K;
    return m;
}

ScoreModel::ScoreModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
    RandomStream rng(seed, 0x5eed);
    node_ = nn::Mlp(params_, "node", {node_width(cfg), cfg.d_node, cfg.d_node}, rng);
    edge_ = nn::Mlp(params_, "edge", {edge_width(cfg), cfg.d_edge, cfg.d_edge}, rng);
    {
        ad::Matrix w(cfg.d_edge, cfg.d_node);
        const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.d_edge));
        for (double& x : w.data) x = bound * (2.0 * rng.uniform() - 1.0);
        edge_proj_ = params_.add("edge.proj", std::move(w));
    }
    surf_rec_ = nn::Mlp(params_, "surf_rec", {5, cfg.d_surface, cfg.d_edge}, rng);
    surf_pep_ = nn::Mlp(params_, "surf_pep", {3, cfg.d_surface, cfg.d_edge}, rng);
    sfm::SfmConfig sc;
    sc.d_node = cfg.d_node;
    sc.d_surface = cfg.d_edge;
    sc.heads = cfg.heads;
    sc.hidden = cfg.d_node;
    sc.time_freqs = cfg.time_freqs;
    sc.gamma = cfg.gamma;
    for (int l = 0; l < cfg.layers; ++l) layers_.emplace_back(params_, "sfm" + std::to_string(l), sc, rng);
    frame_head_ = nn::Mlp(params_, "frame_head", {cfg.d_node, cfg.d_node, 3 + kResidueTypes + kTorsionCount}, rng);
    surface_head_ =
        nn::Mlp(params_, "surface_head", {cfg.d_edge + cfg.d_node + 2 + 2 * cfg.time_freqs, cfg.d_node, 2}, rng,
                1.0 / kOffsetGain);
}

ad::Matrix ScoreModel::node_features(const std::vector<ResidueState>& rs, double tau) const {
    const int b = static_cast<int>(rs.size());
    ad::Matrix f(b, node_width(cfg_));
    const auto te = sfm::time_encoding(tau, cfg_.time_freqs);
    for (int i = 0; i < b; ++i) {
        double* row = f.row(i);
        const ResidueState& r = rs[static_cast<std::size_t>(i)];
        for (int k = 0; k < kResidueTypes; ++k) *row++ = r.v[static_cast<std::size_t>(k)] / cfg_.K;
        for (double c : r.chi) *row++ = std::sin(c);
        for (double c : r.chi) *row++ = std::cos(c);
        nn::sinusoidal(static_cast<double>(i), kIndexFreqs, 100.0, row);
        row += 2 * kIndexFreqs;
        std::copy(te.begin(), te.end(), row);
    }
    return f;
}

ad::Matrix ScoreModel::edge_features(const std::vector<ResidueState>& rs, double tau, std::vector<int>& target) const {
    const int b = static_cast<int>(rs.size());
    const int pairs = b * (b - 1);
    ad::Matrix f(pairs, edge_width(cfg_));
    const auto te = sfm::time_encoding(tau, cfg_.time_freqs);
    static const std::vector<double> dist_c = linspace(0.0, kMaxPairDistance, kDistBasis);
    static const std::vector<double> ang_c = linspace(0.0, std::numbers::pi, kAngleBasis);
    target.clear();
    int e = 0;
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < b; ++j) {
            if (i == j) continue;
            const ResidueState& ri = rs[static_cast<std::size_t>(i)];
            const ResidueState& rj = rs[static_cast<std::size_t>(j)];
            double* row = f.row(e++);
            for (int k = 0; k < kResidueTypes; ++k) *row++ = ri.v[static_cast<std::size_t>(k)] / cfg_.K;
            for (int k = 0; k < kResidueTypes; ++k) *row++ = rj.v[static_cast<std::size_t>(k)] / cfg_.K;
            nn::sinusoidal(static_cast<double>(i - j), kIndexFreqs, 100.0, row);
            row += 2 * kIndexFreqs;
            basis(norm(ri.m - rj.m) / kNmPerAngstrom, dist_c, 2.0 * kMaxPairDistance / (kDistBasis - 1), row);
            row += kDistBasis;
            basis(geodesic_angle(ri.r, rj.r), ang_c, 2.0 * std::numbers::pi / (kAngleBasis - 1), row);
            row += kAngleBasis;
            std::copy(te.begin(), te.end(), row);
            target.push_back(i);
        }
    return f;
}

std::vector<double> ScoreModel::node_embed(const ResidueState& r, int index, double tau) const {
    ad::Matrix f = node_features({r}, tau);
    // node_features numbers residues from zero; rewrite the index block.
    nn::sinusoidal(static_cast<double>(index), kIndexFreqs, 100.0, f.row(0) + kResidueTypes + 2 * kTorsionCount);
    return node_.apply(params_, f).data;
}

std::vector<double> ScoreModel::edge_embed(const ResidueState& ri, int i, const ResidueState& rj, int j,
                                           double tau) const {
    std::vector<int> target;
    ad::Matrix f = edge_features({ri, rj}, tau, target);
    ad::Matrix one(1, f.cols);
    std::copy(f.row(0), f.row(0) + f.cols, one.row(0));
    nn::sinusoidal(static_cast<double>(i - j), kIndexFreqs, 100.0, one.row(0) + 2 * kResidueTypes);
    return edge_.apply(params_, one).data;
}

std::vector<double> ScoreModel::surface_embed(const Vec3& p) const {
    return surf_pep_.apply(params_, vec_rows({p}, kNmPerAngstrom)).data;
}

std::vector<double> ScoreModel::surface_embed(const Vec3& p, double hbond, double hphob) const {
    ad::Matrix in(1, 5);
    in.data = {p.x * kNmPerAngstrom, p.y * kNmPerAngstrom, p.z * kNmPerAngstrom, hbond, hphob};
    return surf_rec_.apply(params_, in).data;
}

ModelOutput ScoreModel::forward(ad::Tape& tape, const ModelInput& in, double tau) const {
    const int b = static_cast<int>(in.residues.size());
    const int n = static_cast<int>(in.surface.size());
    if (b < 1) fail(Errc::InvalidArgument, "model needs at least one residue");
    if (n < 1) fail(Errc::EmptyReceptor, "model needs a non-empty surface");
    if (in.receptor.size() != in.surface.size() || in.normals.size() != in.surface.size())
        fail(Errc::ShapeMismatch, "surface, receptor and normals must have equal sizes");

    // Residue nodes plus the mean of their outgoing pair embeddings.
    ad::Var h = node_.forward(tape, tape.constant(node_features(in.residues, tau)));
    if (b > 1) {
        std::vector<int> target;
        ad::Matrix ef = edge_features(in.residues, tau, target);
        ad::Var z = edge_.forward(tape, tape.constant(std::move(ef)));
        ad::Var zm = ad::scale(ad::scatter_sum_rows(z, target, b), 1.0 / (b - 1));
        h = ad::add(h, ad::matmul(zm, tape.param(edge_proj_)));
    }

    // Surface states.
    ad::Matrix rec(n, 5);
    for (int j = 0; j < n; ++j) {
        const Vec3& p = in.receptor.positions[static_cast<std::size_t>(j)];
        rec(j, 0) = p.x * kNmPerAngstrom;
        rec(j, 1) = p.y * kNmPerAngstrom;
        rec(j, 2) = p.z * kNmPerAngstrom;
        rec(j, 3) = in.receptor.hbond[static_cast<std::size_t>(j)];
        rec(j, 4) = in.receptor.hphob[static_cast<std::size_t>(j)];
    }
    ad::Var hu = ad::add(surf_pep_.forward(tape, tape.constant(vec_rows(in.surface, kNmPerAngstrom))),
                         surf_rec_.forward(tape, tape.constant(std::move(rec))));

    // Frames in Angstrom for the interaction layers.
    std::vector<Transform> frames;
    for (const ResidueState& r : in.residues) frames.push_back({r.r, r.m * (1.0 / kNmPerAngstrom)});
    sfm::FrameVars f = sfm::frame_vars(tape, h, frames);
    const ad::Var trans0 = f.trans;
    const sfm::SurfaceVars sv{hu, in.surface};
    for (const sfm::SfmLayer& layer : layers_) f = sfm::sfm_layer(tape, layer, f, sv, tau);

    ModelOutput out;
    ad::Var head = frame_head_.forward(tape, f.h_b);
    out.rot_score = ad::slice_cols(head, 0, 3);
    out.eps_type = ad::slice_cols(head, 3, kResidueTypes);
    out.eps_ang = ad::slice_cols(head, 3 + kResidueTypes, kTorsionCount);
    std::vector<Vec3> m_t;
    for (const ResidueState& r : in.residues) m_t.push_back(r.m);
    out.m0 = ad::add(tape.constant(vec_rows(m_t, position_skip(kSe3Horizon * tau))),
                     ad::scale(ad::sub(f.trans, trans0), kNmPerAngstrom));

    // Surface head: mean node state of nearby frames plus local invariants.
    const ad::Matrix& tr = f.trans.value();
    std::vector<int> fi, pj;
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    const double g2 = cfg_.gamma * cfg_.gamma;
    for (int j = 0; j < n; ++j) {
        const Vec3& x = in.surface[static_cast<std::size_t>(j)];
        for (int i = 0; i < b; ++i) {
            const Vec3 d{tr(i, 0) - x.x, tr(i, 1) - x.y, tr(i, 2) - x.z};
            if (dot(d, d) <= g2) {
                fi.push_back(i);
                pj.push_back(j);
                ++count[static_cast<std::size_t>(j)];
            }
        }
    }
    ad::Matrix inv(n, cfg_.d_node);
    for (int j = 0; j < n; ++j) {
        const int c = count[static_cast<std::size_t>(j)];
        std::fill(inv.row(j), inv.row(j) + cfg_.d_node, c ? 1.0 / c : 0.0);
    }
    ad::Var agg = ad::mul(ad::scatter_sum_rows(ad::gather_rows(f.h_b, fi), pj, n), tape.constant(std::move(inv)));

    ad::Matrix geo(n, 2), normal(n, 3), rel(n, 3);
    for (int j = 0; j < n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        const Vec3 d = in.surface[sj] - in.receptor.positions[sj];
        geo(j, 0) = norm(d) * kNmPerAngstrom;
        geo(j, 1) = dot(d, in.normals[sj]) * kNmPerAngstrom;
        normal(j, 0) = in.normals[sj].x;
        normal(j, 1) = in.normals[sj].y;
        normal(j, 2) = in.normals[sj].z;
        rel(j, 0) = d.x;
        rel(j, 1) = d.y;
        rel(j, 2) = d.z;
    }
    ad::Var ab = surface_head_.forward(
        tape, ad::concat_cols({hu, agg, tape.constant(std::move(geo)),
                               tape.constant(tile(sfm::time_encoding(tau, cfg_.time_freqs), n))}));
    ad::Var a = ad::scale(ad::slice_cols(ab, 0, 1), kOffsetGain), c = ad::slice_cols(ab, 1, 1);
    out.u0 = ad::add(tape.constant(vec_rows(in.receptor.positions)),
                     ad::add(ad::mul(ad::concat_cols({a, a, a}), tape.constant(std::move(normal))),
                             ad::mul(ad::concat_cols({c, c, c}), tape.constant(std::move(rel)))));
    return out;
}

}  // namespace pepbridge
