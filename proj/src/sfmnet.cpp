// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/sfmnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pepbridge/error.hpp"
#include "pepbridge/simd.hpp"

namespace pepbridge::sfm {

namespace {

ad::Matrix row_matrix(const std::vector<double>& v) {
    ad::Matrix m(1, static_cast<int>(v.size()));
    std::copy(v.begin(), v.end(), m.data.begin());
    return m;
}

void check_width(std::size_t got, int want, const char* what) {
    if (static_cast<int>(got) != want)
        fail(Errc::DimensionMismatch, std::string(what) + ": expected " + std::to_string(want) + " values, got " +
                                          std::to_string(got));
}

ad::Matrix tile_rows(const std::vector<double>& v, int rows) {
    ad::Matrix m(rows, static_cast<int>(v.size()));
    for (int i = 0; i < rows; ++i) std::copy(v.begin(), v.end(), m.row(i));
    return m;
}

struct Edges {
    std::vector<int> frame;
    std::vector<int> point;
};

Edges build_edges(const ad::Matrix& trans, const std::vector<Vec3>& x, double gamma) {
    Edges e;
    std::vector<double> d2(x.size());
    std::vector<int> order;
    const double g2 = gamma * gamma;
    for (int b = 0; b < trans.rows; ++b) {
        const Vec3 q{trans(b, 0), trans(b, 1), trans(b, 2)};
        if (!x.empty()) simd::squared_distances(x.data(), x.size(), q, d2.data());
        order.clear();
        for (std::size_t j = 0; j < x.size(); ++j)
            if (d2[j] <= g2) order.push_back(static_cast<int>(j));
        // Canonical order: the aggregate does not depend on how points are listed.
        std::sort(order.begin(), order.end(), [&](int i, int j) {
            const auto key = [&](int k) {
                return std::make_tuple(d2[static_cast<std::size_t>(k)], x[static_cast<std::size_t>(k)].x,
                                       x[static_cast<std::size_t>(k)].y, x[static_cast<std::size_t>(k)].z);
            };
            return key(i) < key(j);
        });
        for (int j : order) {
            e.frame.push_back(b);
            e.point.push_back(j);
        }
    }
    return e;
}

}  // namespace

std::vector<double> time_encoding(double t, int freqs) { return nn::sinusoidal(1000.0 * t, freqs, 10000.0); }

SfmLayer::SfmLayer(ad::ParamSet& params, const std::string& name, const SfmConfig& cfg, RandomStream& rng)
    : cfg_(cfg) {
    if (cfg.d_surface % cfg.heads != 0) fail(Errc::InvalidArgument, "d_surface must be divisible by heads");
    if (!(cfg.gamma > 0.0)) fail(Errc::InvalidArgument, "gamma must be positive");
    auto uniform = [&](int rows, int cols) {
        ad::Matrix m(rows, cols);
        const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
        for (double& x : m.data) x = bound * (2.0 * rng.uniform() - 1.0);
        return m;
    };
    w_q_ = params.add(name + ".w_q", uniform(cfg.d_node, cfg.d_surface));
    w_k_ = params.add(name + ".w_k", uniform(cfg.d_surface, cfg.d_surface));
    geo_ = nn::Mlp(params, name + ".geo", {cfg.dist_basis, cfg.d_surface, cfg.d_surface}, rng);
    const int msg_in = cfg.d_node + cfg.d_surface + cfg.heads + 2 * cfg.time_freqs + cfg.dist_basis;
    nu_ = nn::Mlp(params, name + ".nu", {msg_in, cfg.hidden, cfg.d_node}, rng);
    h_ = nn::Mlp(params, name + ".h", {2 * cfg.d_node, cfg.hidden, cfg.d_node}, rng);
    m_ = nn::Mlp(params, name + ".m", {cfg.d_node, cfg.hidden, 3}, rng, cfg.pose_scale);
    r_ = nn::Mlp(params, name + ".r", {cfg.d_node, cfg.hidden, 3}, rng, cfg.pose_scale);
}

std::vector<double> SfmLayer::distance_centers() const {
    std::vector<double> c(static_cast<std::size_t>(cfg_.dist_basis));
    for (int k = 0; k < cfg_.dist_basis; ++k) c[static_cast<std::size_t>(k)] = cfg_.gamma * k / (cfg_.dist_basis - 1);
    return c;
}

double SfmLayer::distance_width() const { return 2.0 * cfg_.gamma / (cfg_.dist_basis - 1); }

std::vector<double> attention_heads(const std::vector<double>& h_b, const std::vector<double>& h_u,
                                    const std::vector<double>& g, const SfmLayer& layer, const ad::ParamSet& params) {
    const SfmConfig& cfg = layer.config();
    check_width(h_b.size(), cfg.d_node, "attention h_b");
    check_width(h_u.size(), cfg.d_surface, "attention h_u");
    check_width(g.size(), cfg.d_surface, "attention g");
    ad::Tape tape(&params, false);
    ad::Var q = ad::matmul(tape.constant(row_matrix(h_b)), tape.param(layer.w_query()));
    ad::Var k = ad::add(ad::matmul(tape.constant(row_matrix(h_u)), tape.param(layer.w_key())),
                        tape.constant(row_matrix(g)));
    const ad::Matrix a = ad::scale(ad::rowdot_heads(q, k, cfg.heads), 1.0 / std::sqrt(cfg.d_surface)).value();
    return a.data;
}

double attention(const std::vector<double>& h_b, const std::vector<double>& h_u, const std::vector<double>& g,
                 const SfmLayer& layer, const ad::ParamSet& params) {
    const std::vector<double> heads = attention_heads(h_b, h_u, g, layer, params);
    return std::accumulate(heads.begin(), heads.end(), 0.0);
}

std::vector<double> geodesic_embed(double dist, const SfmLayer& layer, const ad::ParamSet& params) {
    if (!(dist >= 0.0)) fail(Errc::NegativeDistance, "distance must be non-negative, got " + std::to_string(dist));
    ad::Tape tape(&params, false);
    ad::Var basis = ad::rbf(tape.constant(ad::Matrix(1, 1, dist)), layer.distance_centers(), layer.distance_width());
    return layer.geodesic().forward(tape, basis).value().data;
}

std::vector<int> neighborhood(int b, const NodeState& state, double gamma) {
    if (b < 0 || b >= static_cast<int>(state.frames.size())) fail(Errc::InvalidArgument, "frame index out of range");
    ad::Matrix trans(1, 3);
    const Vec3 m = state.frames[static_cast<std::size_t>(b)].m;
    trans(0, 0) = m.x;
    trans(0, 1) = m.y;
    trans(0, 2) = m.z;
    return build_edges(trans, state.x_u, gamma).point;
}

std::vector<double> message(const std::vector<double>& h_b, const std::vector<double>& h_u,
                            const std::vector<double>& att_heads, double t, double dist, const SfmLayer& layer,
                            const ad::ParamSet& params) {
    const SfmConfig& cfg = layer.config();
    check_width(h_b.size(), cfg.d_node, "message h_b");
    check_width(h_u.size(), cfg.d_surface, "message h_u");
    check_width(att_heads.size(), cfg.heads, "message attention");
    ad::Tape tape(&params, false);
    ad::Var basis = ad::rbf(tape.constant(ad::Matrix(1, 1, dist)), layer.distance_centers(), layer.distance_width());
    ad::Var in = ad::concat_cols({tape.constant(row_matrix(h_b)), tape.constant(row_matrix(h_u)),
                                  tape.constant(row_matrix(att_heads)),
                                  tape.constant(row_matrix(time_encoding(t, cfg.time_freqs))), basis});
    return layer.message().forward(tape, in).value().data;
}

Transform pose_update(const Transform& pose, const std::vector<double>& h, const SfmLayer& layer,
                      const ad::ParamSet& params) {
    check_width(h.size(), layer.config().d_node, "pose_update h");
    const ad::Matrix hm = row_matrix(h);
    const ad::Matrix dm = layer.shift().apply(params, hm);
    const ad::Matrix dr = layer.turn().apply(params, hm);
    Transform out;
    out.m = pose.m + pose.r * Vec3{dm.data[0], dm.data[1], dm.data[2]};
    out.r = Rotation(pose.r.matrix() * so3_exp({{dr.data[0], dr.data[1], dr.data[2]}}).matrix());
    return out;
}

FrameVars sfm_layer(ad::Tape& tape, const SfmLayer& layer, const FrameVars& frames, const SurfaceVars& surface,
                    double t) {
    const SfmConfig& cfg = layer.config();
    const int nb = frames.h_b.rows();
    if (frames.h_b.cols() != cfg.d_node || frames.rot.rows() != nb || frames.trans.rows() != nb)
        fail(Errc::DimensionMismatch, "sfm_layer: inconsistent frame state");
    if (surface.h_u.cols() != cfg.d_surface || surface.h_u.rows() != static_cast<int>(surface.x.size()))
        fail(Errc::DimensionMismatch, "sfm_layer: inconsistent surface state");

    const Edges e = build_edges(frames.trans.value(), surface.x, cfg.gamma);
    const int ne = static_cast<int>(e.frame.size());

    ad::Matrix xu(ne, 3);
    for (int k = 0; k < ne; ++k) {
        const Vec3& p = surface.x[static_cast<std::size_t>(e.point[static_cast<std::size_t>(k)])];
        xu(k, 0) = p.x;
        xu(k, 1) = p.y;
        xu(k, 2) = p.z;
    }
    ad::Var dist = ad::row_norm(ad::sub(ad::gather_rows(frames.trans, e.frame), tape.constant(std::move(xu))));
    ad::Var basis = ad::rbf(dist, layer.distance_centers(), layer.distance_width());
    ad::Var g = layer.geodesic().forward(tape, basis);

    ad::Var q = ad::gather_rows(ad::matmul(frames.h_b, tape.param(layer.w_query())), e.frame);
    ad::Var k = ad::gather_rows(ad::matmul(surface.h_u, tape.param(layer.w_key())), e.point);
    ad::Var att = ad::scale(ad::rowdot_heads(q, ad::add(k, g), cfg.heads), 1.0 / std::sqrt(cfg.d_surface));

    ad::Var msg_in = ad::concat_cols({ad::gather_rows(frames.h_b, e.frame), ad::gather_rows(surface.h_u, e.point), att,
                                      tape.constant(tile_rows(time_encoding(t, cfg.time_freqs), ne)), basis});
    ad::Var msg = layer.message().forward(tape, msg_in);
    ad::Var agg = ad::scale(ad::scatter_sum_rows(msg, e.frame, nb), cfg.message_scale);

    FrameVars out;
    out.h_b = ad::add(frames.h_b, layer.update().forward(tape, ad::concat_cols({frames.h_b, agg})));
    out.trans = ad::add(frames.trans, ad::rot_apply_rows(frames.rot, layer.shift().forward(tape, out.h_b)));
    out.rot = ad::rot_mul_rows(frames.rot, ad::so3_exp_rows(layer.turn().forward(tape, out.h_b)));
    return out;
}

FrameVars frame_vars(ad::Tape& tape, ad::Var h_b, const std::vector<Transform>& frames) {
    const int n = static_cast<int>(frames.size());
    ad::Matrix rot(n, 9), trans(n, 3);
    for (int i = 0; i < n; ++i) {
        const Transform& f = frames[static_cast<std::size_t>(i)];
        std::copy(f.r.matrix().a.begin(), f.r.matrix().a.end(), rot.row(i));
        trans(i, 0) = f.m.x;
        trans(i, 1) = f.m.y;
        trans(i, 2) = f.m.z;
    }
    return {h_b, tape.constant(std::move(rot)), tape.constant(std::move(trans))};
}

std::vector<Transform> frames_of(const FrameVars& f) {
    const ad::Matrix& rot = f.rot.value();
    const ad::Matrix& trans = f.trans.value();
    std::vector<Transform> out(static_cast<std::size_t>(rot.rows));
    for (int i = 0; i < rot.rows; ++i) {
        Mat3 m;
        std::copy(rot.row(i), rot.row(i) + 9, m.a.begin());
        out[static_cast<std::size_t>(i)] = {Rotation(m), {trans(i, 0), trans(i, 1), trans(i, 2)}};
    }
    return out;
}

NodeState sfm_layer(const NodeState& state, const SfmLayer& layer, const ad::ParamSet& params, double t) {
    if (state.h_b.rows != static_cast<int>(state.frames.size()))
        fail(Errc::DimensionMismatch, "node state: h_b rows differ from frame count");
    ad::Tape tape(&params, false);
    FrameVars f = frame_vars(tape, tape.constant(state.h_b), state.frames);
    SurfaceVars s{tape.constant(state.h_u), state.x_u};
    FrameVars out = sfm_layer(tape, layer, f, s, t);
    NodeState next = state;
    next.h_b = out.h_b.value();
    next.frames = frames_of(out);
    return next;
}

}  // namespace pepbridge::sfm
