// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/pipeline/sample.hpp"

#include <cmath>
#include <numbers>

#include "pepbridge/error.hpp"
#include "pepbridge/vpsde.hpp"

namespace pepbridge {

namespace {

std::vector<Vec3> rows_to_vec3(const ad::Matrix& m) {
    std::vector<Vec3> out(static_cast<std::size_t>(m.rows));
    for (int i = 0; i < m.rows; ++i) out[static_cast<std::size_t>(i)] = {m(i, 0), m(i, 1), m(i, 2)};
    return out;
}

void check_finite(const Vec3& v, int k) {
    if (!finite(v)) fail(Errc::NonFiniteState, "sampler state diverged at grid index " + std::to_string(k));
}

}  // namespace

SurfaceCloud select_patch(const SurfaceCloud& surface, int count) {
    surface.validate();
    if (count < 1) fail(Errc::InvalidArgument, "patch size must be positive");
    if (surface.size() <= static_cast<std::size_t>(count)) return surface;
    const Vec3 c = centroid(surface.positions);
    std::size_t first = 0;
    for (std::size_t i = 1; i < surface.size(); ++i)
        if (norm(surface.positions[i] - c) < norm(surface.positions[first] - c)) first = i;
    SurfaceCloud out;
    for (std::size_t i : farthest_point_sample(surface.positions, static_cast<std::size_t>(count), first)) {
        out.positions.push_back(surface.positions[i]);
        out.hbond.push_back(surface.hbond[i]);
        out.hphob.push_back(surface.hphob[i]);
    }
    return out;
}

Peptide sample_complex(const ScoreModel& model, const ReceptorInput& receptor, const SampleConfig& cfg,
                       RandomStream& rng) {
    if (receptor.surface.size() == 0) fail(Errc::EmptyReceptor, "receptor surface is empty");
    if (receptor.residues.empty()) fail(Errc::EmptyReceptor, "receptor has no residues");
    if (cfg.length < 1) fail(Errc::InvalidArgument, "peptide length must be positive");
    const TimeGrid grid(cfg.steps);
    const double K = model.config().K;

    ModelInput in;
    in.receptor = select_patch(receptor.surface, cfg.surface_points);
    in.normals = surface_normals(in.receptor.positions, receptor.residues);
    const Vec3 origin = site_origin(in.receptor.positions, in.normals);
    for (Vec3& x : in.receptor.positions) x -= origin;
    in.surface = in.receptor.positions;
    const std::vector<Vec3>& ut_end = in.receptor.positions;

    // Priors.
    std::vector<Vec3> m(static_cast<std::size_t>(cfg.length));
    for (Vec3& x : m) x = {rng.normal(), rng.normal(), rng.normal()};
    m = com_project(m);
    in.residues.resize(static_cast<std::size_t>(cfg.length));
    for (std::size_t i = 0; i < in.residues.size(); ++i) {
        ResidueState& r = in.residues[i];
        r.r = random_rotation(rng);
        r.m = m[i];
        for (double& c : r.chi) c = wrap_angle(2.0 * std::numbers::pi * rng.uniform() - std::numbers::pi);
        for (double& v : r.v) v = K * rng.normal();
    }

    const BridgeSchedule& bs = grid.bridge();
    const double dt = bs.T / grid.steps();
    const double ds = kSe3Horizon / grid.steps();
    const DdpmSchedule& dd = grid.ddpm();
    for (int k = grid.steps(); k >= 1; --k) {
        const bool noisy = k > 1;
        ad::Tape tape(&model.params(), false);
        const ModelOutput out = model.forward(tape, in, grid.tau(k));

        // Surface bridge, with the score of q(U_t | U0_hat, U_T).
        const double te = bridge_eval_time(k, grid.steps(), bs);
        const std::vector<Vec3> u0_hat = rows_to_vec3(out.u0.value());
        const double ratio = te / bs.T;
        const double var = bs.sigma2(te) * (1.0 - ratio);
        std::vector<Vec3> score(in.surface.size());
        for (std::size_t j = 0; j < score.size(); ++j)
            score[j] = (ut_end[j] * ratio + u0_hat[j] * (1.0 - ratio) - in.surface[j]) * (1.0 / var);
        bridge_reverse_step(in.surface, ut_end, score, te, dt, bs, rng, noisy);

        // Frames: geodesic random walk for rotations, VP reverse step for positions.
        const double t = grid.se3_time(k);
        const std::vector<Vec3> rs = rows_to_vec3(out.rot_score.value());
        const std::vector<Vec3> m0 = rows_to_vec3(out.m0.value());
        std::vector<Vec3> z(in.residues.size());
        for (Vec3& v : z) v = {rng.normal(), rng.normal(), rng.normal()};
        z = com_project(z);
        const double a = std::exp(-t / 2.0), var_m = 1.0 - std::exp(-t);
        std::vector<Vec3> next_m(in.residues.size());
        const ad::Matrix& et = out.eps_type.value();
        const ad::Matrix& ea = out.eps_ang.value();
        for (std::size_t i = 0; i < in.residues.size(); ++i) {
            ResidueState& r = in.residues[i];
            Vec3 step = rs[i] * ds;
            if (noisy) step += Vec3{rng.normal(), rng.normal(), rng.normal()} * std::sqrt(ds);
            check_finite(step, k);
            r.r = orthonormalize((r.r * so3_exp({step})).matrix());

            const Vec3 sm = (r.m - m0[i] * a) * (-1.0 / var_m);
            next_m[i] = r.m + (r.m * 0.5 + sm) * ds;
            if (noisy) next_m[i] += z[i] * std::sqrt(ds);
            check_finite(next_m[i], k);

            TorsionNoise eps{};
            for (int q = 0; q < kTorsionCount; ++q) eps[static_cast<std::size_t>(q)] = ea(static_cast<int>(i), q);
            r.chi = torus_reverse_step(r.chi, eps, k, dd, rng);

            LogitVector v0{};
            const double ab = dd.alpha_bar(k);
            for (int q = 0; q < kResidueTypes; ++q) {
                const auto uq = static_cast<std::size_t>(q);
                v0[uq] = (r.v[uq] - std::sqrt(1.0 - ab) * K * et(static_cast<int>(i), q)) / std::sqrt(ab);
                if (!std::isfinite(v0[uq])) fail(Errc::NonFiniteState, "logit state diverged at grid index " +
                                                                          std::to_string(k));
            }
            r.v = logit_reverse_renoise(v0, k, dd, K, rng);
        }
        next_m = com_project(next_m);
        for (std::size_t i = 0; i < in.residues.size(); ++i) in.residues[i].m = next_m[i];
    }

    Peptide p;
    for (const Vec3& x : in.surface) {
        p.surface.positions.push_back(x + origin);
        p.surface.hbond.push_back(0.0);
        p.surface.hphob.push_back(0.0);
    }
    for (const ResidueState& r : in.residues) {
        Residue res;
        res.frame = {r.r, r.m * (1.0 / kNmPerAngstrom) + origin};
        for (std::size_t q = 0; q < res.torsions.size(); ++q) res.torsions[q] = wrap_angle(r.chi[q]);
        res.type = logit_decode(r.v);
        p.residues.push_back(res);
    }
    return p;
}

}  // namespace pepbridge
