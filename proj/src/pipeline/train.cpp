// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/pipeline/train.hpp"

#include <cmath>
#include <numbers>

#include "pepbridge/error.hpp"
#include "pepbridge/igso3.hpp"
#include "pepbridge/parallel.hpp"
#include "pepbridge/vpsde.hpp"

namespace pepbridge {

namespace {

constexpr double kClipNorm = 10.0;
constexpr int kEvalEvery = 10;
constexpr int kPatience = 10;

ad::Matrix rows3(const std::vector<Vec3>& v) {
    ad::Matrix m(static_cast<int>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i) {
        m(static_cast<int>(i), 0) = v[i].x;
        m(static_cast<int>(i), 1) = v[i].y;
        m(static_cast<int>(i), 2) = v[i].z;
    }
    return m;
}

ad::Matrix flat(const std::vector<double>& v, int cols) {
    ad::Matrix m(static_cast<int>(v.size()) / cols, cols);
    m.data = v;
    return m;
}

ad::Var sq_mean_rows(ad::Var pred, ad::Matrix target) {
    ad::Tape& tape = *pred.tape;
    const int rows = pred.rows();
    return ad::scale(ad::sum(ad::square(ad::sub(pred, tape.constant(std::move(target))))), 1.0 / rows);
}

}  // namespace

PreparedComplex prepare_complex(const ComplexPair& c) {
    c.receptor_surface.validate();
    c.peptide.surface.validate();
    if (c.receptor.empty()) fail(Errc::EmptyReceptor, c.name + ": receptor has no residues");
    if (c.peptide.residues.empty()) fail(Errc::EmptyInput, c.name + ": peptide has no residues");
    if (c.receptor_surface.size() != c.peptide.surface.size())
        fail(Errc::ShapeMismatch, c.name + ": receptor and peptide surfaces must be paired");
    PreparedComplex p;
    p.normals = surface_normals(c.receptor_surface.positions, c.receptor);
    p.origin = site_origin(c.receptor_surface.positions, p.normals);
    p.receptor = c.receptor_surface;
    for (Vec3& x : p.receptor.positions) x -= p.origin;
    for (const Vec3& x : c.peptide.surface.positions) p.u0.push_back(x - p.origin);
    std::vector<Vec3> ca;
    for (const Residue& r : c.peptide.residues) {
        p.r0.push_back(r.frame.r);
        ca.push_back(r.frame.m);
        p.chi0.push_back(r.torsions);
        p.types.push_back(r.type);
    }
    for (const Vec3& x : com_project(ca)) p.m0.push_back(x * kNmPerAngstrom);
    return p;
}

TrainingExample make_example(const PreparedComplex& c, const TimeGrid& grid, int k, double K, RandomStream& rng) {
    grid.ddpm().check_index(k);
    TrainingExample ex;
    ex.k = k;
    ex.tau = grid.tau(k);
    ex.se3_t = grid.se3_time(k);
    ex.input.receptor = c.receptor;
    ex.input.normals = c.normals;
    ex.input.surface =
        bridge_sample_t(c.u0, c.receptor.positions, ex.tau * grid.bridge().T, grid.bridge(), rng);

    const std::size_t b = c.r0.size();
    std::vector<Vec3> noise(b);
    for (Vec3& z : noise) z = {rng.normal(), rng.normal(), rng.normal()};
    noise = com_project(noise);
    const double a = std::exp(-ex.se3_t / 2.0), s = std::sqrt(1.0 - std::exp(-ex.se3_t));
    for (std::size_t i = 0; i < b; ++i) {
        ResidueState r;
        r.r = c.r0[i] * igso3_sample(ex.se3_t, rng);
        r.m = c.m0[i] * a + noise[i] * s;
        ex.rot_score.push_back(igso3_score(c.r0[i], r.r, ex.se3_t));

        TorsionNoise eps{};
        for (double& e : eps) e = rng.normal();
        r.chi = torus_forward(c.chi0[i], k, grid.ddpm(), eps);
        ex.eps_ang.insert(ex.eps_ang.end(), eps.begin(), eps.end());

        LogitVector eu{};
        for (double& e : eu) e = rng.normal();
        r.v = logit_forward(logit_encode(c.types[i], K), k, grid.ddpm(), K, eu);
        ex.eps_type.insert(ex.eps_type.end(), eu.begin(), eu.end());
        ex.input.residues.push_back(r);
    }
    return ex;
}

ExampleLoss example_loss(ad::Tape& tape, const ScoreModel& model, const PreparedComplex& c,
                         const TrainingExample& ex, const LossWeights& weights) {
    const ModelOutput out = model.forward(tape, ex.input, ex.tau);
    std::array<ad::Var, 5> parts{
        sq_mean_rows(out.u0, rows3(c.u0)),
        ad::scale(sq_mean_rows(out.rot_score, rows3(ex.rot_score)), lambda_r(ex.se3_t)),
        sq_mean_rows(out.m0, rows3(c.m0)),
        ad::mean(ad::square(ad::sub(out.eps_type, tape.constant(flat(ex.eps_type, kResidueTypes))))),
        ad::mean(ad::square(ad::wrap(ad::sub(out.eps_ang, tape.constant(flat(ex.eps_ang, kTorsionCount)))))),
    };
    ExampleLoss r;
    ad::Var total = ad::scale(parts[0], weights.mu[0]);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        r.components[i] = parts[i].scalar();
        if (i > 0) total = ad::add(total, ad::scale(parts[i], weights.mu[i]));
    }
    r.total = total;
    return r;
}

LossWeights loss_weights(const TrainConfig& c) {
    LossWeights w;
    w.mu = {c.w_surface, c.w_rotation, c.w_position, c.w_type, c.w_angle};
    w.validate();
    return w;
}

TrainResult train_toy(ScoreModel& model, const std::vector<ComplexPair>& data, const TrainConfig& cfg,
                      const TrainProgress& progress) {
    cfg.validate();
    if (data.empty()) fail(Errc::EmptyInput, "training needs at least one complex");
    const LossWeights weights = loss_weights(cfg);
    const TimeGrid grid(cfg.sample_steps);
    std::vector<PreparedComplex> prepared;
    for (const ComplexPair& c : data) prepared.push_back(prepare_complex(c));

    ad::ParamSet& params = model.params();
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    std::vector<ad::Gradients> grads(batch, ad::Gradients(params));
    std::vector<double> item_loss(batch);
    std::vector<LossComponents> item_parts(batch);

    TrainResult result;
    double lr = cfg.learning_rate;
    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int step = 0; step < cfg.train_steps; ++step) {
        const std::uint64_t step_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(step));
        parallel_for(batch, [&](std::size_t b) {
            RandomStream rng(step_seed, b + 1);
            const PreparedComplex& c = prepared[rng.index(prepared.size())];
            const int k = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(grid.steps())));
            const TrainingExample ex = make_example(c, grid, k, cfg.K, rng);
            ad::Tape tape(&params);
            const ExampleLoss l = example_loss(tape, model, c, ex, weights);
            item_loss[b] = l.total.scalar();
            item_parts[b] = l.components;
            grads[b].zero();
            if (std::isfinite(item_loss[b])) {
                tape.backward(l.total);
                tape.add_param_grads(grads[b]);
            }
        });

        double loss = 0.0;
        LossComponents parts{};
        for (std::size_t b = 0; b < batch; ++b) {
            loss += item_loss[b] / static_cast<double>(batch);
            for (std::size_t i = 0; i < parts.size(); ++i) parts[i] += item_parts[b][i] / static_cast<double>(batch);
        }
        if (!std::isfinite(loss)) fail(Errc::NonFiniteLoss, "non-finite training loss at step " + std::to_string(step));
        for (std::size_t b = 1; b < batch; ++b) grads[0].add_scaled(grads[b], 1.0);
        grads[0].scale(1.0 / static_cast<double>(batch));
        const double gnorm = std::sqrt(grads[0].squared_norm());
        if (!std::isfinite(gnorm)) fail(Errc::NonFiniteLoss, "non-finite gradient at step " + std::to_string(step));
        const double clip = gnorm > kClipNorm ? kClipNorm / gnorm : 1.0;
        for (int p = 0; p < params.size(); ++p) {
            auto& w = params.value(p).data;
            const auto& g = grads[0][p].data;
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * clip * g[i];
        }

        result.loss.push_back(loss);
        result.components.push_back(parts);
        result.learning_rate.push_back(lr);
        if (progress) progress(step, loss, lr);

        if ((step + 1) % kEvalEvery == 0) {
            double window = 0.0;
            for (int i = step + 1 - kEvalEvery; i <= step; ++i) window += result.loss[static_cast<std::size_t>(i)];
            window /= kEvalEvery;
            if (window < best) {
                best = window;
                stale = 0;
            } else if (++stale >= kPatience) {
                lr = std::max(lr * cfg.decay_factor, cfg.min_learning_rate);
                stale = 0;
            }
        }
    }
    return result;
}

std::vector<double> smooth(const std::vector<double>& v, int window) {
    std::vector<double> out(v.size());
    const int n = static_cast<int>(v.size());
    const int h = std::max(window, 1) / 2;
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - h), hi = std::min(n - 1, i + h);
        double acc = 0.0;
        for (int j = lo; j <= hi; ++j) acc += v[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = acc / (hi - lo + 1);
    }
    return out;
}

}  // namespace pepbridge
