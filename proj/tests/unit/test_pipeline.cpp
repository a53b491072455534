// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "pepbridge/error.hpp"
#include "pepbridge/frames.hpp"
#include "pepbridge/io/pdb.hpp"
#include "pepbridge/igso3.hpp"
#include "pepbridge/logit.hpp"
#include "pepbridge/parallel.hpp"
#include "pepbridge/pipeline/data.hpp"
#include "pepbridge/pipeline/losses.hpp"
#include "pepbridge/pipeline/model.hpp"
#include "pepbridge/pipeline/sample.hpp"
#include "pepbridge/pipeline/train.hpp"
#include "pepbridge/random.hpp"
#include "pepbridge/torus.hpp"

using namespace pepbridge;

namespace {

constexpr double kPi = std::numbers::pi;

ModelConfig small_model() {
    ModelConfig m;
    m.d_node = 16;
    m.d_edge = 16;
    m.d_surface = 8;
    m.heads = 4;
    m.time_freqs = 4;
    return m;
}

SynthConfig small_synth() {
    SynthConfig s;
    s.surface_points = 32;
    s.peptide_length = 4;
    s.receptor_residues = 60;
    s.receptor_surface_points = 600;
    return s;
}

Errc code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::Io;
}

ResidueState random_state(RandomStream& rng) {
    ResidueState r;
    r.r = random_rotation(rng);
    r.m = {rng.normal(), rng.normal(), rng.normal()};
    for (double& c : r.chi) c = kPi * (2.0 * rng.uniform() - 1.0);
    for (double& v : r.v) v = 3.0 * rng.normal();
    return r;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("lambda_m closed form") {
    CHECK(lambda_m(std::log(2.0)) == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
    double prev = 0.0;
    for (double t = 1e-3; t < 20.0; t *= 1.5) {
        const double v = lambda_m(t);
        CHECK(v > prev);
        prev = v;
    }
    CHECK(lambda_m(1e-8) < 1e-7);
    CHECK(code_of([] { lambda_m(0.0); }) == Errc::InvalidTime);
}

TEST_CASE("lambda_r against a Monte-Carlo estimate of the score norm") {
    RandomStream rng(11);
    for (double t : {0.1, 0.5, 2.0}) {
        const int n = 200000;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const Rotation r0 = random_rotation(rng);
            const Rotation rt = r0 * igso3_sample(t, rng);
            const Vec3 s = igso3_score(r0, rt, t);
            acc += dot(s, s);
        }
        const double mc = acc / n;
        CAPTURE(t);
        CHECK(lambda_r(t) > 0.0);
        CHECK(std::abs(lambda_r(t) * mc - 1.0) < 0.02);
    }
    // Cached and direct evaluation agree.
    for (double t : {2e-3, 0.037, 0.9, 7.5}) CHECK(lambda_r(t) * igso3_expected_score_sq(t) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(code_of([] { lambda_r(-1.0); }) == Errc::InvalidTime);
}

TEST_CASE("loss terms on planted inputs") {
    const std::vector<Vec3> a{{0, 0, 0}, {1, 1, 1}}, b{{1, 0, 0}, {1, 1, 3}};
    CHECK(loss_translation(a, b) == doctest::Approx(2.5));
    CHECK(loss_surface(a, b) == doctest::Approx(2.5));
    CHECK(loss_surface(a, a) == 0.0);
    CHECK(code_of([&] { loss_translation(a, std::vector<Vec3>{{0, 0, 0}}); }) == Errc::ShapeMismatch);

    const std::vector<double> e{0.0, 1.0, -2.0}, f{1.0, 1.0, 0.0};
    CHECK(loss_type(e, f) == doctest::Approx(5.0 / 3.0));
    CHECK(code_of([&] { loss_type(e, std::vector<double>{1.0}); }) == Errc::ShapeMismatch);

    // Wrapped residual across the branch cut.
    const std::vector<double> g{kPi - 0.1}, h{-kPi + 0.1};
    CHECK(loss_ang(g, h) == doctest::Approx(0.04).epsilon(1e-12));

    RandomStream rng(3);
    std::vector<Rotation> r0, rt;
    std::vector<Vec3> exact;
    for (int i = 0; i < 5; ++i) {
        r0.push_back(random_rotation(rng));
        rt.push_back(r0.back() * igso3_sample(0.3, rng));
        exact.push_back(igso3_score(r0.back(), rt.back(), 0.3));
    }
    CHECK(loss_rotation(exact, r0, rt, 0.3) < 1e-20);
    std::vector<Vec3> zero(5);
    double expect = 0.0;
    for (const Vec3& s : exact) expect += dot(s, s);
    CHECK(loss_rotation(zero, r0, rt, 0.3) == doctest::Approx(lambda_r(0.3) * expect / 5.0));
}

TEST_CASE("loss_total weighting") {
    const LossWeights w;
    CHECK(w.mu == std::array<double, 5>{0.5, 1.0, 1.0, 1.0, 1.0});
    CHECK(loss_total({1, 1, 1, 1, 1}, w) == 4.5);
    CHECK(loss_total({2, 0, 0, 0, 0}, w) == 1.0);

    RandomStream rng(5);
    for (int i = 0; i < 20; ++i) {
        LossComponents c;
        LossWeights v;
        for (double& x : c) x = rng.uniform();
        for (double& x : v.mu) x = rng.uniform();
        LossWeights v3 = v;
        for (double& x : v3.mu) x *= 3.0;
        CHECK(loss_total(c, v3) == doctest::Approx(3.0 * loss_total(c, v)));
    }
    LossComponents bad{1, std::numeric_limits<double>::quiet_NaN(), 0, 0, 0};
    CHECK(code_of([&] { loss_total(bad, w); }) == Errc::NonFiniteComponent);
}

TEST_CASE("embeddings are invariant to global rigid motions") {
    const ScoreModel model(small_model(), 2);
    RandomStream rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        ResidueState a = random_state(rng), b = random_state(rng);
        const Rotation g = random_rotation(rng);
        const Vec3 s{rng.normal(), rng.normal(), rng.normal()};
        ResidueState ga = a, gb = b;
        ga.r = g * a.r;
        ga.m = g * a.m + s;
        gb.r = g * b.r;
        gb.m = g * b.m + s;
        CHECK(max_diff(model.node_embed(a, 3, 0.4), model.node_embed(ga, 3, 0.4)) < 1e-12);
        CHECK(max_diff(model.edge_embed(a, 1, b, 4, 0.4), model.edge_embed(ga, 1, gb, 4, 0.4)) < 1e-9);
    }
    // Node features see the residue index and the time.
    ResidueState a = random_state(rng);
    CHECK(max_diff(model.node_embed(a, 0, 0.4), model.node_embed(a, 1, 0.4)) > 1e-6);
    CHECK(max_diff(model.node_embed(a, 0, 0.4), model.node_embed(a, 0, 0.5)) > 1e-6);
    // Receptor embedding depends on the chemical channels.
    const Vec3 p{1.0, -2.0, 0.5};
    CHECK(model.surface_embed(p).size() == static_cast<std::size_t>(small_model().d_edge));
    CHECK(max_diff(model.surface_embed(p, 0.1, 0.2), model.surface_embed(p, -0.5, 0.9)) > 1e-6);
    CHECK(max_diff(model.surface_embed(p), model.surface_embed(p)) == 0.0);
}

TEST_CASE("synthetic pairs") {
    const SynthConfig cfg = small_synth();
    const auto a = synthetic_pairs(21, 3, cfg), b = synthetic_pairs(21, 3, cfg), c = synthetic_pairs(22, 3, cfg);
    CHECK(dataset_digest(a) == dataset_digest(b));
    CHECK(dataset_digest(a) != dataset_digest(c));
    REQUIRE(a.size() == 3);
    for (const ComplexPair& cp : a) {
        REQUIRE(cp.receptor_surface.positions.size() == 32);
        REQUIRE(cp.peptide.surface.positions.size() == 32);
        REQUIRE(cp.peptide.residues.size() == 4);
        for (std::size_t i = 0; i < 32; ++i) {
            const double d = distance(cp.peptide.surface.positions[i], cp.receptor_surface.positions[i]);
            CHECK(d >= 3.0 - 1e-9);
            CHECK(d <= 4.0 + 1e-9);
            CHECK(cp.peptide.surface.hbond[i] == -cp.receptor_surface.hbond[i]);
        }
        const auto atoms = peptide_atoms(cp.peptide);
        REQUIRE(atoms.size() == 16);
        for (std::size_t i = 0; i < 4; ++i) {
            const Residue& r = cp.peptide.residues[i];
            const Transform back = atoms_to_frame(atoms[4 * i], atoms[4 * i + 1], atoms[4 * i + 2]);
            CHECK(geodesic_angle(back.r, r.frame.r) < 1e-9);
            CHECK(distance(back.m, r.frame.m) < 1e-9);
            CHECK(std::abs(wrap_angle(psi_from_oxygen(r.frame, atoms[4 * i + 3]) - r.torsions[4])) < 1e-9);
            CHECK(r.type >= 0);
            CHECK(r.type < 20);
        }
        // Consecutive C-alpha spacing.
        const auto ca = peptide_ca(cp.peptide);
        for (std::size_t i = 1; i < ca.size(); ++i) CHECK(distance(ca[i], ca[i - 1]) == doctest::Approx(3.8).epsilon(1e-6));
    }
}

TEST_CASE("dataset directory round trip") {
    const auto data = synthetic_pairs(4, 2, small_synth());
    const auto dir = std::filesystem::temp_directory_path() / "pepbridge_test_dataset";
    std::filesystem::remove_all(dir);
    save_dataset(dir, data);
    const auto back = load_dataset(dir);
    REQUIRE(back.size() == data.size());
    for (std::size_t k = 0; k < data.size(); ++k) {
        const ComplexPair &a = data[k], &b = back[k];
        CHECK(a.name == b.name);
        CHECK(a.receptor_surface.positions.size() == b.receptor_surface.positions.size());
        for (std::size_t i = 0; i < a.receptor_surface.positions.size(); ++i) {
            CHECK(a.receptor_surface.positions[i].x == b.receptor_surface.positions[i].x);
            CHECK(a.peptide.surface.hbond[i] == b.peptide.surface.hbond[i]);
        }
        REQUIRE(a.peptide.residues.size() == b.peptide.residues.size());
        for (std::size_t i = 0; i < a.peptide.residues.size(); ++i) {
            const Residue &ra = a.peptide.residues[i], &rb = b.peptide.residues[i];
            // Frames pass through 3-decimal PDB coordinates.
            CHECK(distance(ra.frame.m, rb.frame.m) < 2e-3);
            CHECK(geodesic_angle(ra.frame.r, rb.frame.r) < 5e-3);
            CHECK(ra.torsions == rb.torsions);
            CHECK(ra.type == rb.type);
        }
        CHECK(io::write_pdb_backbone(a.receptor) == io::write_pdb_backbone(b.receptor));
    }
    const auto dir2 = dir / "again";
    save_dataset(dir2, back);
    CHECK(dataset_digest(load_dataset(dir2)) == dataset_digest(load_dataset(dir2)));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    CHECK(code_of([&] { load_dataset(dir); }) == Errc::EmptyInput);
    std::filesystem::remove_all(dir);
}

TEST_CASE("smooth") {
    const std::vector<double> flat(30, 2.5);
    for (double x : smooth(flat, 7)) CHECK(x == doctest::Approx(2.5));
    const std::vector<double> v{1, 5, 2, 8};
    CHECK(smooth(v, 1) == v);
    const auto s = smooth(v, 3);
    CHECK(s[1] == doctest::Approx(8.0 / 3.0));
}

TEST_CASE("time grid reduces to the standard ramp at 1000 steps") {
    const TimeGrid g(1000);
    CHECK(g.ddpm().beta(1) == doctest::Approx(1e-4));
    CHECK(g.ddpm().beta(1000) == doctest::Approx(0.02));
    CHECK(g.se3_time(1000) == kSe3Horizon);
    CHECK(g.tau(500) == 0.5);
    CHECK(position_skip(1e-12) == doctest::Approx(1.0));
    CHECK(position_skip(50.0) < 1e-10);
}

TEST_CASE("sample_complex shapes and invariants") {
    const auto data = synthetic_pairs(9, 1, small_synth());
    const ScoreModel model(small_model(), 4);
    ReceptorInput rec{data[0].receptor_surface, data[0].receptor};
    SampleConfig cfg;
    cfg.steps = 20;
    cfg.length = 5;
    cfg.surface_points = 24;
    RandomStream r1(77), r2(77);
    const Peptide p = sample_complex(model, rec, cfg, r1);
    const Peptide q = sample_complex(model, rec, cfg, r2);
    REQUIRE(p.surface.positions.size() == 24);
    REQUIRE(p.residues.size() == 5);
    for (std::size_t i = 0; i < p.residues.size(); ++i) {
        const Residue& r = p.residues[i];
        const Mat3& m = r.frame.r.matrix();
        CHECK(max_abs_diff(transpose(m) * m, Mat3::identity()) < 1e-10);
        CHECK(determinant(m) == doctest::Approx(1.0).epsilon(1e-10));
        for (double c : r.torsions) {
            CHECK(c >= -kPi);
            CHECK(c < kPi);
        }
        CHECK(r.type >= 0);
        CHECK(r.type < 20);
        CHECK(r.frame.m.x == q.residues[i].frame.m.x);
    }
    for (std::size_t i = 0; i < 24; ++i) {
        CHECK(finite(p.surface.positions[i]));
        CHECK(p.surface.hbond[i] == 0.0);
        CHECK(p.surface.positions[i].y == q.surface.positions[i].y);
    }
    ReceptorInput empty;
    CHECK(code_of([&] { sample_complex(model, empty, cfg, r1); }) == Errc::EmptyReceptor);
}

TEST_CASE("train_toy is reproducible across reruns and thread counts") {
    const auto data = synthetic_pairs(12, 3, small_synth());
    TrainConfig cfg;
    cfg.train_steps = 4;
    cfg.batch_size = 3;
    cfg.seed = 5;
    auto run = [&](unsigned threads) {
        set_thread_count(threads);
        ScoreModel model(small_model(), 1);
        const TrainResult r = train_toy(model, data, cfg);
        std::vector<double> w;
        for (std::size_t i = 0; i < model.params().size(); ++i) {
            const auto& d = model.params().value(static_cast<int>(i)).data;
            w.insert(w.end(), d.begin(), d.end());
        }
        return std::pair{r.loss, w};
    };
    const auto a = run(1), b = run(1), c = run(3);
    set_thread_count(1);
    REQUIRE(a.first.size() == 4);
    CHECK(a.first == b.first);
    CHECK(a.first == c.first);
    CHECK(a.second == c.second);
    for (double x : a.first) CHECK(std::isfinite(x));

    TrainConfig wild = cfg;
    wild.learning_rate = 1e200;
    ScoreModel model(small_model(), 1);
    try {
        train_toy(model, data, wild);
        FAIL("expected NonFiniteLoss");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonFiniteLoss);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}
