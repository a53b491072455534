// SPDX-License-Identifier: Apache-2.0
#include <filesystem>

#include "doctest.h"
#include "oracles/gradcheck.hpp"
#include "pepbridge/error.hpp"
#include "pepbridge/geom3.hpp"
#include "pepbridge/igso3.hpp"
#include "pepbridge/nn.hpp"

using namespace pepbridge;
using namespace pepbridge::ad;

namespace {

Matrix randn(int r, int c, RandomStream& rng, double s = 1.0) {
    Matrix m(r, c);
    for (double& x : m.data) x = s * rng.normal();
    return m;
}

// Projects an arbitrary output to a scalar with fixed random weights.
Var project(Var out, RandomStream& rng) {
    Matrix w = randn(out.rows(), out.cols(), rng);
    return sum(mul(out, out.tape->constant(std::move(w))));
}

constexpr int kTrials = 50;
constexpr double kTol = 1e-4;

void check_op(const char* name, const std::function<std::vector<Matrix>(RandomStream&)>& make,
              const std::function<Var(const std::vector<Var>&)>& op) {
    RandomStream rng(std::hash<std::string>{}(name));
    double worst = 0.0;
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto inputs = make(rng);
        const std::uint64_t wseed = rng.next_u64();
        worst = std::max(worst, oracle::gradcheck(
                                    [&](Tape&, const std::vector<Var>& v) {
                                        RandomStream wr(wseed);
                                        return project(op(v), wr);
                                    },
                                    inputs));
    }
    INFO(std::string(name));
    CHECK(worst < kTol);
}

}  // namespace

TEST_CASE("elementwise and linear ops pass finite differences") {
    check_op("matmul", [](RandomStream& r) { return std::vector{randn(4, 5, r), randn(5, 3, r)}; },
             [](const auto& v) { return matmul(v[0], v[1]); });
    check_op("add_bias", [](RandomStream& r) { return std::vector{randn(4, 5, r), randn(1, 5, r)}; },
             [](const auto& v) { return add_bias(v[0], v[1]); });
    check_op("add", [](RandomStream& r) { return std::vector{randn(3, 4, r), randn(3, 4, r)}; },
             [](const auto& v) { return add(v[0], v[1]); });
    check_op("sub", [](RandomStream& r) { return std::vector{randn(3, 4, r), randn(3, 4, r)}; },
             [](const auto& v) { return sub(v[0], v[1]); });
    check_op("mul", [](RandomStream& r) { return std::vector{randn(3, 4, r), randn(3, 4, r)}; },
             [](const auto& v) { return mul(v[0], v[1]); });
    check_op("scale", [](RandomStream& r) { return std::vector{randn(3, 4, r)}; },
             [](const auto& v) { return scale(v[0], -2.5); });
    check_op("silu", [](RandomStream& r) { return std::vector{randn(6, 5, r, 3.0)}; },
             [](const auto& v) { return silu(v[0]); });
    check_op("square", [](RandomStream& r) { return std::vector{randn(6, 5, r)}; },
             [](const auto& v) { return square(v[0]); });
    check_op("wrap", [](RandomStream& r) { return std::vector{randn(6, 5, r, 0.5)}; },
             [](const auto& v) { return wrap(v[0]); });
    check_op("mean", [](RandomStream& r) { return std::vector{randn(6, 5, r)}; },
             [](const auto& v) { return mean(square(v[0])); });
}

TEST_CASE("structural ops pass finite differences") {
    check_op("concat_cols", [](RandomStream& r) { return std::vector{randn(3, 2, r), randn(3, 4, r), randn(3, 1, r)}; },
             [](const auto& v) { return concat_cols({v[0], v[1], v[2]}); });
    check_op("slice_cols", [](RandomStream& r) { return std::vector{randn(3, 7, r)}; },
             [](const auto& v) { return slice_cols(v[0], 2, 3); });
    check_op("gather_rows", [](RandomStream& r) { return std::vector{randn(5, 3, r)}; },
             [](const auto& v) { return gather_rows(v[0], {4, 0, 0, 2, 4, 1}); });
    check_op("scatter_sum_rows", [](RandomStream& r) { return std::vector{randn(6, 3, r)}; },
             [](const auto& v) { return scatter_sum_rows(v[0], {1, 1, 0, 3, 3, 3}, 5); });
    check_op("rowdot_heads", [](RandomStream& r) { return std::vector{randn(5, 8, r), randn(5, 8, r)}; },
             [](const auto& v) { return rowdot_heads(v[0], v[1], 4); });
    check_op("row_norm", [](RandomStream& r) { return std::vector{randn(5, 3, r)}; },
             [](const auto& v) { return row_norm(v[0]); });
    check_op("rbf", [](RandomStream& r) { return std::vector{randn(5, 1, r, 3.0)}; },
             [](const auto& v) { return rbf(v[0], {-2.0, 0.0, 1.0, 4.0}, 1.5); });
}

TEST_CASE("rotation ops pass finite differences") {
    check_op("so3_exp_rows", [](RandomStream& r) { return std::vector{randn(4, 3, r, 1.2)}; },
             [](const auto& v) { return so3_exp_rows(v[0]); });
    check_op("so3_exp_rows small", [](RandomStream& r) { return std::vector{randn(4, 3, r, 3e-4)}; },
             [](const auto& v) { return so3_exp_rows(v[0]); });
    check_op("rot_apply_rows", [](RandomStream& r) { return std::vector{randn(4, 9, r), randn(4, 3, r)}; },
             [](const auto& v) { return rot_apply_rows(v[0], v[1]); });
    check_op("rot_mul_rows", [](RandomStream& r) { return std::vector{randn(4, 9, r), randn(4, 9, r)}; },
             [](const auto& v) { return rot_mul_rows(v[0], v[1]); });

    // The score is not differentiable across the cut locus at angle pi, so the
    // relative rotation is kept below pi - 0.14.
    RandomStream rng(61);
    double worst = 0.0;
    for (double t : {0.05, 0.5, 2.0}) {
        for (int trial = 0; trial < kTrials; ++trial) {
            const Matrix u = randn(4, 3, rng, 1.0);
            Matrix rt(4, 9);
            for (int i = 0; i < 4; ++i) {
                const Rotation base = so3_exp({{u(i, 0), u(i, 1), u(i, 2)}});
                const double angle = 0.05 + 2.95 * rng.uniform();
                const Mat3 m = (base * so3_exp({random_unit_vector(rng) * angle})).matrix();
                std::copy(m.a.begin(), m.a.end(), rt.row(i));
            }
            const Matrix w = randn(4, 3, rng);
            worst = std::max(worst, oracle::gradcheck(
                                        [&](Tape& tp, const std::vector<Var>& v) {
                                            return sum(mul(igso3_score_rows(so3_exp_rows(v[0]), rt, t), tp.constant(w)));
                                        },
                                        {u}));
        }
    }
    CHECK(worst < kTol);
}

TEST_CASE("igso3_score_rows matches the scalar score") {
    RandomStream rng(62);
    Tape tape(nullptr, false);
    Matrix r0(3, 9), rt(3, 9);
    std::vector<Rotation> a, b;
    for (int i = 0; i < 3; ++i) {
        a.push_back(random_rotation(rng));
        b.push_back(a.back() * so3_exp({random_unit_vector(rng) * (0.3 + i)}));
        std::copy(a.back().matrix().a.begin(), a.back().matrix().a.end(), r0.row(i));
        std::copy(b.back().matrix().a.begin(), b.back().matrix().a.end(), rt.row(i));
    }
    const Matrix s = igso3_score_rows(tape.constant(r0), rt, 0.3).value();
    for (int i = 0; i < 3; ++i) {
        const Vec3 ref = igso3_score(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)], 0.3);
        for (int k = 0; k < 3; ++k) CHECK(std::abs(s(i, k) - ref[k]) < 1e-9 * (1 + std::abs(ref[k])));
    }
}

TEST_CASE("shape errors") {
    Tape tape;
    Var a = tape.input(Matrix(2, 3)), b = tape.input(Matrix(2, 3));
    CHECK_THROWS_AS(matmul(a, b), Error);
    CHECK_THROWS_AS(add(a, tape.input(Matrix(3, 2))), Error);
    CHECK_THROWS_AS(rowdot_heads(a, b, 2), Error);
    CHECK_THROWS_AS(tape.backward(a), Error);
}

TEST_CASE("Mlp gradients") {
    RandomStream rng(63);
    SUBCASE("single linear layer has the closed-form gradient") {
        ParamSet ps;
        nn::Mlp lin(ps, "lin", {4, 3}, rng);
        const Matrix x = randn(5, 4, rng);
        const Matrix gout = randn(5, 3, rng);
        Tape tape(&ps);
        Var y = lin.forward(tape, tape.constant(x));
        tape.backward(sum(mul(y, tape.constant(gout))));
        Gradients g(ps);
        tape.add_param_grads(g);
        for (int p = 0; p < 4; ++p)
            for (int q = 0; q < 3; ++q) {
                double ref = 0.0;
                for (int i = 0; i < 5; ++i) ref += x(i, p) * gout(i, q);
                CHECK(std::abs(g[0](p, q) - ref) < 1e-12);
            }
    }
    SUBCASE("random nets match finite differences") {
        double worst = 0.0;
        for (int trial = 0; trial < kTrials; ++trial) {
            ParamSet ps;
            nn::Mlp net(ps, "net", {5, 7, 6, 2}, rng);
            const Matrix x = randn(3, 5, rng);
            const Matrix w = randn(3, 2, rng);
            auto f = [&](Tape& t) { return sum(mul(net.forward(t, t.constant(x)), t.constant(w))); };
            std::vector<std::pair<int, std::size_t>> coords;
            for (int p = 0; p < ps.size(); ++p)
                for (std::size_t k = 0; k < ps.value(p).size(); ++k) coords.emplace_back(p, k);
            worst = std::max(worst, oracle::param_gradcheck(f, ps, coords));
            worst = std::max(worst, oracle::gradcheck(
                                        [&](Tape& t, const std::vector<Var>& v) {
                                            return sum(mul(net.forward(t, v[0]), t.constant(w)));
                                        },
                                        {x}, 1e-4, &ps));
        }
        CHECK(worst < kTol);
    }
    SUBCASE("constant output has zero gradient") {
        ParamSet ps;
        nn::Mlp net(ps, "net", {3, 4, 1}, rng);
        Tape tape(&ps);
        Var y = net.forward(tape, tape.constant(randn(2, 3, rng)));
        tape.backward(sum(scale(y, 0.0)));
        Gradients g(ps);
        tape.add_param_grads(g);
        CHECK(g.squared_norm() == 0.0);
    }
}

TEST_CASE("Mlp initialization is reproducible and checkpoints are bit-exact") {
    auto build = [](std::uint64_t seed, ParamSet& ps) {
        RandomStream rng(seed);
        return nn::Mlp(ps, "m", {3, 8, 2}, rng);
    };
    ParamSet a, b, c;
    const nn::Mlp ma = build(7, a);
    build(7, b);
    build(8, c);
    CHECK(a.flatten() == b.flatten());
    CHECK(a.flatten() != c.flatten());

    const auto path = std::filesystem::temp_directory_path() / "pepbridge_ckpt_test.txt";
    nn::save_checkpoint(path, 7, "learning_rate=0.0005\n", a);
    const nn::Checkpoint ck = nn::load_checkpoint(path);
    CHECK(ck.seed == 7);
    CHECK(ck.config == "learning_rate=0.0005\n");
    nn::restore_params(ck, c);
    CHECK(a.flatten() == c.flatten());
    RandomStream rng(3);
    const Matrix x = randn(4, 3, rng);
    CHECK(ma.apply(a, x) == ma.apply(c, x));

    ParamSet other;
    RandomStream r2(1);
    nn::Mlp(other, "m", {3, 9, 2}, r2);
    CHECK_THROWS_AS(nn::restore_params(ck, other), Error);
    std::filesystem::remove(path);
}

TEST_CASE("sinusoidal encoding") {
    const auto e0 = nn::sinusoidal(0.0, 4);
    for (int k = 0; k < 4; ++k) {
        CHECK(e0[2 * k] == 0.0);
        CHECK(e0[2 * k + 1] == 1.0);
    }
    CHECK(nn::sinusoidal(0.3, 4) != nn::sinusoidal(0.31, 4));
}
