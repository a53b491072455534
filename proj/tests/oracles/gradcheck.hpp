// SPDX-License-Identifier: Apache-2.0
// Central finite-difference gradient oracle for tape-built scalar functions.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "pepbridge/autodiff.hpp"

namespace oracle {

using pepbridge::ad::Matrix;
using pepbridge::ad::Tape;
using pepbridge::ad::Var;

using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Largest norm-wise relative error between the tape gradient and central
/// differences, over all inputs. Step is `rel_step * max(1, |x|)`.
inline double gradcheck(const ScalarFn& f, const std::vector<Matrix>& inputs, double rel_step = 1e-4,
                        const pepbridge::ad::ParamSet* params = nullptr) {
    Tape tape(params);
    std::vector<Var> vars;
    for (const Matrix& m : inputs) vars.push_back(tape.input(m));
    Var out = f(tape, vars);
    tape.backward(out);

    auto eval = [&](const std::vector<Matrix>& xs) {
        Tape t(params, false);
        std::vector<Var> vs;
        for (const Matrix& m : xs) vs.push_back(t.constant(m));
        return f(t, vs).scalar();
    };

    double worst = 0.0;
    std::vector<Matrix> work = inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Matrix& g = tape.grad(vars[i]);
        double diff2 = 0.0, ref2 = 0.0;
        for (std::size_t k = 0; k < inputs[i].size(); ++k) {
            const double x = inputs[i].data[k];
            const double h = rel_step * std::max(1.0, std::abs(x));
            work[i].data[k] = x + h;
            const double fp = eval(work);
            work[i].data[k] = x - h;
            const double fm = eval(work);
            work[i].data[k] = x;
            const double fd = (fp - fm) / (2 * h);
            diff2 += (fd - g.data[k]) * (fd - g.data[k]);
            ref2 += fd * fd;
        }
        worst = std::max(worst, std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-8));
    }
    return worst;
}

/// Same check for parameters of a ParamSet: perturbs each selected scalar.
inline double param_gradcheck(const std::function<Var(Tape&)>& f, pepbridge::ad::ParamSet& params,
                              const std::vector<std::pair<int, std::size_t>>& coords, double rel_step = 1e-4) {
    Tape tape(&params);
    Var out = f(tape);
    tape.backward(out);
    pepbridge::ad::Gradients grads(params);
    tape.add_param_grads(grads);
    double diff2 = 0.0, ref2 = 0.0;
    for (auto [p, k] : coords) {
        double& x = params.value(p).data[k];
        const double x0 = x;
        const double h = rel_step * std::max(1.0, std::abs(x0));
        x = x0 + h;
        double fp, fm;
        {
            Tape t(&params, false);
            fp = f(t).scalar();
        }
        x = x0 - h;
        {
            Tape t(&params, false);
            fm = f(t).scalar();
        }
        x = x0;
        const double fd = (fp - fm) / (2 * h);
        diff2 += (fd - grads[p].data[k]) * (fd - grads[p].data[k]);
        ref2 += fd * fd;
    }
    return std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-8);
}

}  // namespace oracle
