// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <vector>

#include "pepbridge/geom3.hpp"

namespace pepbridge {

/// 1 / E[|grad log p_t(r_t | r_0)|^2] for the IGSO(3) kernel. Cached on a
/// log-spaced grid over [1e-3, 10]; evaluated directly outside it. Throws InvalidTime.
double lambda_r(double t);
/// Expected squared score norm, by quadrature over the angle marginal.
double igso3_expected_score_sq(double t);
/// (1 - e^-t) / e^(-t/2). Throws InvalidTime for t <= 0.
double lambda_m(double t);

/// lambda_r(t) * mean over residues of |score - score_pred|^2 (tangent vectors
/// in the body frame of r_t).
double loss_rotation(std::span<const Vec3> score_pred, std::span<const Rotation> r0, std::span<const Rotation> rt,
                     double t);
/// Mean over residues of |m0 - m0_hat|^2. Throws ShapeMismatch.
double loss_translation(std::span<const Vec3> m0_hat, std::span<const Vec3> m0);
/// Mean squared residual. Throws ShapeMismatch.
double loss_type(std::span<const double> eps_hat, std::span<const double> eps);
/// Mean squared wrapped residual. Throws ShapeMismatch.
double loss_ang(std::span<const double> eps_hat, std::span<const double> eps);
/// Mean over points of |U0_hat - U0|^2.
double loss_surface(std::span<const Vec3> u0_hat, std::span<const Vec3> u0);

/// Order: surface, rotation, position, type, angle.
struct LossWeights {
    std::array<double, 5> mu{0.5, 1.0, 1.0, 1.0, 1.0};
    void validate() const;
};
using LossComponents = std::array<double, 5>;

/// mu . components. Throws NonFiniteComponent.
double loss_total(const LossComponents& components, const LossWeights& weights);

}  // namespace pepbridge
