// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "pepbridge/geom3.hpp"
#include "pepbridge/random.hpp"

namespace pepbridge {

/// Smallest order L >= 10 whose dropped tail bound (2L+3)^2 exp(-L(L+1)t/2)
/// is below 1e-8.
int igso3_truncation(double t);

/// Heat-kernel density on SO(3) as a function of the rotation angle,
/// f(w,t) = sum_l (2l+1) exp(-l(l+1)t/2) sin((l+1/2)w) / sin(w/2).
double igso3_density(double omega, double t, int order);
/// Adaptive order; for t < 1 the equivalent image sum is used away from w = 0.
double igso3_density(double omega, double t);

struct Igso3Derivatives {
    double f = 0.0;    // density
    double df = 0.0;   // d/dw
    double d2f = 0.0;  // d^2/dw^2
};
Igso3Derivatives igso3_series(double omega, double t, int order);

/// Density of the rotation angle alone: f(w,t) (1 - cos w) / pi.
double igso3_angle_pdf(double omega, double t);
/// Closed-form CDF of the angle marginal.
double igso3_angle_cdf(double omega, double t);

/// d/dw log f(w, t).
double igso3_dlog_density(double omega, double t);

/// Conditional score of r_t given r_0 as a tangent vector in the body frame of r_t:
/// log(r0^T rt) * (d_w f / f) / w. Zero when the relative angle is below 1e-6.
Vec3 igso3_score(const Rotation& r0, const Rotation& rt, double t);

/// score(v) = kappa(|v|) v with kappa(w) = (d_w f / f) / w; also returns d kappa / d w.
struct Igso3ScoreCoefficients {
    double kappa = 0.0;
    double dkappa = 0.0;
};
Igso3ScoreCoefficients igso3_score_coefficients(double omega, double t);

/// Tabulated angle density and CDF on a (log t) x (omega) grid, used for
/// inverse-CDF sampling. Immutable once built.
class Igso3Table {
public:
    static constexpr int kDefaultOmegaBins = 1000;
    static constexpr int kDefaultTimes = 100;
    static constexpr double kDefaultTMin = 1e-3;
    static constexpr double kDefaultTMax = 10.0;
    static constexpr unsigned kFormatVersion = 1;

    static Igso3Table build(int omega_bins = kDefaultOmegaBins, int times = kDefaultTimes,
                            double t_min = kDefaultTMin, double t_max = kDefaultTMax);

    void save(const std::filesystem::path& path) const;
    /// Throws BadMagic / CountMismatch / Io on a malformed blob.
    static Igso3Table load(const std::filesystem::path& path);

    /// Inverse-CDF draw of the rotation angle at time t.
    double sample_angle(double t, RandomStream& rng) const;
    /// CDF at grid angle index k, linearly interpolated in log t.
    double cdf_at(double t, int k) const;

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& omegas() const { return omegas_; }
    double density(int ti, int k) const { return density_[index(ti, k)]; }
    double cdf(int ti, int k) const { return cdf_[index(ti, k)]; }

    bool operator==(const Igso3Table&) const = default;

private:
    std::size_t index(int ti, int k) const {
        return static_cast<std::size_t>(ti) * omegas_.size() + static_cast<std::size_t>(k);
    }

    std::vector<double> times_;
    std::vector<double> omegas_;
    std::vector<double> density_;
    std::vector<double> cdf_;
};

/// Process-wide table, built on first use. When PEPBRIDGE_CACHE_DIR is set the
/// table is loaded from / persisted to that directory.
const Igso3Table& igso3_table();

/// Rotation with IGSO(3)-distributed angle and uniform axis.
Rotation igso3_sample(double t, RandomStream& rng);

}  // namespace pepbridge
