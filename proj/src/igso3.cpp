// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/igso3.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>

#include "pepbridge/error.hpp"
#include "pepbridge/io/atomic_file.hpp"

namespace pepbridge {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTailTolerance = 1e-8;
constexpr int kMinOrder = 10;
// Below this angle each series term uses its Taylor expansion.
constexpr double kSeriesSmallAngle = 1e-4;
constexpr char kMagic[8] = {'I', 'G', 'S', 'O', '3', 'T', 'B', 'L'};

void check_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) fail(Errc::InvalidTime, "IGSO(3) needs t > 0, got " + std::to_string(t));
}

double weight(int l, double t) { return std::exp(-0.5 * l * (l + 1.0) * t); }

// Density row on a grid using the Chebyshev recurrence for sin((l+1/2)w).
void density_row(double t, const std::vector<double>& omegas, double* out) {
    const int order = igso3_truncation(t);
    std::vector<double> w(static_cast<std::size_t>(order) + 1);
    for (int l = 0; l <= order; ++l) w[static_cast<std::size_t>(l)] = (2.0 * l + 1.0) * weight(l, t);
    for (std::size_t k = 0; k < omegas.size(); ++k) {
        const double om = omegas[k];
        const double half = std::sin(0.5 * om);
        double acc = 0.0;
        if (half < 1e-12) {
            for (int l = 0; l <= order; ++l) acc += w[static_cast<std::size_t>(l)] * (2.0 * l + 1.0);
        } else {
            const double c2 = 2.0 * std::cos(om);
            double prev = -half, cur = half;
            for (int l = 0; l <= order; ++l) {
                acc += w[static_cast<std::size_t>(l)] * cur;
                const double next = c2 * cur - prev;
                prev = cur;
                cur = next;
            }
            acc /= half;
        }
        out[k] = acc;
    }
}

// Angle-marginal CDF row: term l integrates to (sin(lw)/l - sin((l+1)w)/(l+1)) / pi.
void cdf_row(double t, const std::vector<double>& omegas, double* out) {
    const int order = igso3_truncation(t);
    for (std::size_t k = 0; k < omegas.size(); ++k) {
        const double om = omegas[k];
        const double c2 = 2.0 * std::cos(om);
        double acc = om - std::sin(om);
        double s_prev = 0.0, s_cur = std::sin(om);  // sin(l w) at l = 0, 1
        for (int l = 1; l <= order; ++l) {
            const double s_next = c2 * s_cur - s_prev;
            acc += (2.0 * l + 1.0) * weight(l, t) * (s_cur / l - s_next / (l + 1.0));
            s_prev = s_cur;
            s_cur = s_next;
        }
        out[k] = acc / kPi;
    }
}

// log f and its first two angle derivatives from the image sum
//   f = e^{t/8} sqrt(2 pi) t^{-3/2} / sin(w/2) * sum_k (-1)^k (w + 2 pi k) exp(-(w + 2 pi k)^2 / (2t)),
// which stays accurate where the l-series cancels (small t, large w).
constexpr double kImageMaxTime = 1.0;
constexpr double kImageMinAngle = 1e-3;
constexpr int kImages = 4;

struct LogDerivatives {
    double logf, dlogf, d2logf;
};

LogDerivatives image_log_derivatives(double omega, double t) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (int k = -kImages; k <= kImages; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        const double x = omega + 2.0 * kPi * k;
        const double c = 2.0 * kPi * k / t;
        // Shifted by exp(-w^2/(2t)); exponent 2 pi k (w + pi k) / t is >= 0 on [0, pi].
        const double e = sign * std::exp(-c * (omega + kPi * k));
        s0 += e * x;
        s1 += e * (1.0 - x * c);
        s2 += e * c * (x * c - 2.0);
    }
    const double half = 0.5 * omega;
    const double cot = std::cos(half) / std::sin(half);
    const double csc2 = 1.0 / (std::sin(half) * std::sin(half));
    const double r1 = s1 / s0;
    LogDerivatives out;
    out.logf = t / 8.0 + 0.5 * std::log(2.0 * kPi) - 1.5 * std::log(t) - std::log(std::sin(half)) -
               omega * omega / (2.0 * t) + std::log(s0);
    out.dlogf = -0.5 * cot - omega / t + r1;
    out.d2logf = 0.25 * csc2 - 1.0 / t + s2 / s0 - r1 * r1;
    return out;
}

bool use_images(double omega, double t) { return t < kImageMaxTime && omega >= kImageMinAngle; }

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) fail(Errc::CountMismatch, "truncated IGSO(3) table");
    return v;
}

}  // namespace

int igso3_truncation(double t) {
    check_time(t);
    int order = kMinOrder;
    while ((2.0 * order + 3.0) * (2.0 * order + 3.0) * weight(order, t) >= kTailTolerance) ++order;
    return order;
}

Igso3Derivatives igso3_series(double omega, double t, int order) {
    check_time(t);
    if (order < 1) fail(Errc::InvalidArgument, "IGSO(3) truncation order must be >= 1");
    Igso3Derivatives d;
    const bool small = omega < kSeriesSmallAngle;
    const double s = std::sin(0.5 * omega);
    const double s1 = 0.5 * std::cos(0.5 * omega);
    const double s2 = -0.25 * s;
    for (int l = 0; l <= order; ++l) {
        const double a = l + 0.5;
        const double w = (2.0 * l + 1.0) * weight(l, t);
        if (w == 0.0) break;
        double g, g1, g2;
        if (small) {
            // sin(a w)/sin(w/2) = 2a (1 + c2 w^2 + c4 w^4 + ...)
            const double a2 = a * a;
            const double c2 = 1.0 / 24.0 - a2 / 6.0;
            const double c4 = 7.0 / 5760.0 - a2 / 144.0 + a2 * a2 / 120.0;
            const double w2 = omega * omega;
            g = 2.0 * a * (1.0 + c2 * w2 + c4 * w2 * w2);
            g1 = 2.0 * a * (2.0 * c2 * omega + 4.0 * c4 * w2 * omega);
            g2 = 2.0 * a * (2.0 * c2 + 12.0 * c4 * w2);
        } else {
            const double sa = std::sin(a * omega), ca = std::cos(a * omega);
            g = sa / s;
            g1 = (a * ca - g * s1) / s;
            g2 = (-a * a * sa - 2.0 * g1 * s1 - g * s2) / s;
        }
        d.f += w * g;
        d.df += w * g1;
        d.d2f += w * g2;
    }
    return d;
}

double igso3_density(double omega, double t, int order) { return igso3_series(omega, t, order).f; }

double igso3_density(double omega, double t) {
    check_time(t);
    if (use_images(omega, t)) return std::exp(image_log_derivatives(omega, t).logf);
    return igso3_density(omega, t, igso3_truncation(t));
}

double igso3_angle_pdf(double omega, double t) {
    return igso3_density(omega, t) * (1.0 - std::cos(omega)) / kPi;
}

double igso3_angle_cdf(double omega, double t) {
    check_time(t);
    const std::vector<double> om{omega};
    double out = 0.0;
    cdf_row(t, om, &out);
    return out;
}

double igso3_dlog_density(double omega, double t) {
    check_time(t);
    if (use_images(omega, t)) return image_log_derivatives(omega, t).dlogf;
    const Igso3Derivatives d = igso3_series(omega, t, igso3_truncation(t));
    return d.df / d.f;
}

Igso3ScoreCoefficients igso3_score_coefficients(double omega, double t) {
    check_time(t);
    if (use_images(omega, t)) {
        const LogDerivatives d = image_log_derivatives(omega, t);
        return {d.dlogf / omega, (d.d2logf * omega - d.dlogf) / (omega * omega)};
    }
    const Igso3Derivatives d = igso3_series(omega, t, igso3_truncation(t));
    const double rho = d.df / d.f;
    const double drho = d.d2f / d.f - rho * rho;
    if (omega < kSeriesSmallAngle) {
        // rho is odd in w, so kappa = rho / w -> rho'(0) with zero slope.
        return {drho, 0.0};
    }
    return {rho / omega, (drho * omega - rho) / (omega * omega)};
}

Vec3 igso3_score(const Rotation& r0, const Rotation& rt, double t) {
    check_time(t);
    const AxisAngle rel = so3_log(r0.inverse() * rt);
    const double omega = rel.angle();
    if (omega < 1e-6) return {};
    return rel.v * (igso3_dlog_density(omega, t) / omega);
}

Igso3Table Igso3Table::build(int omega_bins, int times, double t_min, double t_max) {
    if (omega_bins < 2 || times < 2 || !(t_min > 0.0) || !(t_max > t_min))
        fail(Errc::InvalidArgument, "bad IGSO(3) table dimensions");
    Igso3Table table;
    table.omegas_.resize(static_cast<std::size_t>(omega_bins) + 1);
    for (int k = 0; k <= omega_bins; ++k) table.omegas_[static_cast<std::size_t>(k)] = kPi * k / omega_bins;
    table.times_.resize(static_cast<std::size_t>(times));
    const double lo = std::log(t_min), hi = std::log(t_max);
    for (int i = 0; i < times; ++i)
        table.times_[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / (times - 1));
    const std::size_t n = table.omegas_.size();
    table.density_.resize(n * table.times_.size());
    table.cdf_.resize(n * table.times_.size());
    for (std::size_t i = 0; i < table.times_.size(); ++i) {
        density_row(table.times_[i], table.omegas_, table.density_.data() + i * n);
        cdf_row(table.times_[i], table.omegas_, table.cdf_.data() + i * n);
    }
    return table;
}

double Igso3Table::cdf_at(double t, int k) const {
    const double lt = std::log(std::clamp(t, times_.front(), times_.back()));
    const double lo = std::log(times_.front()), hi = std::log(times_.back());
    const double pos = (lt - lo) / (hi - lo) * static_cast<double>(times_.size() - 1);
    const int i0 = std::min(static_cast<int>(pos), static_cast<int>(times_.size()) - 2);
    const double w = pos - i0;
    return (1.0 - w) * cdf(i0, k) + w * cdf(i0 + 1, k);
}

double Igso3Table::sample_angle(double t, RandomStream& rng) const {
    check_time(t);
    const double u = rng.uniform();
    if (t < times_.front()) {
        // Below the grid the marginal is too narrow for the fixed bins; invert the
        // closed-form CDF by bisection on a window that holds all of its mass.
        const int order = igso3_truncation(t);
        std::vector<double> coef(static_cast<std::size_t>(order) + 1);
        for (int l = 1; l <= order; ++l) coef[static_cast<std::size_t>(l)] = (2.0 * l + 1.0) * weight(l, t);
        auto cdf_value = [&](double om) {
            const double c2 = 2.0 * std::cos(om);
            double acc = om - std::sin(om);
            double s_prev = 0.0, s_cur = std::sin(om);
            for (int l = 1; l <= order; ++l) {
                const double s_next = c2 * s_cur - s_prev;
                acc += coef[static_cast<std::size_t>(l)] * (s_cur / l - s_next / (l + 1.0));
                s_prev = s_cur;
                s_cur = s_next;
            }
            return acc / kPi;
        };
        double lo = 0.0, hi = std::min(kPi, 12.0 * std::sqrt(t) + 1e-3);
        for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
            const double mid = 0.5 * (lo + hi);
            (cdf_value(mid) < u ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    // Convex combination of two monotone rows is monotone; search it directly.
    const double lt = std::log(std::min(t, times_.back()));
    const double lo = std::log(times_.front()), hi = std::log(times_.back());
    const double pos = (lt - lo) / (hi - lo) * static_cast<double>(times_.size() - 1);
    const int i0 = std::min(static_cast<int>(pos), static_cast<int>(times_.size()) - 2);
    const double w = pos - i0;
    const int n = static_cast<int>(omegas_.size());
    auto row = [&](int k) { return (1.0 - w) * cdf(i0, k) + w * cdf(i0 + 1, k); };
    const double target = u * row(n - 1);
    int left = 0, right = n - 1;  // row(left) <= target < row(right) once narrowed
    if (target < row(0)) return omegas_.front();
    while (right - left > 1) {
        const int mid = (left + right) / 2;
        (row(mid) <= target ? left : right) = mid;
    }
    const double c0 = row(left), c1 = row(right);
    const double frac = c1 > c0 ? (target - c0) / (c1 - c0) : 0.0;
    return omegas_[static_cast<std::size_t>(left)] + frac * (omegas_[static_cast<std::size_t>(right)] - omegas_[static_cast<std::size_t>(left)]);
}

void Igso3Table::save(const std::filesystem::path& path) const {
    io::write_file_atomic(path, [&](std::ostream& os) {
        os.write(kMagic, sizeof(kMagic));
        write_pod<std::uint32_t>(os, kFormatVersion);
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(times_.size()));
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(omegas_.size()));
        auto put = [&](const std::vector<double>& v) {
            os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
        };
        put(times_);
        put(omegas_);
        put(density_);
        put(cdf_);
    });
}

Igso3Table Igso3Table::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Errc::Io, "cannot open " + path.string());
    char magic[sizeof(kMagic)];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) fail(Errc::BadMagic, path.string());
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kFormatVersion) fail(Errc::BadMagic, "unsupported IGSO(3) table version " + std::to_string(version));
    const auto nt = read_pod<std::uint32_t>(is);
    const auto nw = read_pod<std::uint32_t>(is);
    if (nt < 2 || nw < 2 || nt > 100000 || nw > 1000000) fail(Errc::CountMismatch, "implausible table size");
    Igso3Table table;
    auto get = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (!is) fail(Errc::CountMismatch, "truncated IGSO(3) table " + path.string());
    };
    get(table.times_, nt);
    get(table.omegas_, nw);
    get(table.density_, static_cast<std::size_t>(nt) * nw);
    get(table.cdf_, static_cast<std::size_t>(nt) * nw);
    if (is.peek() != std::char_traits<char>::eof()) fail(Errc::CountMismatch, "trailing bytes in " + path.string());
    return table;
}

const Igso3Table& igso3_table() {
    static const Igso3Table table = [] {
        const char* dir = std::getenv("PEPBRIDGE_CACHE_DIR");
        if (dir == nullptr || *dir == '\0') return Igso3Table::build();
        const std::filesystem::path path = std::filesystem::path(dir) / "igso3_table_v1.bin";
        std::optional<Igso3Table> cached;
        try {
            if (std::filesystem::exists(path)) cached = Igso3Table::load(path);
        } catch (const Error&) {
            cached.reset();
        }
        if (cached) return *cached;
        Igso3Table built = Igso3Table::build();
        try {
            std::filesystem::create_directories(path.parent_path());
            built.save(path);
        } catch (const std::exception&) {
            // The cache is an optimization only.
        }
        return built;
    }();
    return table;
}

Rotation igso3_sample(double t, RandomStream& rng) {
    const double angle = igso3_table().sample_angle(t, rng);
    const Vec3 axis = random_unit_vector(rng);
    return so3_exp({axis * angle});
}

}  // namespace pepbridge
