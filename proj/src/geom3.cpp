// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/geom3.hpp"

#include <algorithm>
#include <numbers>

namespace pepbridge {

namespace {

// Below this angle the Rodrigues/log coefficients switch to Taylor series.
constexpr double kSmallAngle = 1e-6;

Mat3 inverse(const Mat3& m) {
    const double det = determinant(m);
    Mat3 r;
    r(0, 0) = (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) / det;
    r(0, 1) = (m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2)) / det;
    r(0, 2) = (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) / det;
    r(1, 0) = (m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2)) / det;
    r(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)) / det;
    r(1, 2) = (m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2)) / det;
    r(2, 0) = (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)) / det;
    r(2, 1) = (m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1)) / det;
    r(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) / det;
    return r;
}

}  // namespace

Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j) + a(i, 2) * b(2, j);
    return r;
}

Vec3 operator*(const Mat3& m, const Vec3& v) {
    return {m(0, 0) * v.x + m(0, 1) * v.y + m(0, 2) * v.z,
            m(1, 0) * v.x + m(1, 1) * v.y + m(1, 2) * v.z,
            m(2, 0) * v.x + m(2, 1) * v.y + m(2, 2) * v.z};
}

Mat3 operator+(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.a[i] = a.a[i] + b.a[i];
    return r;
}

Mat3 operator-(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.a[i] = a.a[i] - b.a[i];
    return r;
}

Mat3 operator*(double s, const Mat3& m) {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.a[i] = s * m.a[i];
    return r;
}

Mat3 transpose(const Mat3& m) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = m(j, i);
    return r;
}

double determinant(const Mat3& m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

double trace(const Mat3& m) { return m(0, 0) + m(1, 1) + m(2, 2); }

Mat3 hat(const Vec3& v) { return Mat3{{0, -v.z, v.y, v.z, 0, -v.x, -v.y, v.x, 0}}; }

Vec3 vee(const Mat3& m) {
    return {0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)), 0.5 * (m(1, 0) - m(0, 1))};
}

double max_abs_diff(const Mat3& a, const Mat3& b) {
    double e = 0.0;
    for (int i = 0; i < 9; ++i) e = std::max(e, std::abs(a.a[i] - b.a[i]));
    return e;
}

Rotation Rotation::about_x(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return Rotation(Mat3{{1, 0, 0, 0, c, -s, 0, s, c}});
}

Rotation Rotation::about_y(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return Rotation(Mat3{{c, 0, s, 0, 1, 0, -s, 0, c}});
}

Rotation Rotation::about_z(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return Rotation(Mat3{{c, -s, 0, s, c, 0, 0, 0, 1}});
}

double Rotation::orthonormality_error() const {
    return max_abs_diff(transpose(m_) * m_, Mat3::identity());
}

Vec3 transform_apply(const Transform& t, const Vec3& p) { return t.r * p + t.m; }

Transform transform_compose(const Transform& t1, const Transform& t2) {
    return {t1.r * t2.r, t1.r * t2.m + t1.m};
}

Transform transform_inverse(const Transform& t) {
    const Rotation inv = t.r.inverse();
    return {inv, -(inv * t.m)};
}

Rotation so3_exp(const AxisAngle& a) {
    const double theta = a.angle();
    const Mat3 k = hat(a.v);
    double sa, sb;  // sin(theta)/theta, (1 - cos(theta))/theta^2
    if (theta < kSmallAngle) {
        const double t2 = theta * theta;
        sa = 1.0 - t2 / 6.0;
        sb = 0.5 - t2 / 24.0;
    } else {
        sa = std::sin(theta) / theta;
        sb = (1.0 - std::cos(theta)) / (theta * theta);
    }
    return Rotation(Mat3::identity() + sa * k + sb * (k * k));
}

double rotation_angle(const Rotation& r) {
    const Mat3& m = r.matrix();
    const double c = 0.5 * (trace(m) - 1.0);
    const double s = norm(vee(m));
    return std::atan2(s, c);
}

AxisAngle so3_log(const Rotation& r) {
    const Mat3& m = r.matrix();
    const Vec3 w = vee(m);  // sin(theta) * axis
    const double theta = rotation_angle(r);
    if (theta < kSmallAngle) {
        return {w * (1.0 + theta * theta / 6.0)};
    }
    if (std::numbers::pi - theta < kSmallAngle) {
        // Symmetric part of (R + I)/2 is n n^T up to O((pi - theta)^2); take the dominant column.
        const Mat3 b = 0.25 * (m + transpose(m)) + 0.5 * Mat3::identity();
        int k = 0;
        for (int i = 1; i < 3; ++i)
            if (b(i, i) > b(k, k)) k = i;
        Vec3 n{b(0, k), b(1, k), b(2, k)};
        n *= 1.0 / norm(n);
        if (dot(n, w) < 0.0) n = -n;
        return {n * theta};
    }
    return {w * (theta / std::sin(theta))};
}

double geodesic_angle(const Rotation& r1, const Rotation& r2) {
    return rotation_angle(r1.inverse() * r2);
}

Rotation orthonormalize(const Mat3& m) {
    // Newton iteration for the orthogonal polar factor.
    Mat3 x = m;
    for (int it = 0; it < 50; ++it) {
        const Mat3 next = 0.5 * (x + transpose(inverse(x)));
        const double delta = max_abs_diff(next, x);
        x = next;
        if (delta < 1e-15) break;
    }
    return Rotation(x);
}

Vec3 random_unit_vector(RandomStream& rng) {
    for (;;) {
        const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        const double n = norm(v);
        if (n > 1e-12) return v * (1.0 / n);
    }
}

Rotation random_rotation(RandomStream& rng) {
    // Shoemake's uniform unit quaternion.
    const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
    const double two_pi = 2.0 * std::numbers::pi;
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double qw = a * std::sin(two_pi * u2), qx = a * std::cos(two_pi * u2);
    const double qy = b * std::sin(two_pi * u3), qz = b * std::cos(two_pi * u3);
    return Rotation(Mat3{{1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw),
                          2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw),
                          2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy)}});
}

}  // namespace pepbridge
