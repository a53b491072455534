// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>

#include "pepbridge/random.hpp"

namespace pepbridge {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

    bool operator==(const Vec3&) const = default;
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline bool finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> a{};

    static Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
    double operator()(int r, int c) const { return a[3 * r + c]; }
    double& operator()(int r, int c) { return a[3 * r + c]; }
};

Mat3 operator*(const Mat3& a, const Mat3& b);
Vec3 operator*(const Mat3& m, const Vec3& v);
Mat3 operator+(const Mat3& a, const Mat3& b);
Mat3 operator-(const Mat3& a, const Mat3& b);
Mat3 operator*(double s, const Mat3& m);
Mat3 transpose(const Mat3& m);
double determinant(const Mat3& m);
double trace(const Mat3& m);
/// Skew-symmetric cross-product matrix: hat(v) * w == cross(v, w).
Mat3 hat(const Vec3& v);
/// Inverse of hat() applied to the skew part of m.
Vec3 vee(const Mat3& m);
double max_abs_diff(const Mat3& a, const Mat3& b);

/// Proper rotation matrix. The orthonormality invariant is the caller's
/// responsibility when constructing from raw entries; every operation in this
/// library that returns a Rotation preserves it.
class Rotation {
public:
    Rotation() : m_(Mat3::identity()) {}
    explicit Rotation(const Mat3& m) : m_(m) {}

    static Rotation identity() { return Rotation(); }
    static Rotation about_x(double angle);
    static Rotation about_y(double angle);
    static Rotation about_z(double angle);

    const Mat3& matrix() const { return m_; }
    Rotation inverse() const { return Rotation(transpose(m_)); }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }
    Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }

    /// Max deviation of R^T R from identity.
    double orthonormality_error() const;

private:
    Mat3 m_;
};

/// Rotation vector: unit axis scaled by the angle in radians.
struct AxisAngle {
    Vec3 v;
    double angle() const { return norm(v); }
};

/// Rigid motion x -> r x + m.
struct Transform {
    Rotation r;
    Vec3 m;

    static Transform identity() { return {}; }
};

Vec3 transform_apply(const Transform& t, const Vec3& p);
Transform transform_compose(const Transform& t1, const Transform& t2);
Transform transform_inverse(const Transform& t);

inline Vec3 operator*(const Transform& t, const Vec3& p) { return transform_apply(t, p); }
inline Transform operator*(const Transform& a, const Transform& b) { return transform_compose(a, b); }

Rotation so3_exp(const AxisAngle& a);
/// Principal logarithm; the returned angle lies in [0, pi].
AxisAngle so3_log(const Rotation& r);
/// Length of the geodesic between r1 and r2, in [0, pi].
double geodesic_angle(const Rotation& r1, const Rotation& r2);
/// Angle of a single rotation, computed without forming the logarithm.
double rotation_angle(const Rotation& r);

/// Nearest rotation in the Frobenius sense (orthogonal polar factor).
Rotation orthonormalize(const Mat3& m);

/// Haar-uniform random rotation.
Rotation random_rotation(RandomStream& rng);
Vec3 random_unit_vector(RandomStream& rng);

}  // namespace pepbridge
