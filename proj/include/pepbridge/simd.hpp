// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>

#include "pepbridge/geom3.hpp"

namespace pepbridge::simd {

enum class Level { Scalar, Avx2 };

/// Best level the running CPU supports (AVX2 requires FMA as well).
Level detected_level();
/// Level used by the dispatching entry points below. Starts at detected_level()
/// unless PEPBRIDGE_SIMD=scalar is set.
Level active_level();
/// Requests a level; clamped to what the CPU supports. Returns the level in effect.
Level set_level(Level level);
std::string_view level_name(Level level);

// Row-major dense kernels. `accumulate` adds into c instead of overwriting.

/// c[m x n] (+)= a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
/// c[k x n] (+)= a[m x k]^T * b[m x n]
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
/// c[m x k] (+)= a[m x n] * b[k x n]^T
void gemm_nt(const double* a, const double* b, double* c, int m, int n, int k, bool accumulate);

/// out[i] = |points[i] - q|^2
void squared_distances(const Vec3* points, std::size_t n, const Vec3& q, double* out);
/// Index of the nearest point to q (lowest index on ties) and its squared distance.
std::size_t nearest(const Vec3* points, std::size_t n, const Vec3& q, double* best_sq);

namespace scalar {
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void gemm_nt(const double* a, const double* b, double* c, int m, int n, int k, bool accumulate);
void squared_distances(const Vec3* points, std::size_t n, const Vec3& q, double* out);
}  // namespace scalar

namespace avx2 {
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void gemm_nt(const double* a, const double* b, double* c, int m, int n, int k, bool accumulate);
void squared_distances(const Vec3* points, std::size_t n, const Vec3& q, double* out);
}  // namespace avx2

}  // namespace pepbridge::simd
