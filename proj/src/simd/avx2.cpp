// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cstring>

#include "pepbridge/simd.hpp"

namespace pepbridge::simd::avx2 {

namespace {

// y[0..n) += s * x[0..n)
inline void axpy(double s, const double* x, double* y, int n) {
    const __m256d vs = _mm256_set1_pd(s);
    int j = 0;
    for (; j + 8 <= n; j += 8) {
        __m256d y0 = _mm256_loadu_pd(y + j);
        __m256d y1 = _mm256_loadu_pd(y + j + 4);
        y0 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(x + j), y0);
        y1 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(x + j + 4), y1);
        _mm256_storeu_pd(y + j, y0);
        _mm256_storeu_pd(y + j + 4, y1);
    }
    for (; j + 4 <= n; j += 4)
        _mm256_storeu_pd(y + j, _mm256_fmadd_pd(vs, _mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j)));
    for (; j < n; ++j) y[j] += s * x[j];
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double dot(const double* x, const double* y, int n) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    int j = 0;
    for (; j + 8 <= n; j += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j + 4), _mm256_loadu_pd(y + j + 4), acc1);
    }
    for (; j + 4 <= n; j += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; j < n; ++j) s += x[j] * y[j];
    return s;
}

}  // namespace

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<std::size_t>(i) * n;
        if (!accumulate) std::memset(ci, 0, sizeof(double) * static_cast<std::size_t>(n));
        const double* ai = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p)
            if (ai[p] != 0.0) axpy(ai[p], b + static_cast<std::size_t>(p) * n, ci, n);
    }
}

void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, sizeof(double) * static_cast<std::size_t>(k) * n);
    for (int r = 0; r < m; ++r) {
        const double* ar = a + static_cast<std::size_t>(r) * k;
        const double* br = b + static_cast<std::size_t>(r) * n;
        for (int p = 0; p < k; ++p)
            if (ar[p] != 0.0) axpy(ar[p], br, c + static_cast<std::size_t>(p) * n, n);
    }
}

void gemm_nt(const double* a, const double* b, double* c, int m, int n, int k, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<std::size_t>(i) * n;
        double* ci = c + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double s = dot(ai, b + static_cast<std::size_t>(p) * n, n);
            ci[p] = accumulate ? ci[p] + s : s;
        }
    }
}

void squared_distances(const Vec3* points, std::size_t n, const Vec3& q, double* out) {
    // Vec3 is three packed doubles; gather four points per iteration.
    const double* base = &points[0].x;
    const __m256i idx = _mm256_setr_epi64x(0, 3, 6, 9);
    const __m256d qx = _mm256_set1_pd(q.x), qy = _mm256_set1_pd(q.y), qz = _mm256_set1_pd(q.z);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double* p = base + 3 * i;
        const __m256d dx = _mm256_sub_pd(_mm256_i64gather_pd(p, idx, 8), qx);
        const __m256d dy = _mm256_sub_pd(_mm256_i64gather_pd(p + 1, idx, 8), qy);
        const __m256d dz = _mm256_sub_pd(_mm256_i64gather_pd(p + 2, idx, 8), qz);
        __m256d s = _mm256_mul_pd(dx, dx);
        s = _mm256_fmadd_pd(dy, dy, s);
        s = _mm256_fmadd_pd(dz, dz, s);
        _mm256_storeu_pd(out + i, s);
    }
    for (; i < n; ++i) {
        const double dx = points[i].x - q.x, dy = points[i].y - q.y, dz = points[i].z - q.z;
        out[i] = dx * dx + dy * dy + dz * dz;
    }
}

}  // namespace pepbridge::simd::avx2
