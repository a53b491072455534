// SPDX-License-Identifier: Apache-2.0
#include <cstring>

#include "pepbridge/simd.hpp"

namespace pepbridge::simd::scalar {

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<std::size_t>(i) * n;
        if (!accumulate) std::memset(ci, 0, sizeof(double) * static_cast<std::size_t>(n));
        const double* ai = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double s = ai[p];
            if (s == 0.0) continue;
            const double* bp = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += s * bp[j];
        }
    }
}

void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, sizeof(double) * static_cast<std::size_t>(k) * n);
    for (int r = 0; r < m; ++r) {
        const double* ar = a + static_cast<std::size_t>(r) * k;
        const double* br = b + static_cast<std::size_t>(r) * n;
        for (int p = 0; p < k; ++p) {
            const double s = ar[p];
            if (s == 0.0) continue;
            double* cp = c + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) cp[j] += s * br[j];
        }
    }
}

void gemm_nt(const double* a, const double* b, double* c, int m, int n, int k, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<std::size_t>(i) * n;
        double* ci = c + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double* bp = b + static_cast<std::size_t>(p) * n;
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += ai[j] * bp[j];
            ci[p] = accumulate ? ci[p] + s : s;
        }
    }
}

void squared_distances(const Vec3* points, std::size_t n, const Vec3& q, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = points[i].x - q.x, dy = points[i].y - q.y, dz = points[i].z - q.z;
        out[i] = dx * dx + dy * dy + dz * dz;
    }
}

}  // namespace pepbridge::simd::scalar
