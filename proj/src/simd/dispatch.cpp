// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <atomic>
#include <limits>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "pepbridge/simd.hpp"

namespace pepbridge::simd {

static_assert(sizeof(Vec3) == 3 * sizeof(double), "Vec3 must be three packed doubles");

namespace {

Level initial_level() {
    const char* env = std::getenv("PEPBRIDGE_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return Level::Scalar;
    return detected_level();
}

std::atomic<Level>& current() {
    static std::atomic<Level> level{initial_level()};
    return level;
}

bool use_avx2() { return current().load(std::memory_order_relaxed) == Level::Avx2; }

}  // namespace

Level detected_level() {
#if defined(__x86_64__) || defined(__i386__)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok ? Level::Avx2 : Level::Scalar;
#else
    return Level::Scalar;
#endif
}

Level active_level() { return current().load(); }

Level set_level(Level level) {
    if (level == Level::Avx2 && detected_level() != Level::Avx2) level = Level::Scalar;
    current().store(level);
    return level;
}

std::string_view level_name(Level level) { return level == Level::Avx2 ? "avx2" : "scalar"; }

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    if (use_avx2()) return avx2::gemm_nn(a, b, c, m, k, n, accumulate);
    scalar::gemm_nn(a, b, c, m, k, n, accumulate);
}

void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    if (use_avx2()) return avx2::gemm_tn(a, b, c, m, k, n, accumulate);
    scalar::gemm_tn(a, b, c, m, k, n, accumulate);
}

void gemm_nt(const double* a, const double* b, double* c, int m, int n, int k, bool accumulate) {
    if (use_avx2()) return avx2::gemm_nt(a, b, c, m, n, k, accumulate);
    scalar::gemm_nt(a, b, c, m, n, k, accumulate);
}

void squared_distances(const Vec3* points, std::size_t n, const Vec3& q, double* out) {
    if (use_avx2()) return avx2::squared_distances(points, n, q, out);
    scalar::squared_distances(points, n, q, out);
}

std::size_t nearest(const Vec3* points, std::size_t n, const Vec3& q, double* best_sq) {
    constexpr std::size_t kBlock = 256;
    double buf[kBlock];
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t start = 0; start < n; start += kBlock) {
        const std::size_t len = std::min(kBlock, n - start);
        squared_distances(points + start, len, q, buf);
        for (std::size_t i = 0; i < len; ++i)
            if (buf[i] < best_d) {
                best_d = buf[i];
                best = start + i;
            }
    }
    if (best_sq) *best_sq = best_d;
    return best;
}

}  // namespace pepbridge::simd
