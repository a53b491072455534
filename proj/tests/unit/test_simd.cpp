// SPDX-License-Identifier: Apache-2.0
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "pepbridge/parallel.hpp"
#include "pepbridge/random.hpp"
#include "pepbridge/simd.hpp"

using namespace pepbridge;

namespace {

std::vector<double> random_matrix(int rows, int cols, RandomStream& rng) {
    std::vector<double> m(static_cast<std::size_t>(rows) * cols);
    for (double& x : m) x = rng.normal();
    return m;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
    return worst;
}

// Triple loop in long double, independent of both kernels.
std::vector<double> naive(const std::vector<double>& a, const std::vector<double>& b, int m, int k, int n) {
    std::vector<double> c(static_cast<std::size_t>(m) * n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            long double s = 0;
            for (int p = 0; p < k; ++p) s += static_cast<long double>(a[i * k + p]) * b[p * n + j];
            c[i * n + j] = static_cast<double>(s);
        }
    return c;
}

std::vector<double> transpose(const std::vector<double>& a, int rows, int cols) {
    std::vector<double> t(a.size());
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
    return t;
}

}  // namespace

TEST_CASE("dispatch reports a usable level") {
    const simd::Level before = simd::active_level();
    CHECK(simd::set_level(simd::Level::Scalar) == simd::Level::Scalar);
    CHECK(simd::active_level() == simd::Level::Scalar);
    CHECK(simd::set_level(simd::Level::Avx2) == simd::detected_level());
    simd::set_level(before);
    CHECK(simd::level_name(simd::Level::Avx2) == "avx2");
}

TEST_CASE("gemm kernels agree with the reference and with each other") {
    RandomStream rng(41);
    const int shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {17, 33, 9}, {64, 128, 128}, {5, 3, 13}, {40, 1, 6}};
    const bool avx = simd::detected_level() == simd::Level::Avx2;
    for (const auto& s : shapes) {
        const int m = s[0], k = s[1], n = s[2];
        const auto a = random_matrix(m, k, rng);
        const auto b = random_matrix(k, n, rng);
        const auto ref = naive(a, b, m, k, n);

        std::vector<double> c1(ref.size()), c2(ref.size());
        simd::scalar::gemm_nn(a.data(), b.data(), c1.data(), m, k, n, false);
        CHECK(max_rel(c1, ref) < 1e-12);
        if (avx) {
            simd::avx2::gemm_nn(a.data(), b.data(), c2.data(), m, k, n, false);
            CHECK(max_rel(c2, ref) < 1e-12);
            CHECK(max_rel(c2, c1) < 1e-12);
        }

        // a^T: stored as [k x m] so that gemm_tn(at, b) = a * b.
        const auto at = transpose(a, m, k);
        std::vector<double> t1(ref.size(), 1.0), t2(ref.size(), 1.0);
        simd::scalar::gemm_tn(at.data(), b.data(), t1.data(), k, m, n, true);
        for (double& x : t1) x -= 1.0;
        CHECK(max_rel(t1, ref) < 1e-12);
        if (avx) {
            simd::avx2::gemm_tn(at.data(), b.data(), t2.data(), k, m, n, true);
            for (double& x : t2) x -= 1.0;
            CHECK(max_rel(t2, ref) < 1e-12);
        }

        const auto bt = transpose(b, k, n);
        std::vector<double> n1(ref.size()), n2(ref.size());
        simd::scalar::gemm_nt(a.data(), bt.data(), n1.data(), m, k, n, false);
        CHECK(max_rel(n1, ref) < 1e-12);
        if (avx) {
            simd::avx2::gemm_nt(a.data(), bt.data(), n2.data(), m, k, n, false);
            CHECK(max_rel(n2, ref) < 1e-12);
        }
    }
}

TEST_CASE("distance scans agree") {
    RandomStream rng(42);
    for (std::size_t n : {1u, 3u, 4u, 7u, 128u, 1001u}) {
        std::vector<Vec3> pts(n);
        for (auto& p : pts) p = {rng.normal() * 10, rng.normal() * 10, rng.normal() * 10};
        const Vec3 q{1.0, -2.0, 0.5};
        std::vector<double> d1(n), d2(n);
        simd::scalar::squared_distances(pts.data(), n, q, d1.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(d1[i] - dot(pts[i] - q, pts[i] - q)) < 1e-12 * (1 + d1[i]));
        if (simd::detected_level() == simd::Level::Avx2) {
            simd::avx2::squared_distances(pts.data(), n, q, d2.data());
            CHECK(max_rel(d2, d1) < 1e-13);
        }
        double best = 0.0;
        const std::size_t k = simd::nearest(pts.data(), n, q, &best);
        for (std::size_t i = 0; i < n; ++i) CHECK(d1[i] >= best - 1e-12);
        CHECK(std::abs(d1[k] - best) < 1e-12 * (1 + best));
    }
}

TEST_CASE("parallel_for visits every index once regardless of worker count") {
    for (unsigned threads : {1u, 2u, 5u}) {
        set_thread_count(threads);
        std::vector<int> hits(1000, 0);
        parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
        for (int h : hits) CHECK(h == 1);
        CHECK_THROWS(parallel_for(10, [](std::size_t i) {
            if (i == 7) throw std::runtime_error("boom");
        }));
    }
    set_thread_count(0);
    CHECK(thread_count() >= 1);
}
