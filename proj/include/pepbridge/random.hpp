// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace pepbridge {

/// SplitMix64 finalizer; used to derive independent per-trajectory seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Caller-owned random stream. Never shared between threads.
///
/// `set_antithetic(true)` negates every Gaussian draw, which lets a test pair
/// two trajectories driven by mirrored noise (antithetic variates).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
    RandomStream(std::uint64_t seed, std::uint64_t stream) : engine_(mix_seed(seed, stream)) {}

    double normal() {
        const double z = normal_(engine_);
        return antithetic_ ? -z : z;
    }
    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::uint64_t next_u64() { return engine_(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    std::mt19937_64& engine() { return engine_; }

    void set_antithetic(bool on) { antithetic_ = on; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    bool antithetic_ = false;
};

}  // namespace pepbridge
