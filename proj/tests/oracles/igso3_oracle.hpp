// SPDX-License-Identifier: Apache-2.0
// Brute-force IGSO(3) series in long double with a fixed large order.
#pragma once

#include <cmath>

namespace oracle {

inline long double igso3_density_hp(long double omega, long double t, int order = 2000) {
    long double acc = 0.0L;
    const long double half = std::sin(omega / 2.0L);
    for (int l = 0; l <= order; ++l) {
        const long double w = (2.0L * l + 1.0L) * std::exp(-0.5L * l * (l + 1.0L) * t);
        if (w == 0.0L) break;
        acc += half < 1e-15L ? w * (2.0L * l + 1.0L) : w * std::sin((l + 0.5L) * omega) / half;
    }
    return acc;
}

}  // namespace oracle
