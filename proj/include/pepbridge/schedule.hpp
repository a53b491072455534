// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace pepbridge {

/// Discrete DDPM noise schedule indexed 1..steps.
class DdpmSchedule {
public:
    /// Linear beta ramp from beta_start to beta_end.
    static DdpmSchedule linear(int steps, double beta_start = 1e-4, double beta_end = 0.02);
    /// Arbitrary per-step betas in [0, 1); index 1 is betas[0].
    static DdpmSchedule from_betas(std::vector<double> betas);

    int steps() const { return static_cast<int>(beta_.size()); }
    double beta(int t) const;
    double alpha(int t) const { return 1.0 - beta(t); }
    /// Cumulative product of alphas; alpha_bar(0) == 1.
    double alpha_bar(int t) const;

    /// Throws IndexOutOfSchedule unless 1 <= t <= steps.
    void check_index(int t) const;

private:
    std::vector<double> beta_;
    std::vector<double> alpha_bar_;
};

}  // namespace pepbridge
