// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pepbridge/autodiff.hpp"
#include "pepbridge/random.hpp"

namespace pepbridge::nn {

/// Fully connected network with SiLU between layers and a linear output.
/// Weights live in a ParamSet; the Mlp only records their indices.
class Mlp {
public:
    Mlp() = default;
    /// Registers weights "<name>.w<k>" / "<name>.b<k>" drawn uniformly from
    /// [-1/sqrt(fan_in), 1/sqrt(fan_in)]; the last layer is scaled by
    /// `output_scale`. Biases start at zero.
    Mlp(ad::ParamSet& params, const std::string& name, std::vector<int> widths, RandomStream& rng,
        double output_scale = 1.0);

    ad::Var forward(ad::Tape& tape, ad::Var x) const;
    /// Convenience for plain evaluation (no gradient).
    ad::Matrix apply(const ad::ParamSet& params, const ad::Matrix& x) const;

    int in_dim() const { return widths_.front(); }
    int out_dim() const { return widths_.back(); }
    const std::vector<int>& widths() const { return widths_; }

private:
    std::vector<int> widths_;
    std::vector<int> weight_index_;
    std::vector<int> bias_index_;
};

/// Sinusoidal features [sin(x w_k), cos(x w_k)] with w_k = base^(-k/count), k < count.
void sinusoidal(double x, int count, double base, double* out);
std::vector<double> sinusoidal(double x, int count, double base = 1000.0);

/// Versioned checkpoint: header line, seed, config text, then every parameter
/// (name, shape, values) in declaration order as hex floats.
struct Checkpoint {
    std::uint64_t seed = 0;
    std::string config;
    std::vector<std::string> names;
    std::vector<ad::Matrix> values;
};
void save_checkpoint(const std::filesystem::path& path, std::uint64_t seed, const std::string& config,
                     const ad::ParamSet& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Copies checkpoint values into `params`; names and shapes must match.
void restore_params(const Checkpoint& ckpt, ad::ParamSet& params);

}  // namespace pepbridge::nn
