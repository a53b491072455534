// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace pepbridge {

/// Training and sampling settings. Defaults are the bold entries of the
/// hyperparameter search table.
struct TrainConfig {
    double learning_rate = 5e-4;
    int batch_size = 8;
    int train_steps = 1000;
    int sample_steps = 1000;
    int d_node = 128;
    int d_edge = 64;
    int d_surface = 16;
    int attn_heads = 8;
    double w_surface = 0.5;
    double w_position = 1.0;
    double w_rotation = 1.0;
    double w_type = 1.0;
    double w_angle = 1.0;
    double gamma = 6.0;
    double K = 10.0;
    std::uint64_t seed = 0;

    // Not exposed as file keys.
    double decay_factor = 0.6;
    double min_learning_rate = 1e-6;

    /// Throws InvalidArgument on out-of-range values.
    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

namespace io {

/// key=value lines with '#' comments. Throws UnknownKey / UnparsableValue
/// with the line number; missing keys keep their defaults.
TrainConfig parse_config(std::string_view text);
TrainConfig read_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(format_config(c)) == c.
std::string format_config(const TrainConfig& config);

}  // namespace io
}  // namespace pepbridge
