// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/io/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>

#include "pepbridge/error.hpp"
#include "pepbridge/io/atomic_file.hpp"

namespace pepbridge {

void TrainConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) fail(Errc::InvalidArgument, std::string("config: ") + what);
    };
    require(learning_rate > 0.0, "learning_rate must be positive");
    require(batch_size > 0, "batch_size must be positive");
    require(train_steps > 0, "train_steps must be positive");
    require(sample_steps > 0, "sample_steps must be positive");
    require(d_node > 0 && d_edge > 0 && d_surface > 0, "dimensions must be positive");
    require(attn_heads > 0 && d_edge % attn_heads == 0, "attn_heads must divide d_edge");
    require(w_surface >= 0 && w_position >= 0 && w_rotation >= 0 && w_type >= 0 && w_angle >= 0,
            "loss weights must be non-negative");
    require(w_surface + w_position + w_rotation + w_type + w_angle > 0.0, "at least one loss weight must be positive");
    require(gamma > 0.0, "gamma must be positive");
    require(K > 0.0, "K must be positive");
    require(decay_factor > 0.0 && decay_factor <= 1.0, "decay factor must lie in (0, 1]");
    require(min_learning_rate > 0.0, "min learning rate must be positive");
}

namespace io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
bool parse_value(std::string_view v, T& out) {
    T tmp{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), tmp);
    if (ec != std::errc() || ptr != v.data() + v.size()) return false;
    if constexpr (std::is_floating_point_v<T>)
        if (!std::isfinite(tmp)) return false;
    out = tmp;
    return true;
}

using Setter = std::function<bool(TrainConfig&, std::string_view)>;

template <class T>
Setter field(T TrainConfig::*member) {
    return [member](TrainConfig& c, std::string_view v) { return parse_value(v, c.*member); };
}

const std::vector<std::pair<std::string_view, Setter>>& keys() {
    static const std::vector<std::pair<std::string_view, Setter>> table{
        {"learning_rate", field(&TrainConfig::learning_rate)},
        {"batch_size", field(&TrainConfig::batch_size)},
        {"train_steps", field(&TrainConfig::train_steps)},
        {"sample_steps", field(&TrainConfig::sample_steps)},
        {"d_node", field(&TrainConfig::d_node)},
        {"d_edge", field(&TrainConfig::d_edge)},
        {"d_surface", field(&TrainConfig::d_surface)},
        {"attn_heads", field(&TrainConfig::attn_heads)},
        {"w_surface", field(&TrainConfig::w_surface)},
        {"w_position", field(&TrainConfig::w_position)},
        {"w_rotation", field(&TrainConfig::w_rotation)},
        {"w_type", field(&TrainConfig::w_type)},
        {"w_angle", field(&TrainConfig::w_angle)},
        {"gamma", field(&TrainConfig::gamma)},
        {"K", field(&TrainConfig::K)},
        {"seed", field(&TrainConfig::seed)},
    };
    return table;
}

}  // namespace

TrainConfig parse_config(std::string_view text) {
    TrainConfig c;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "config line " + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) fail(Errc::UnparsableValue, where + "expected key=value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto& table = keys();
        const auto it = std::find_if(table.begin(), table.end(), [&](const auto& kv) { return kv.first == key; });
        if (it == table.end()) fail(Errc::UnknownKey, where + "unknown key '" + std::string(key) + "'");
        if (!it->second(c, value))
            fail(Errc::UnparsableValue, where + "cannot parse '" + std::string(value) + "' for " + std::string(key));
    }
    c.validate();
    return c;
}

TrainConfig read_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

std::string format_config(const TrainConfig& c) {
    char buf[64];
    auto real = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string out;
    out += "learning_rate=" + real(c.learning_rate) + "\n";
    out += "batch_size=" + std::to_string(c.batch_size) + "\n";
    out += "train_steps=" + std::to_string(c.train_steps) + "\n";
    out += "sample_steps=" + std::to_string(c.sample_steps) + "\n";
    out += "d_node=" + std::to_string(c.d_node) + "\n";
    out += "d_edge=" + std::to_string(c.d_edge) + "\n";
    out += "d_surface=" + std::to_string(c.d_surface) + "\n";
    out += "attn_heads=" + std::to_string(c.attn_heads) + "\n";
    out += "w_surface=" + real(c.w_surface) + "\n";
    out += "w_position=" + real(c.w_position) + "\n";
    out += "w_rotation=" + real(c.w_rotation) + "\n";
    out += "w_type=" + real(c.w_type) + "\n";
    out += "w_angle=" + real(c.w_angle) + "\n";
    out += "gamma=" + real(c.gamma) + "\n";
    out += "K=" + real(c.K) + "\n";
    out += "seed=" + std::to_string(c.seed) + "\n";
    return out;
}

}  // namespace io
}  // namespace pepbridge
