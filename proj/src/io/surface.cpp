// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/io/surface.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pepbridge/error.hpp"
#include "pepbridge/io/atomic_file.hpp"

namespace pepbridge::io {

namespace {

std::string at(int line) { return "surface line " + std::to_string(line) + ": "; }

std::vector<std::string_view> fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

double number(std::string_view f, int line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ptr != f.data() + f.size() || (ec != std::errc() && ec != std::errc::result_out_of_range))
        fail(Errc::MalformedRecord, at(line) + "cannot parse '" + std::string(f) + "'");
    if (!std::isfinite(v)) fail(Errc::NonFiniteValue, at(line) + "non-finite value '" + std::string(f) + "'");
    return v;
}

}  // namespace

SurfaceCloud parse_surface(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    if (lines.empty()) fail(Errc::BadMagic, at(1) + "missing SURF1 header");
    const auto head = fields(lines[0]);
    if (head.size() != 2 || head[0] != "SURF1") fail(Errc::BadMagic, at(1) + "expected 'SURF1 <count>'");
    long long count = -1;
    const auto [ptr, ec] = std::from_chars(head[1].data(), head[1].data() + head[1].size(), count);
    if (ec != std::errc() || ptr != head[1].data() + head[1].size() || count < 0)
        fail(Errc::BadMagic, at(1) + "bad point count '" + std::string(head[1]) + "'");

    SurfaceCloud cloud;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const int line = static_cast<int>(i) + 1;
        const auto f = fields(lines[i]);
        if (f.empty()) continue;
        if (f.size() != 5) fail(Errc::MalformedRecord, at(line) + "expected 5 values, got " + std::to_string(f.size()));
        cloud.positions.push_back({number(f[0], line), number(f[1], line), number(f[2], line)});
        cloud.hbond.push_back(number(f[3], line));
        cloud.hphob.push_back(number(f[4], line));
    }
    if (static_cast<long long>(cloud.size()) != count)
        fail(Errc::CountMismatch, "surface header declares " + std::to_string(count) + " points, found " +
                                      std::to_string(cloud.size()));
    return cloud;
}

std::string format_surface(const SurfaceCloud& cloud) {
    cloud.validate();
    std::string out = "SURF1 " + std::to_string(cloud.size()) + "\n";
    char buf[160];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.positions[i];
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g\n", p.x, p.y, p.z, cloud.hbond[i],
                      cloud.hphob[i]);
        out += buf;
    }
    return out;
}

SurfaceCloud read_surface(const std::filesystem::path& path) {
    try {
        return parse_surface(read_text(path));
    } catch (const Error& e) {
        if (e.code() == Errc::Io) throw;
        fail(e.code(), path.string() + ": " + e.message());
    }
}

void write_surface(const std::filesystem::path& path, const SurfaceCloud& cloud) {
    write_text_atomic(path, format_surface(cloud));
}

}  // namespace pepbridge::io
