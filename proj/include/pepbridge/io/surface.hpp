// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pepbridge/bridge.hpp"

namespace pepbridge::io {

/// Text form: header "SURF1 N", then N lines "x y z hbond hphob".
/// Throws BadMagic, CountMismatch, NonFiniteValue or MalformedRecord, each with a line number.
SurfaceCloud parse_surface(std::string_view text);
std::string format_surface(const SurfaceCloud& cloud);

SurfaceCloud read_surface(const std::filesystem::path& path);
void write_surface(const std::filesystem::path& path, const SurfaceCloud& cloud);

}  // namespace pepbridge::io
