// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>

namespace pepbridge::io {

/// Writes through a sibling temporary file and renames it into place, so a
/// reader never observes a partially written file. Throws Errc::Io.
void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::string read_text(const std::filesystem::path& path);

}  // namespace pepbridge::io
