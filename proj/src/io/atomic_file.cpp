// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/io/atomic_file.hpp"

#include <fstream>
#include <sstream>

#include "pepbridge/error.hpp"

namespace pepbridge::io {

void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) fail(Errc::Io, "cannot open " + tmp.string() + " for writing");
        writer(os);
        os.flush();
        if (!os) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            fail(Errc::Io, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(Errc::Io, "cannot rename into " + path.string());
    }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, [&](std::ostream& os) { os << text; });
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Errc::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace pepbridge::io
