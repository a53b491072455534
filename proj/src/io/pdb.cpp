// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/io/pdb.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "pepbridge/error.hpp"

namespace pepbridge::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
}

[[noreturn]] void malformed(int line, const std::string& what) {
    fail(Errc::MalformedRecord, "line " + std::to_string(line) + ": " + what);
}

double parse_coord(std::string_view field, int line) {
    field = trim(field);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
        malformed(line, "bad coordinate '" + std::string(field) + "'");
    return v;
}

int parse_int(std::string_view field, int line) {
    field = trim(field);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        malformed(line, "bad residue number '" + std::string(field) + "'");
    return v;
}

struct Partial {
    PdbResidue res;
    bool has_n = false, has_ca = false, has_c = false;
    std::size_t order = 0;
};

}  // namespace

const std::array<std::string_view, 20>& residue_names() {
    static const std::array<std::string_view, 20> names{"ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU",
                                                        "GLY", "HIS", "ILE", "LEU", "LYS", "MET", "PHE",
                                                        "PRO", "SER", "THR", "TRP", "TYR", "VAL"};
    return names;
}

int residue_index(std::string_view name) {
    const auto& names = residue_names();
    const auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

PdbParseResult parse_pdb_backbone(std::string_view text) {
    std::map<std::tuple<char, int, char>, Partial> residues;
    std::vector<char> chain_order;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.starts_with("ENDMDL")) break;
        if (!line.starts_with("ATOM  ")) continue;
        if (line.size() < 54) malformed(line_no, "ATOM record shorter than 54 columns");

        const std::string_view atom = trim(line.substr(12, 4));
        const char chain = line[21];
        const int resseq = parse_int(line.substr(22, 4), line_no);
        const char icode = line[26];
        const Vec3 xyz{parse_coord(line.substr(30, 8), line_no), parse_coord(line.substr(38, 8), line_no),
                       parse_coord(line.substr(46, 8), line_no)};

        auto [it, inserted] = residues.try_emplace({chain, resseq, icode});
        Partial& p = it->second;
        if (inserted) {
            p.res.chain = chain;
            p.res.resseq = resseq;
            p.res.icode = icode;
            p.res.name = std::string(trim(line.substr(17, 3)));
            if (std::find(chain_order.begin(), chain_order.end(), chain) == chain_order.end())
                chain_order.push_back(chain);
        }
        // First alternate location wins: later copies of an atom are ignored.
        if (atom == "N" && !p.has_n) {
            p.res.n = xyz;
            p.has_n = true;
        } else if (atom == "CA" && !p.has_ca) {
            p.res.ca = xyz;
            p.has_ca = true;
        } else if (atom == "C" && !p.has_c) {
            p.res.c = xyz;
            p.has_c = true;
        } else if (atom == "O" && !p.res.o) {
            p.res.o = xyz;
        } else if (atom == "CB" && !p.res.cb) {
            p.res.cb = xyz;
        }
    }

    PdbParseResult out;
    for (char chain : chain_order) {
        for (auto& [key, p] : residues) {
            if (std::get<0>(key) != chain) continue;
            if (p.has_n && p.has_ca && p.has_c)
                out.residues.push_back(p.res);
            else
                ++out.dropped;
        }
    }
    if (out.residues.empty()) fail(Errc::EmptyStructure, "no complete backbone residue in ATOM records");
    return out;
}

std::string write_pdb_backbone(const std::vector<PdbResidue>& residues) {
    std::string out;
    char buf[96];
    int serial = 0;
    auto emit = [&](const PdbResidue& r, const char* name, const Vec3& p, char element) {
        std::snprintf(buf, sizeof buf, "ATOM  %5d %-4s %3.3s %c%4d%c   %8.3f%8.3f%8.3f%6.2f%6.2f          %2c\n",
                      ++serial % 100000, name, r.name.c_str(), r.chain, r.resseq, r.icode, p.x, p.y, p.z, 1.0, 0.0,
                      element);
        out += buf;
    };
    for (std::size_t i = 0; i < residues.size(); ++i) {
        const PdbResidue& r = residues[i];
        emit(r, " N", r.n, 'N');
        emit(r, " CA", r.ca, 'C');
        emit(r, " C", r.c, 'C');
        if (r.o) emit(r, " O", *r.o, 'O');
        if (r.cb) emit(r, " CB", *r.cb, 'C');
        if (i + 1 == residues.size() || residues[i + 1].chain != r.chain) out += "TER\n";
    }
    out += "END\n";
    return out;
}

}  // namespace pepbridge::io
