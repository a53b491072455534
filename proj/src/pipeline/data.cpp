// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/pipeline/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "pepbridge/error.hpp"
#include "pepbridge/frames.hpp"
#include "pepbridge/io/atomic_file.hpp"
#include "pepbridge/io/surface.hpp"
#include "pepbridge/random.hpp"
#include "pepbridge/simd.hpp"
#include "pepbridge/vpsde.hpp"

namespace pepbridge {

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 normalized(const Vec3& v) { return v * (1.0 / norm(v)); }

// Smooth scalar field on the unit sphere: a few random plane waves.
struct SmoothField {
    std::vector<Vec3> w;
    std::vector<double> phase;
    std::vector<double> amp;
    SmoothField(RandomStream& rng, int terms, double freq) {
        for (int k = 0; k < terms; ++k) {
            w.push_back(random_unit_vector(rng) * freq);
            phase.push_back(2.0 * kPi * rng.uniform());
            amp.push_back(1.0 / terms);
        }
    }
    double operator()(const Vec3& u) const {
        double v = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) v += amp[k] * std::cos(dot(w[k], u) + phase[k]);
        return v;
    }
};

std::vector<Vec3> fibonacci_sphere(int n) {
    std::vector<Vec3> out;
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(1.0 - z * z);
        out.push_back({r * std::cos(golden * i), r * std::sin(golden * i), z});
    }
    return out;
}

Rotation frame_from_axes(const Vec3& x_axis, const Vec3& up) {
    const Vec3 e1 = normalized(x_axis);
    const Vec3 e2 = normalized(up - e1 * dot(e1, up));
    const Vec3 e3 = cross(e1, e2);
    return Rotation(Mat3{{e1.x, e2.x, e3.x, e1.y, e2.y, e3.y, e1.z, e2.z, e3.z}});
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<Vec3> peptide_atoms(const Peptide& p) {
    std::vector<Vec3> out;
    for (const Residue& r : p.residues) {
        const BackboneAtoms a = frame_to_atoms(r.frame, r.torsions[4]);
        out.insert(out.end(), {a.n, a.ca, a.c, a.o});
    }
    return out;
}

std::vector<Vec3> peptide_ca(const Peptide& p) {
    std::vector<Vec3> out;
    for (const Residue& r : p.residues) out.push_back(r.frame.m);
    return out;
}

std::vector<io::PdbResidue> peptide_to_pdb(const Peptide& p, char chain) {
    std::vector<io::PdbResidue> out;
    int seq = 0;
    for (const Residue& r : p.residues) {
        const BackboneAtoms a = frame_to_atoms(r.frame, r.torsions[4]);
        io::PdbResidue pr;
        pr.chain = chain;
        pr.resseq = ++seq;
        pr.name = std::string(io::residue_names()[static_cast<std::size_t>(r.type)]);
        pr.n = a.n;
        pr.ca = a.ca;
        pr.c = a.c;
        pr.o = a.o;
        out.push_back(pr);
    }
    return out;
}

double psi_from_oxygen(const Transform& frame, const Vec3& o) {
    const Vec3 local = frame.r.inverse() * (o - frame.m) - kPsiFrameOffset;
    return wrap_angle(std::atan2(local.z, local.y));
}

std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t count, std::size_t first) {
    if (count > points.size()) fail(Errc::InvalidArgument, "cannot sample more points than available");
    if (count == 0) return {};
    std::vector<std::size_t> picked{first};
    std::vector<double> d(points.size()), tmp(points.size());
    simd::squared_distances(points.data(), points.size(), points[first], d.data());
    while (picked.size() < count) {
        const auto next = static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
        picked.push_back(next);
        simd::squared_distances(points.data(), points.size(), points[next], tmp.data());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::min(d[i], tmp[i]);
    }
    return picked;
}

std::vector<Vec3> surface_normals(std::span<const Vec3> points, const std::vector<io::PdbResidue>& receptor) {
    if (receptor.empty()) fail(Errc::EmptyReceptor, "normals need receptor residues");
    std::vector<Vec3> ca;
    for (const auto& r : receptor) ca.push_back(r.ca);
    const Vec3 all = centroid(ca);
    std::vector<Vec3> out;
    std::vector<double> d2(ca.size());
    for (const Vec3& p : points) {
        simd::squared_distances(ca.data(), ca.size(), p, d2.data());
        Vec3 acc{};
        int count = 0;
        for (std::size_t i = 0; i < ca.size(); ++i)
            if (d2[i] <= 144.0) acc += ca[i], ++count;
        Vec3 dir = p - (count ? acc * (1.0 / count) : all);
        if (norm(dir) < 1e-9) dir = p - all;
        if (norm(dir) < 1e-9) dir = {0, 0, 1};
        out.push_back(normalized(dir));
    }
    return out;
}

Vec3 site_origin(std::span<const Vec3> patch, std::span<const Vec3> normals) {
    Vec3 n{};
    for (const Vec3& v : normals) n += v;
    if (norm(n) < 1e-12) return centroid(patch);
    return centroid(patch) + normalized(n) * kSiteOffset;
}

std::vector<ComplexPair> synthetic_pairs(std::uint64_t seed, int n_complexes, const SynthConfig& cfg) {
    if (n_complexes < 1) fail(Errc::InvalidArgument, "synthetic_pairs needs n >= 1");
    std::vector<ComplexPair> out;
    const auto sphere = fibonacci_sphere(cfg.receptor_surface_points);
    const auto shell = fibonacci_sphere(cfg.receptor_residues);
    for (int c = 0; c < n_complexes; ++c) {
        RandomStream rng(seed, static_cast<std::uint64_t>(c));
        ComplexPair cp;
        char name[32];
        std::snprintf(name, sizeof name, "complex_%04d", c);
        cp.name = name;

        const Rotation spin = random_rotation(rng);
        const SmoothField bump(rng, 4, 2.0), hb(rng, 3, 3.0), hp(rng, 3, 2.5), gap(rng, 3, 6.0);
        auto radius = [&](const Vec3& u) { return cfg.receptor_radius + 1.5 * bump(u); };

        // Receptor backbone: residues on an inner shell with random orientations.
        for (int i = 0; i < cfg.receptor_residues; ++i) {
            const Vec3 u = spin * shell[static_cast<std::size_t>(i)];
            const Transform f{random_rotation(rng), u * (radius(u) - 2.5)};
            const BackboneAtoms a = frame_to_atoms(f, 2.0 * kPi * rng.uniform() - kPi);
            io::PdbResidue r;
            r.chain = 'R';
            r.resseq = i + 1;
            r.name = std::string(io::residue_names()[rng.index(20)]);
            r.n = a.n;
            r.ca = a.ca;
            r.c = a.c;
            r.o = a.o;
            cp.receptor.push_back(r);
        }

        // Full receptor surface, then the binding-site patch around a random direction.
        std::vector<Vec3> surf;
        std::vector<Vec3> dirs;
        for (const Vec3& s : sphere) {
            const Vec3 u = spin * s;
            dirs.push_back(u);
            surf.push_back(u * radius(u));
        }
        const Vec3 site_dir = random_unit_vector(rng);
        const Vec3 site = site_dir * radius(site_dir);
        std::vector<Vec3> near_pts;
        std::vector<std::size_t> near_idx;
        std::size_t closest = 0;
        double closest_d = 1e300;
        for (std::size_t i = 0; i < surf.size(); ++i) {
            const double d = norm(surf[i] - site);
            if (d <= cfg.patch_radius) {
                if (d < closest_d) closest_d = d, closest = near_pts.size();
                near_pts.push_back(surf[i]);
                near_idx.push_back(i);
            }
        }
        if (near_pts.size() < static_cast<std::size_t>(cfg.surface_points))
            fail(Errc::InvalidArgument, "patch radius too small for the requested surface size");
        const auto pick = farthest_point_sample(near_pts, static_cast<std::size_t>(cfg.surface_points), closest);
        for (std::size_t k : pick) {
            const Vec3& u = dirs[near_idx[k]];
            cp.receptor_surface.positions.push_back(near_pts[k]);
            cp.receptor_surface.hbond.push_back(hb(u));
            cp.receptor_surface.hphob.push_back(0.5 + 0.5 * hp(u));
        }

        // Peptide surface: offset shell over the patch, complementary hbond.
        const auto normals = surface_normals(cp.receptor_surface.positions, cp.receptor);
        for (std::size_t i = 0; i < pick.size(); ++i) {
            const Vec3& p = cp.receptor_surface.positions[i];
            const double off = cfg.shell_offset + cfg.shell_variation * gap(normalized(p));
            cp.peptide.surface.positions.push_back(p + normals[i] * off);
            cp.peptide.surface.hbond.push_back(-cp.receptor_surface.hbond[i]);
            cp.peptide.surface.hphob.push_back(cp.receptor_surface.hphob[i]);
        }

        // Backbone: a gently turning curve with 3.8 A C-alpha spacing, centred on the site origin.
        const Vec3 origin = site_origin(cp.receptor_surface.positions, normals);
        Vec3 up{};
        for (const Vec3& n : normals) up += n;
        up = normalized(up);
        const Vec3 e1 = normalized(cross(up, std::abs(up.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0}));
        const Vec3 e2 = cross(up, e1);
        std::vector<Vec3> ca{{0, 0, 0}};
        double heading = 2.0 * kPi * rng.uniform();
        for (int i = 1; i < cfg.peptide_length; ++i) {
            heading += 0.35 * rng.normal();
            const double lift = 0.15 * rng.normal();
            const Vec3 step = normalized(e1 * std::cos(heading) + e2 * std::sin(heading) + up * lift) * 3.8;
            ca.push_back(ca.back() + step);
        }
        const Vec3 shift = origin - centroid(ca);
        for (Vec3& p : ca) p += shift;
        const std::array<double, 3> rotamers{-kPi / 3.0, kPi, kPi / 3.0};
        for (int i = 0; i < cfg.peptide_length; ++i) {
            const std::size_t a = static_cast<std::size_t>(std::max(i - 1, 0));
            const std::size_t b = static_cast<std::size_t>(std::min(i + 1, cfg.peptide_length - 1));
            Residue r;
            const Rotation base = frame_from_axes(ca[b] - ca[a], up);
            r.frame = {base * Rotation::about_x(0.5 * rng.normal()), ca[static_cast<std::size_t>(i)]};
            for (int k = 0; k < 4; ++k)
                r.torsions[static_cast<std::size_t>(k)] = wrap_angle(rotamers[rng.index(3)] + 0.17 * rng.normal());
            r.torsions[4] = wrap_angle((rng.uniform() < 0.5 ? -kPi / 4.0 : 3.0 * kPi / 4.0) + 0.17 * rng.normal());
            r.type = static_cast<int>(rng.index(20));
            cp.peptide.residues.push_back(r);
        }
        out.push_back(std::move(cp));
    }
    return out;
}

std::string format_torsions(const std::vector<Residue>& residues) {
    std::string out = "TORS1 " + std::to_string(residues.size()) + "\n";
    for (const Residue& r : residues) {
        out += std::to_string(r.type);
        for (double t : r.torsions) out += " " + fmt(t);
        out += "\n";
    }
    return out;
}

void parse_torsions(std::string_view text, std::vector<Residue>& residues) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        if (ch == ' ' || ch == '\n' || ch == '\t' || ch == '\r') {
            if (!cur.empty()) tokens.push_back(cur), cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    if (tokens.size() < 2 || tokens[0] != "TORS1") fail(Errc::BadMagic, "torsion file must start with 'TORS1 <count>'");
    const std::size_t n = static_cast<std::size_t>(std::stoul(tokens[1]));
    if (n != residues.size() || tokens.size() != 2 + 6 * n)
        fail(Errc::CountMismatch, "torsion file does not match the residue count");
    for (std::size_t i = 0; i < n; ++i) {
        const std::string* row = &tokens[2 + 6 * i];
        int type = -1;
        std::from_chars(row[0].data(), row[0].data() + row[0].size(), type);
        if (type < 0 || type >= 20) fail(Errc::InvalidType, "torsion file: bad residue type '" + row[0] + "'");
        residues[i].type = type;
        for (std::size_t k = 0; k < 5; ++k) {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(row[k + 1].data(), row[k + 1].data() + row[k + 1].size(), v);
            if (ec != std::errc() || !std::isfinite(v))
                fail(Errc::NonFiniteValue, "torsion file: bad angle '" + row[k + 1] + "'");
            residues[i].torsions[k] = wrap_angle(v);
        }
    }
}

std::uint64_t dataset_digest(const std::vector<ComplexPair>& data) {
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&](const std::string& s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 1099511628211ULL;
        }
    };
    for (const ComplexPair& c : data) {
        feed(c.name);
        feed(io::format_surface(c.receptor_surface));
        feed(io::write_pdb_backbone(c.receptor));
        feed(io::format_surface(c.peptide.surface));
        feed(format_torsions(c.peptide.residues));
        for (const Residue& r : c.peptide.residues) {
            for (double v : r.frame.r.matrix().a) feed(fmt(v));
            feed(fmt(r.frame.m.x) + fmt(r.frame.m.y) + fmt(r.frame.m.z));
        }
    }
    return h;
}

void save_complex(const std::filesystem::path& dir, const ComplexPair& c) {
    std::filesystem::create_directories(dir);
    io::write_text_atomic(dir / "receptor.pdb", io::write_pdb_backbone(c.receptor));
    io::write_surface(dir / "receptor.surf", c.receptor_surface);
    io::write_text_atomic(dir / "peptide.pdb", io::write_pdb_backbone(peptide_to_pdb(c.peptide)));
    io::write_surface(dir / "peptide.surf", c.peptide.surface);
    io::write_text_atomic(dir / "peptide.tors", format_torsions(c.peptide.residues));
}

ComplexPair load_complex(const std::filesystem::path& dir) {
    ComplexPair c;
    c.name = dir.filename().string();
    c.receptor = io::parse_pdb_backbone(io::read_text(dir / "receptor.pdb")).residues;
    c.receptor_surface = io::read_surface(dir / "receptor.surf");
    const auto pep = io::parse_pdb_backbone(io::read_text(dir / "peptide.pdb")).residues;
    for (const auto& r : pep) {
        Residue res;
        res.frame = atoms_to_frame(r.n, r.ca, r.c);
        res.type = std::max(io::residue_index(r.name), 0);
        if (r.o) res.torsions[4] = psi_from_oxygen(res.frame, *r.o);
        c.peptide.residues.push_back(res);
    }
    c.peptide.surface = io::read_surface(dir / "peptide.surf");
    if (std::filesystem::exists(dir / "peptide.tors"))
        parse_torsions(io::read_text(dir / "peptide.tors"), c.peptide.residues);
    if (c.peptide.surface.size() != c.receptor_surface.size())
        fail(Errc::CountMismatch, dir.string() + ": peptide and receptor surfaces differ in size");
    return c;
}

void save_dataset(const std::filesystem::path& dir, const std::vector<ComplexPair>& data) {
    for (const ComplexPair& c : data) save_complex(dir / c.name, c);
}

std::vector<ComplexPair> load_dataset(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) fail(Errc::Io, "not a directory: " + dir.string());
    std::vector<std::filesystem::path> subdirs;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_directory()) subdirs.push_back(e.path());
    std::sort(subdirs.begin(), subdirs.end());
    if (subdirs.empty()) fail(Errc::EmptyInput, "no complexes under " + dir.string());
    std::vector<ComplexPair> out;
    for (const auto& d : subdirs) out.push_back(load_complex(d));
    return out;
}

}  // namespace pepbridge
