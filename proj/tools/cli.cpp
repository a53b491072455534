// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "pepbridge/error.hpp"
#include "pepbridge/igso3.hpp"
#include "pepbridge/io/atomic_file.hpp"
#include "pepbridge/io/config.hpp"
#include "pepbridge/io/pdb.hpp"
#include "pepbridge/io/surface.hpp"
#include "pepbridge/metrics.hpp"
#include "pepbridge/nn.hpp"
#include "pepbridge/parallel.hpp"
#include "pepbridge/pipeline/data.hpp"
#include "pepbridge/pipeline/model.hpp"
#include "pepbridge/pipeline/sample.hpp"
#include "pepbridge/pipeline/train.hpp"
#include "pepbridge/random.hpp"

namespace fs = std::filesystem;

namespace pepbridge::cli {

namespace {

// Bad flag values detected after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(const char* f, auto... v) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, v...);
    return buf;
}

// Shortest text that reads back to the same double.
std::string g17(double v) {
    char buf[64];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

// Builds a directory next to `out` and moves it into place on success.
class StagedDir {
public:
    explicit StagedDir(fs::path out) : out_(std::move(out)), tmp_(out_.string() + ".partial") {
        fs::remove_all(tmp_);
        fs::create_directories(tmp_);
    }
    ~StagedDir() {
        std::error_code ec;
        if (!done_) fs::remove_all(tmp_, ec);
    }
    const fs::path& path() const { return tmp_; }
    void commit() {
        fs::remove_all(out_);
        if (out_.has_parent_path()) fs::create_directories(out_.parent_path());
        fs::rename(tmp_, out_);
        done_ = true;
    }

private:
    fs::path out_, tmp_;
    bool done_ = false;
};

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

void print_settings(std::ostream& out, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& kv) {
    out << "# " << command << "\n";
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

// ---------------------------------------------------------------- kernels

struct KernelArgs {
    std::vector<double> t;
    std::string out;
    int bins = 1000;
};

std::string igso3_tables(const KernelArgs& a) {
    std::ostringstream os;
    for (std::size_t i = 0; i < a.t.size(); ++i) {
        const double t = a.t[i];
        if (i) os << "\n";
        os << "# igso3 t=" << g17(t) << " order=" << igso3_truncation(t) << "\n";
        os << "omega\tdensity\tangle_pdf\tcdf\n";
        for (int k = 0; k <= a.bins; ++k) {
            const double w = std::numbers::pi * k / a.bins;
            os << g17(w) << '\t' << g17(igso3_density(w, t)) << '\t' << g17(igso3_angle_pdf(w, t)) << '\t'
               << g17(igso3_angle_cdf(w, t)) << '\n';
        }
    }
    return os.str();
}

int cmd_kernels(const KernelArgs& a, std::ostream& out) {
    for (double t : a.t)
        if (!(t > 0.0) || !std::isfinite(t)) throw UsageError("--t values must be positive and finite");
    if (a.bins < 2) throw UsageError("--bins must be at least 2");
    std::string ts;
    for (double t : a.t) ts += (ts.empty() ? "" : ",") + g17(t);
    print_settings(out, "kernels igso3", {{"t", ts}, {"bins", std::to_string(a.bins)}, {"out", a.out}});
    const std::string text = igso3_tables(a);
    if (a.out.empty())
        out << text;
    else
        io::write_text_atomic(a.out, text);
    return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::uint64_t seed = 0;
    int n = 0;
    std::string out;
    int points = 128;
    int length = 8;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    if (a.n < 1) throw UsageError("--n must be positive");
    if (a.points < 3 || a.length < 3) throw UsageError("--points and --length must be at least 3");
    print_settings(out, "synth",
                   {{"seed", std::to_string(a.seed)},
                    {"n", std::to_string(a.n)},
                    {"points", std::to_string(a.points)},
                    {"length", std::to_string(a.length)},
                    {"out", a.out}});
    SynthConfig sc;
    sc.surface_points = a.points;
    sc.peptide_length = a.length;
    const auto data = synthetic_pairs(a.seed, a.n, sc);
    StagedDir dir(a.out);
    save_dataset(dir.path(), data);
    dir.commit();
    out << "digest = " << fmt("%016llx", static_cast<unsigned long long>(dataset_digest(data))) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string config;
    std::string data;
    std::string out;
    std::string trace;
    int steps = -1;
    std::int64_t seed = -1;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    TrainConfig cfg = a.config.empty() ? TrainConfig{} : io::read_config(a.config);
    if (a.steps >= 0) cfg.train_steps = a.steps;
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    std::vector<ComplexPair> data;
    try {
        data = load_dataset(a.data);
    } catch (const Error& e) {
        if (e.code() == Errc::EmptyInput || !fs::is_directory(a.data)) throw UsageError(e.what());
        throw;
    }
    print_settings(out, "train", {{"data", a.data}, {"out", a.out}, {"complexes", std::to_string(data.size())}});
    out << io::format_config(cfg);

    ScoreModel model(ModelConfig::from(cfg), cfg.seed);
    const TrainResult r = train_toy(model, data, cfg, [&](int step, double loss, double lr) {
        if (step % 50 == 0 || step + 1 == cfg.train_steps)
            out << fmt("step %d loss %.6e lr %.3e\n", step, loss, lr) << std::flush;
    });
    nn::save_checkpoint(a.out, cfg.seed, io::format_config(cfg), model.params());
    if (!a.trace.empty()) {
        std::ostringstream os;
        os << "step\tloss\tsurface\trotation\tposition\ttype\tangle\tlr\n";
        for (std::size_t i = 0; i < r.loss.size(); ++i) {
            os << i << '\t' << g17(r.loss[i]);
            for (double c : r.components[i]) os << '\t' << g17(c);
            os << '\t' << g17(r.learning_rate[i]) << '\n';
        }
        io::write_text_atomic(a.trace, os.str());
    }
    const auto s = smooth(r.loss, 50);
    if (!s.empty()) out << fmt("smoothed loss %.6e -> %.6e\n", s.front(), s.back());
    return kExitOk;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
    std::string surface;
    std::string pdb;
    std::string params;
    std::string out;
    int length = 8;
    int count = kDefaultSampleCount;
    int steps = -1;
    int points = 128;
    std::uint64_t seed = 0;
};

std::string sequence_of(const Peptide& p) {
    std::string s;
    for (const Residue& r : p.residues) {
        if (!s.empty()) s += '-';
        s += io::residue_names()[static_cast<std::size_t>(r.type)];
    }
    return s;
}

int cmd_sample(const SampleArgs& a, std::ostream& out) {
    if (a.length < 1 || a.count < 1 || a.points < 3) throw UsageError("--length, --count and --points must be positive");
    ReceptorInput rec;
    rec.surface = io::read_surface(a.surface);
    rec.residues = io::parse_pdb_backbone(io::read_text(a.pdb)).residues;
    const nn::Checkpoint ckpt = nn::load_checkpoint(a.params);
    const TrainConfig tc = io::parse_config(ckpt.config);
    ScoreModel model(ModelConfig::from(tc), ckpt.seed);
    nn::restore_params(ckpt, model.params());

    SampleConfig sc;
    sc.steps = a.steps > 0 ? a.steps : tc.sample_steps;
    sc.length = a.length;
    sc.surface_points = a.points;
    print_settings(out, "sample",
                   {{"receptor-surface", a.surface},
                    {"receptor-pdb", a.pdb},
                    {"params", a.params},
                    {"length", std::to_string(sc.length)},
                    {"count", std::to_string(a.count)},
                    {"steps", std::to_string(sc.steps)},
                    {"points", std::to_string(sc.surface_points)},
                    {"seed", std::to_string(a.seed)},
                    {"out", a.out}});

    std::vector<Peptide> gen(static_cast<std::size_t>(a.count));
    parallel_for(gen.size(), [&](std::size_t i) {
        RandomStream rng(a.seed, i);
        gen[i] = sample_complex(model, rec, sc, rng);
    });

    StagedDir dir(a.out);
    std::ostringstream manifest;
    manifest << "name\tlength\tsurface_points\tsequence\n";
    for (std::size_t i = 0; i < gen.size(); ++i) {
        const std::string name = fmt("cand_%03zu", i);
        const Peptide& p = gen[i];
        io::write_text_atomic(dir.path() / (name + ".pdb"), io::write_pdb_backbone(peptide_to_pdb(p)));
        io::write_surface(dir.path() / (name + ".surf"), p.surface);
        io::write_text_atomic(dir.path() / (name + ".tors"), format_torsions(p.residues));
        manifest << name << '\t' << p.residues.size() << '\t' << p.surface.size() << '\t' << sequence_of(p) << '\n';
    }
    io::write_text_atomic(dir.path() / "manifest.tsv", manifest.str());
    dir.commit();
    out << "wrote " << gen.size() << " candidates\n";
    return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string gen;
    std::string native;
    std::string report;
    int clusters = 5;
    std::uint64_t seed = 0;
};

std::string metric(const std::function<double()>& f) {
    try {
        return fmt("%.6f", f());
    } catch (const Error&) {
        return "na";
    }
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    if (a.clusters < 2) throw UsageError("--clusters must be at least 2");
    if (!fs::is_directory(a.gen)) throw UsageError("not a directory: " + a.gen);
    print_settings(out, "eval",
                   {{"gen", a.gen},
                    {"native", a.native},
                    {"report", a.report},
                    {"clusters", std::to_string(a.clusters)},
                    {"seed", std::to_string(a.seed)}});
    const ComplexPair native = load_complex(a.native);
    const auto native_atoms = peptide_atoms(native.peptide);
    const auto native_ca = peptide_ca(native.peptide);

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.gen))
        if (e.is_regular_file() && e.path().extension() == ".pdb") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) fail(Errc::EmptyInput, a.gen + ": no candidate .pdb files");

    std::ostringstream rep;
    rep << "candidate\trmsd\ttm\tbsr\n";
    std::vector<std::vector<Vec3>> structures, surfaces;
    for (const fs::path& f : files) {
        const auto residues = io::parse_pdb_backbone(io::read_text(f)).residues;
        std::vector<Vec3> atoms, ca;
        for (const auto& r : residues) {
            atoms.insert(atoms.end(), {r.n, r.ca, r.c});
            if (r.o) atoms.push_back(*r.o);
            ca.push_back(r.ca);
        }
        const fs::path surf = fs::path(f).replace_extension(".surf");
        if (fs::exists(surf)) surfaces.push_back(io::read_surface(surf).positions);
        structures.push_back(ca);
        rep << f.stem().string() << '\t' << metric([&] { return metrics::rmsd_ca(ca, native_ca); }) << '\t'
            << metric([&] { return metrics::tm_score(ca, native_ca); }) << '\t'
            << metric([&] { return metrics::bsr(native.receptor, atoms, native_atoms); }) << '\n';
    }
    const bool paired = surfaces.size() == structures.size();
    const int k = std::min<int>(a.clusters, static_cast<int>(structures.size()));
    rep << "# summary\n";
    rep << "candidates\t" << structures.size() << '\n';
    rep << "diversity\t" << metric([&] { return metrics::diversity(structures); }) << '\n';
    rep << "surface_diversity\t"
        << (surfaces.size() >= 2 ? metric([&] { return metrics::surface_diversity(surfaces); }) : "na") << '\n';
    rep << "consistency\t"
        << (paired && k >= 2 ? metric([&] { return metrics::consistency(surfaces, structures, k, a.seed); }) : "na")
        << '\n';
    io::write_text_atomic(a.report, rep.str());
    out << rep.str();
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"pepbridge: diffusion bridges for receptor-conditioned peptide generation", "pepbridge"};
    app.require_subcommand(1);
    unsigned threads = default_threads();

    KernelArgs ka;
    auto* kernels = app.add_subcommand("kernels", "tabulate diffusion kernels");
    kernels->require_subcommand(1);
    auto* igso3 = kernels->add_subcommand("igso3", "IGSO(3) density, angle marginal and CDF tables");
    igso3->add_option("--t", ka.t, "comma separated times")->required()->delimiter(',');
    igso3->add_option("--out", ka.out, "output path (stdout when omitted)");
    igso3->add_option("--bins", ka.bins, "angle intervals over [0, pi]");

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
    synth->add_option("--seed", sa.seed)->required();
    synth->add_option("--n", sa.n, "number of complexes")->required();
    synth->add_option("--out", sa.out)->required();
    synth->add_option("--points", sa.points, "surface points per complex");
    synth->add_option("--length", sa.length, "peptide length");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "train the score model");
    train->add_option("--config", ta.config, "key=value config file");
    train->add_option("--data", ta.data, "dataset directory")->required();
    train->add_option("--out", ta.out, "checkpoint path")->required();
    train->add_option("--trace", ta.trace, "per-step loss table");
    train->add_option("--steps", ta.steps, "override train_steps");
    train->add_option("--seed", ta.seed, "override seed");

    SampleArgs sp;
    auto* sample = app.add_subcommand("sample", "generate peptides for a receptor");
    sample->add_option("--receptor-surface", sp.surface)->required();
    sample->add_option("--receptor-pdb", sp.pdb)->required();
    sample->add_option("--params", sp.params, "checkpoint")->required();
    sample->add_option("--seed", sp.seed)->required();
    sample->add_option("--out", sp.out)->required();
    sample->add_option("--length", sp.length);
    sample->add_option("--count", sp.count);
    sample->add_option("--steps", sp.steps, "override sample_steps");
    sample->add_option("--points", sp.points, "generated surface points");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "score candidates against a native complex");
    eval->add_option("--gen", ea.gen, "candidate directory")->required();
    eval->add_option("--native", ea.native, "native complex directory")->required();
    eval->add_option("--report", ea.report)->required();
    eval->add_option("--clusters", ea.clusters, "consistency cluster count");
    eval->add_option("--seed", ea.seed, "clustering seed");

    for (CLI::App* sub : {igso3, synth, train, sample, eval})
        sub->add_option("--threads", threads, "worker threads (results do not depend on it)")
            ->check(CLI::PositiveNumber);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
        return kExitUsage;
    }

    set_thread_count(threads);
    try {
        if (igso3->parsed()) return cmd_kernels(ka, out);
        if (synth->parsed()) return cmd_synth(sa, out);
        if (train->parsed()) return cmd_train(ta, out);
        if (sample->parsed()) return cmd_sample(sp, out);
        if (eval->parsed()) return cmd_eval(ea, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace pepbridge::cli
