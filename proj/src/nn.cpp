// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/nn.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "pepbridge/error.hpp"
#include "pepbridge/io/atomic_file.hpp"

namespace pepbridge::nn {

namespace {
constexpr const char* kCheckpointMagic = "PEPBRIDGE-CKPT";
constexpr int kCheckpointVersion = 1;
}  // namespace

Mlp::Mlp(ad::ParamSet& params, const std::string& name, std::vector<int> widths, RandomStream& rng,
         double output_scale)
    : widths_(std::move(widths)) {
    if (widths_.size() < 2) fail(Errc::InvalidArgument, "an Mlp needs at least input and output widths");
    for (std::size_t k = 0; k + 1 < widths_.size(); ++k) {
        const int in = widths_[k], out = widths_[k + 1];
        if (in <= 0 || out <= 0) fail(Errc::InvalidArgument, "Mlp widths must be positive");
        const double bound = 1.0 / std::sqrt(static_cast<double>(in)) * (k + 2 == widths_.size() ? output_scale : 1.0);
        ad::Matrix w(in, out);
        for (double& x : w.data) x = bound * (2.0 * rng.uniform() - 1.0);
        weight_index_.push_back(params.add(name + ".w" + std::to_string(k), std::move(w)));
        bias_index_.push_back(params.add(name + ".b" + std::to_string(k), ad::Matrix(1, out)));
    }
}

ad::Var Mlp::forward(ad::Tape& tape, ad::Var x) const {
    if (x.cols() != widths_.front())
        fail(Errc::DimensionMismatch, "Mlp input has " + std::to_string(x.cols()) + " columns, expected " +
                                          std::to_string(widths_.front()));
    ad::Var h = x;
    for (std::size_t k = 0; k < weight_index_.size(); ++k) {
        h = ad::add_bias(ad::matmul(h, tape.param(weight_index_[k])), tape.param(bias_index_[k]));
        if (k + 1 < weight_index_.size()) h = ad::silu(h);
    }
    return h;
}

ad::Matrix Mlp::apply(const ad::ParamSet& params, const ad::Matrix& x) const {
    ad::Tape tape(&params, false);
    return forward(tape, tape.constant(x)).value();
}

void sinusoidal(double x, int count, double base, double* out) {
    for (int k = 0; k < count; ++k) {
        const double w = std::pow(base, -static_cast<double>(k) / count);
        out[2 * k] = std::sin(x * w);
        out[2 * k + 1] = std::cos(x * w);
    }
}

std::vector<double> sinusoidal(double x, int count, double base) {
    std::vector<double> v(static_cast<std::size_t>(2 * count));
    sinusoidal(x, count, base, v.data());
    return v;
}

void save_checkpoint(const std::filesystem::path& path, std::uint64_t seed, const std::string& config,
                     const ad::ParamSet& params) {
    std::ostringstream os;
    os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    os << "seed " << seed << '\n';
    std::size_t lines = 0;
    for (char c : config) lines += c == '\n';
    if (!config.empty() && config.back() != '\n') ++lines;
    os << "config " << lines << '\n' << config;
    if (!config.empty() && config.back() != '\n') os << '\n';
    os << "params " << params.size() << '\n';
    char buf[64];
    for (int i = 0; i < params.size(); ++i) {
        const ad::Matrix& m = params.value(i);
        os << params.name(i) << ' ' << m.rows << ' ' << m.cols << '\n';
        for (std::size_t k = 0; k < m.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%a", m.data[k]);
            os << buf << (k + 1 == m.size() || (k + 1) % 8 == 0 ? '\n' : ' ');
        }
    }
    io::write_text_atomic(path, os.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::istringstream is(io::read_text(path));
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != kCheckpointMagic) fail(Errc::BadMagic, path.string() + ": not a checkpoint");
    if (version != kCheckpointVersion) fail(Errc::BadMagic, path.string() + ": unsupported checkpoint version");
    Checkpoint c;
    std::string key;
    std::size_t lines = 0;
    if (!(is >> key >> c.seed) || key != "seed") fail(Errc::MalformedRecord, path.string() + ": missing seed");
    if (!(is >> key >> lines) || key != "config") fail(Errc::MalformedRecord, path.string() + ": missing config");
    std::string line;
    std::getline(is, line);
    for (std::size_t i = 0; i < lines; ++i) {
        if (!std::getline(is, line)) fail(Errc::CountMismatch, path.string() + ": truncated config block");
        c.config += line + '\n';
    }
    int count = 0;
    if (!(is >> key >> count) || key != "params") fail(Errc::MalformedRecord, path.string() + ": missing params");
    for (int i = 0; i < count; ++i) {
        std::string name;
        int rows = 0, cols = 0;
        if (!(is >> name >> rows >> cols) || rows < 0 || cols < 0)
            fail(Errc::MalformedRecord, path.string() + ": bad parameter header " + std::to_string(i));
        ad::Matrix m(rows, cols);
        for (double& x : m.data) {
            std::string tok;
            if (!(is >> tok)) fail(Errc::CountMismatch, path.string() + ": truncated values for " + name);
            char* end = nullptr;
            x = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') fail(Errc::UnparsableValue, path.string() + ": bad value in " + name);
        }
        c.names.push_back(name);
        c.values.push_back(std::move(m));
    }
    return c;
}

void restore_params(const Checkpoint& ckpt, ad::ParamSet& params) {
    if (static_cast<int>(ckpt.values.size()) != params.size())
        fail(Errc::CountMismatch, "checkpoint has " + std::to_string(ckpt.values.size()) + " tensors, model has " +
                                      std::to_string(params.size()));
    for (int i = 0; i < params.size(); ++i) {
        const ad::Matrix& src = ckpt.values[static_cast<std::size_t>(i)];
        ad::Matrix& dst = params.value(i);
        if (ckpt.names[static_cast<std::size_t>(i)] != params.name(i) || src.rows != dst.rows || src.cols != dst.cols)
            fail(Errc::ShapeMismatch, "checkpoint tensor " + ckpt.names[static_cast<std::size_t>(i)] +
                                          " does not match " + params.name(i));
        dst = src;
    }
}

}  // namespace pepbridge::nn
