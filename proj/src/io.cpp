#include "bltv/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bltv::io {

namespace {

[[noreturn]] void io_fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error("io error [" + path.string() + "]: " + what);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) io_fail(path, "cannot open for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) io_fail(path, "cannot open for reading");
    return in;
}

double parse_finite(const std::string& tok, const std::filesystem::path& path) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        io_fail(path, "malformed number '" + tok + "'");
    }
    if (!std::isfinite(v)) io_fail(path, "non-finite value '" + tok + "'");
    return v;
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_signal(const std::filesystem::path& path, const Signal& s) {
    s.validate();
    auto out = open_out(path);
    out << "sample_rate=" << format_double(s.sample_rate) << "\n";
    for (double v : s.samples) out << format_double(v) << "\n";
}

Signal read_signal(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("sample_rate=", 0) != 0)
        io_fail(path, "missing sample_rate header");
    Signal s;
    s.sample_rate = parse_finite(line.substr(12), path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        s.samples.push_back(parse_finite(line, path));
    }
    s.validate();
    return s;
}

void write_tvir(const std::filesystem::path& path, const TimeVaryingIR& ir) {
    const auto write_matrix = [&](const std::filesystem::path& p, const Eigen::MatrixXd& m) {
        auto out = open_out(p);
        out << "p=" << m.cols() << ",n=" << m.rows()
            << ",sample_rate=" << format_double(ir.sample_rate) << "\n";
        for (long i = 0; i < m.rows(); ++i) {
            for (long j = 0; j < m.cols(); ++j) {
                if (j) out << ",";
                out << format_double(m(i, j));
            }
            out << "\n";
        }
    };
    write_matrix(path, ir.taps);
    if (ir.has_std()) {
        std::filesystem::path std_path = path;
        std_path.replace_extension();
        std_path += "_std.csv";
        write_matrix(std_path, ir.tap_std);
    }
}

TimeVaryingIR read_tvir(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) io_fail(path, "empty file");
    int p = 0, n = 0;
    double sr = 0.0;
    if (std::sscanf(line.c_str(), "p=%d,n=%d,sample_rate=%lf", &p, &n, &sr) != 3)
        io_fail(path, "malformed header");
    TimeVaryingIR ir;
    ir.sample_rate = sr;
    ir.taps.resize(n, p);
    for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line)) io_fail(path, "truncated matrix");
        std::stringstream ss(line);
        std::string tok;
        for (int j = 0; j < p; ++j) {
            if (!std::getline(ss, tok, ',')) io_fail(path, "short row");
            ir.taps(i, j) = parse_finite(tok, path);
        }
    }
    return ir;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::filesystem::path& path) {
    auto in = open_in(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        io_fail(path, e.what());
    }
    return j;
}

void write_lti_fit(const std::filesystem::path& path, const LtiFit& fit, int trace_stride) {
    nlohmann::json j;
    j["p"] = fit.p;
    j["mean"] = std::vector<double>(fit.posterior.mean.data(),
                                    fit.posterior.mean.data() + fit.posterior.mean.size());
    const Eigen::VectorXd std = fit.posterior.stddev();
    j["std"] = std::vector<double>(std.data(), std.data() + std.size());
    j["config"] = {{"steps", fit.config.steps},
                   {"batch_replicas", fit.config.batch_replicas},
                   {"lr_init", fit.config.lr_init},
                   {"kl_weight", fit.config.beta()},
                   {"seed", fit.config.seed}};
    j["final_loss"] = fit.final_loss;
    std::vector<double> trace;
    for (std::size_t i = 0; i < fit.trace.size(); i += static_cast<std::size_t>(trace_stride))
        trace.push_back(fit.trace[i]);
    j["trace_downsampled"] = trace;
    write_json(path, j);
}

LtiFit read_lti_fit(const std::filesystem::path& path) {
    const nlohmann::json j = read_json(path);
    LtiFit fit;
    fit.p = j.at("p").get<int>();
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto std = j.at("std").get<std::vector<double>>();
    if (static_cast<int>(mean.size()) != fit.p || static_cast<int>(std.size()) != fit.p)
        io_fail(path, "fit dimensions inconsistent with p");
    fit.posterior.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), fit.p);
    fit.posterior.log_std.resize(fit.p);
    for (int i = 0; i < fit.p; ++i) fit.posterior.log_std(i) = std::log(std[static_cast<std::size_t>(i)]);
    fit.final_loss = j.at("final_loss").get<double>();
    fit.trace = j.at("trace_downsampled").get<std::vector<double>>();
    const auto& cfg = j.at("config");
    fit.config.steps = cfg.at("steps").get<int>();
    fit.config.batch_replicas = cfg.at("batch_replicas").get<int>();
    fit.config.lr_init = cfg.at("lr_init").get<double>();
    fit.config.kl_weight = cfg.at("kl_weight").get<double>();
    fit.config.seed = cfg.at("seed").get<std::uint64_t>();
    return fit;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows,
                     std::uint64_t seed) {
    auto out = open_out(path);
    out << "pair_count,mir_error,ccf_error,seed\n";
    for (const auto& r : rows)
        out << r.pair_count << "," << format_double(r.mir_error) << ","
            << format_double(r.ccf_error) << "," << seed << "\n";
}

void write_misfit_map(const std::filesystem::path& path, const MisfitMap& map) {
    auto out = open_out(path);
    out << "freqs";
    for (double f : map.freqs) out << "," << format_double(f);
    out << "\nvelocities";
    for (double v : map.velocities) out << "," << format_double(v);
    out << "\n";
    for (long i = 0; i < map.misfit.rows(); ++i) {
        for (long j = 0; j < map.misfit.cols(); ++j) {
            if (j) out << ",";
            out << format_double(map.misfit(i, j));
        }
        out << "\n";
    }
}

} // namespace bltv::io
