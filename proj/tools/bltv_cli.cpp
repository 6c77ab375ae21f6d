// Command-line front end: fixture generation, fitting, sweep comparison,
// plot-ready data emission, and the Monte Carlo self-test suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bltv/ant.hpp"
#include "bltv/gp_prior.hpp"
#include "bltv/io.hpp"
#include "bltv/lti.hpp"
#include "bltv/ltv.hpp"
#include "bltv/stochastic.hpp"
#include "bltv/vi.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bltv;

namespace {

json default_config() {
    return json{
        {"seed", 7},
        {"lti",
         {{"length", 2048},
          {"p", 16},
          {"snr_db", 0.0},
          {"n_pulses", 48},
          {"train",
           {{"steps", 1500}, {"batch_replicas", 128}, {"lr_init", 0.05}, {"kl_weight", -1.0}}}}},
        {"ltv",
         {{"length", 2048},
          {"p", 8},
          {"window", 32},
          {"stride", 16},
          {"snr_db", 10.0},
          {"n_pulses", 48},
          {"gp", {{"lengthscale", 8.0}, {"variance", -1.0}, {"jitter", -1.0}}},
          {"train",
           {{"steps", 600}, {"batch_replicas", 32}, {"lr_init", 0.05}, {"kl_weight", -1.0}}}}},
        {"ant",
         {{"distance", 5000.0},
          {"sample_rate", 8.0},
          {"signal_length", 512},
          {"medium_taps", 32},
          {"sources_per_pair", 24},
          {"snr_db", 0.0},
          {"pairs", 100},
          {"pair_counts", {25, 50, 100, 200}},
          {"dispersion",
           {{"freqs", {0.8, 1.2, 1.6, 2.0, 2.4, 2.8, 3.2}},
            {"velocities", {2200.0, 2150.0, 2100.0, 2050.0, 2000.0, 1950.0, 1900.0}}}},
          {"ccf", {{"window_length", 128}, {"water_level", 1e-3}}},
          {"freq_grid", {{"min", 1.0}, {"max", 3.0}, {"count", 21}}},
          {"velocity_grid", {{"min", 1700.0}, {"max", 2500.0}, {"count", 161}}},
          {"train",
           {{"steps", 400}, {"batch_replicas", 16}, {"lr_init", 0.05}, {"kl_weight", -1.0}}}}}};
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("--set expects path.to.field=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json* node = &config;
    std::size_t pos = 0;
    while (true) {
        const auto dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (key.empty()) throw std::invalid_argument("--set has an empty path segment");
        if (dot == std::string::npos) {
            node = &(*node)[key];
            break;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
    try {
        *node = json::parse(value);
    } catch (const json::exception&) {
        *node = value; // plain string value
    }
}

TrainConfig train_config(const json& t, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.steps = t.at("steps").get<int>();
    cfg.batch_replicas = t.at("batch_replicas").get<int>();
    cfg.lr_init = t.at("lr_init").get<double>();
    cfg.kl_weight = t.at("kl_weight").get<double>();
    cfg.seed = seed;
    if (cfg.steps < 1 || cfg.batch_replicas < 1 || !(cfg.lr_init > 0.0))
        throw std::invalid_argument("train: steps/batch_replicas must be >= 1, lr_init > 0");
    return cfg;
}

DispersionCurve dispersion_from(const json& d) {
    DispersionCurve c;
    c.freqs = d.at("freqs").get<std::vector<double>>();
    c.velocities = d.at("velocities").get<std::vector<double>>();
    c.validate();
    return c;
}

std::vector<double> linear_grid(const json& g) {
    const double lo = g.at("min").get<double>();
    const double hi = g.at("max").get<double>();
    const int count = g.at("count").get<int>();
    if (count < 2 || !(hi > lo))
        throw std::invalid_argument("grid: need count >= 2 and max > min");
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
    return out;
}

AntScenario scenario_from(const json& a, std::uint64_t seed) {
    AntScenario sc;
    sc.distance = a.at("distance").get<double>();
    sc.dispersion = dispersion_from(a.at("dispersion"));
    sc.n_pairs = a.at("pairs").get<int>();
    sc.sources_per_pair = a.at("sources_per_pair").get<int>();
    sc.snr_db = a.at("snr_db").get<double>();
    sc.seed = seed;
    sc.signal_length = a.at("signal_length").get<int>();
    sc.sample_rate = a.at("sample_rate").get<double>();
    sc.medium_taps = a.at("medium_taps").get<int>();
    sc.validate();
    return sc;
}

Fir random_smooth_fir(int p, std::uint64_t seed) {
    Rng rng(seed);
    Fir h;
    h.taps.resize(static_cast<std::size_t>(p));
    const double scale = 1.0 / std::sqrt(static_cast<double>(p));
    for (int j = 0; j < p; ++j)
        h.taps[static_cast<std::size_t>(j)] =
            scale * rng.normal() * std::exp(-2.0 * static_cast<double>(j) / p);
    return h;
}

struct CmdContext {
    json config;
    std::uint64_t seed = 0;
    fs::path out;
    fs::path data; // fixture directory for fit
};

void ensure_out(const CmdContext& ctx) {
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec) throw std::runtime_error("io error [" + ctx.out.string() + "]: " + ec.message());
}

// --------------------------------------------------------------------------
// gen

void gen_lti(const CmdContext& ctx) {
    const json& c = ctx.config.at("lti");
    const int length = c.at("length").get<int>();
    const int p = c.at("p").get<int>();
    Signal f = gen_pulse_train(length, c.at("n_pulses").get<int>(), split_seed(ctx.seed, 1));
    const Fir h_true = random_smooth_fir(p, split_seed(ctx.seed, 2));
    Signal g_clean = convolve(f, h_true);
    Signal g = add_white_noise(g_clean, c.at("snr_db").get<double>(), split_seed(ctx.seed, 3));

    io::write_signal(ctx.out / "f.csv", f);
    io::write_signal(ctx.out / "g.csv", g);
    io::write_signal(ctx.out / "g_clean.csv", g_clean);
    json ht;
    ht["taps"] = h_true.taps;
    io::write_json(ctx.out / "h_true.json", ht);

    json manifest;
    manifest["kind"] = "lti";
    manifest["seed"] = ctx.seed;
    manifest["files"] = {{{"name", "f.csv"}, {"seed", split_seed(ctx.seed, 1)}},
                         {{"name", "g.csv"}, {"seed", split_seed(ctx.seed, 3)}},
                         {{"name", "g_clean.csv"}, {"seed", 0}},
                         {{"name", "h_true.json"}, {"seed", split_seed(ctx.seed, 2)}}};
    io::write_json(ctx.out / "manifest.json", manifest);
}

void gen_ltv(const CmdContext& ctx) {
    const json& c = ctx.config.at("ltv");
    const int length = c.at("length").get<int>();
    const int p = c.at("p").get<int>();
    std::array<Fir, 3> base;
    for (int i = 0; i < 3; ++i) base[static_cast<std::size_t>(i)] = random_smooth_fir(p, split_seed(ctx.seed, 10 + static_cast<std::uint64_t>(i)));
    const InterpolationSchedule sched = smoothstep_schedule(length, base);
    TimeVaryingIR h_true = gen_ltv_ground_truth(sched);

    Signal f = gen_pulse_train(length, c.at("n_pulses").get<int>(), split_seed(ctx.seed, 1));
    Signal g_clean = convolve_ltv(f, h_true);
    Signal g = add_white_noise(g_clean, c.at("snr_db").get<double>(), split_seed(ctx.seed, 3));

    io::write_signal(ctx.out / "f.csv", f);
    io::write_signal(ctx.out / "g.csv", g);
    io::write_tvir(ctx.out / "h_true.csv", h_true);

    json manifest;
    manifest["kind"] = "ltv";
    manifest["seed"] = ctx.seed;
    manifest["files"] = {{{"name", "f.csv"}, {"seed", split_seed(ctx.seed, 1)}},
                         {{"name", "g.csv"}, {"seed", split_seed(ctx.seed, 3)}},
                         {{"name", "h_true.csv"}, {"seed", ctx.seed}}};
    io::write_json(ctx.out / "manifest.json", manifest);
}

void gen_ant(const CmdContext& ctx) {
    const AntScenario sc = scenario_from(ctx.config.at("ant"), ctx.seed);
    const auto pairs = gen_ant_pairs(sc);
    json files = json::array();
    char name[64];
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::snprintf(name, sizeof(name), "pair_%04zu_a.csv", i);
        io::write_signal(ctx.out / name, pairs[i].first);
        files.push_back({{"name", name}, {"seed", split_seed(sc.seed, i)}});
        std::snprintf(name, sizeof(name), "pair_%04zu_b.csv", i);
        io::write_signal(ctx.out / name, pairs[i].second);
        files.push_back({{"name", name}, {"seed", split_seed(sc.seed, i)}});
    }
    json manifest;
    manifest["kind"] = "ant";
    manifest["seed"] = ctx.seed;
    manifest["pairs"] = sc.n_pairs;
    manifest["files"] = files;
    io::write_json(ctx.out / "manifest.json", manifest);
}

// --------------------------------------------------------------------------
// fit

void require_fixture(const fs::path& p) {
    if (!fs::exists(p))
        throw std::runtime_error("io error [" + p.string() + "]: missing fixture file");
}

double tap_rmse(const Eigen::VectorXd& est, const std::vector<double>& truth) {
    double acc = 0.0;
    for (int i = 0; i < est.size(); ++i) {
        const double d = est(i) - truth[static_cast<std::size_t>(i)];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(est.size()));
}

void fit_lti_cmd(const CmdContext& ctx) {
    const json& c = ctx.config.at("lti");
    require_fixture(ctx.data / "f.csv");
    require_fixture(ctx.data / "g.csv");
    const Signal f = io::read_signal(ctx.data / "f.csv");
    const Signal g = io::read_signal(ctx.data / "g.csv");
    const int p = c.at("p").get<int>();

    const LtiFit fit = fit_lti({{f, g}}, p, train_config(c.at("train"), ctx.seed));

    io::write_lti_fit(ctx.out / "fit.json", fit);

    const PredictStats pred = posterior_predict(fit, f, 256, split_seed(ctx.seed, 100));
    io::write_signal(ctx.out / "denoised_mean.csv", pred.mean);
    io::write_signal(ctx.out / "denoised_std.csv", pred.stddev);

    const FreqRespStats fr =
        posterior_frequency_response(fit, 128, 512, split_seed(ctx.seed, 101), f.sample_rate);
    {
        json frj;
        frj["frequencies"] = fr.frequencies;
        frj["mag_mean"] = fr.mag_mean;
        frj["mag_lo"] = fr.mag_lo;
        frj["mag_hi"] = fr.mag_hi;
        frj["phase_mean"] = fr.phase_mean;
        frj["phase_std"] = fr.phase_std;
        io::write_json(ctx.out / "freq_response.json", frj);
    }

    json metrics;
    metrics["final_loss"] = fit.final_loss;
    metrics["mean_posterior_std"] = fit.posterior.stddev().mean();
    if (fs::exists(ctx.data / "h_true.json")) {
        const auto truth = io::read_json(ctx.data / "h_true.json").at("taps").get<std::vector<double>>();
        metrics["tap_rmse"] = tap_rmse(fit.posterior.mean, truth);
    }
    io::write_json(ctx.out / "metrics.json", metrics);
}

void fit_ltv_cmd(const CmdContext& ctx) {
    const json& c = ctx.config.at("ltv");
    require_fixture(ctx.data / "f.csv");
    require_fixture(ctx.data / "g.csv");
    const Signal f = io::read_signal(ctx.data / "f.csv");
    const Signal g = io::read_signal(ctx.data / "g.csv");
    const int p = c.at("p").get<int>();
    const int window = c.at("window").get<int>();
    const int stride = c.at("stride").get<int>();

    RbfKernelSpec spec;
    spec.lengthscale = c.at("gp").at("lengthscale").get<double>();
    const double variance = c.at("gp").at("variance").get<double>();
    spec.variance = variance > 0.0 ? variance : 1.0 / static_cast<double>(p);
    spec.jitter = c.at("gp").at("jitter").get<double>();

    const WindowPlan plan = make_window_plan(static_cast<int>(f.size()), window, stride);
    const GPWindowPrior prior = make_window_prior(spec, window, p);

    const auto posteriors = fit_ltv(f, g, p, plan, prior, train_config(c.at("train"), ctx.seed));
    const TimeVaryingIR est = stitch(posteriors, plan, p, f.sample_rate);

    io::write_tvir(ctx.out / "h_est.csv", est);

    json metrics;
    metrics["mean_posterior_std"] = est.tap_std.mean();
    if (fs::exists(ctx.data / "h_true.csv")) {
        const TimeVaryingIR truth = io::read_tvir(ctx.data / "h_true.csv");
        metrics["tap_rmse"] =
            std::sqrt((est.taps - truth.taps).squaredNorm() / static_cast<double>(truth.taps.size()));
    }
    io::write_json(ctx.out / "metrics.json", metrics);
}

std::vector<SignalPair> load_pairs(const fs::path& dir) {
    require_fixture(dir / "manifest.json");
    const json manifest = io::read_json(dir / "manifest.json");
    const int n = manifest.at("pairs").get<int>();
    std::vector<SignalPair> pairs;
    pairs.reserve(static_cast<std::size_t>(n));
    char name[64];
    for (int i = 0; i < n; ++i) {
        std::snprintf(name, sizeof(name), "pair_%04d_a.csv", i);
        require_fixture(dir / name);
        Signal a = io::read_signal(dir / name);
        std::snprintf(name, sizeof(name), "pair_%04d_b.csv", i);
        require_fixture(dir / name);
        Signal b = io::read_signal(dir / name);
        pairs.emplace_back(std::move(a), std::move(b));
    }
    return pairs;
}

void fit_ant_cmd(const CmdContext& ctx) {
    const json& a = ctx.config.at("ant");
    const AntScenario sc = scenario_from(a, ctx.seed);
    const auto pairs = load_pairs(ctx.data);

    const auto freq_grid = linear_grid(a.at("freq_grid"));
    const auto vel_grid = linear_grid(a.at("velocity_grid"));
    const int p = sc.medium_taps;

    const StackResult stack = ccf_stack(pairs, a.at("ccf").at("window_length").get<int>(),
                                        a.at("ccf").at("water_level").get<double>(), p);
    const DispersionFitResult ccf_fit =
        dispersion_fit(ccf_to_fir(stack, p), sc.sample_rate, sc.distance, freq_grid, vel_grid);

    const LtiFit mir = fit_mir(pairs, p, train_config(a.at("train"), ctx.seed));
    Fir mir_ir;
    mir_ir.taps.assign(mir.posterior.mean.data(), mir.posterior.mean.data() + p);
    const DispersionFitResult mir_fit =
        dispersion_fit(mir_ir, sc.sample_rate, sc.distance, freq_grid, vel_grid);

    io::write_lti_fit(ctx.out / "mir_fit.json", mir);
    io::write_misfit_map(ctx.out / "misfit_mir.csv", mir_fit.map);
    io::write_misfit_map(ctx.out / "misfit_ccf.csv", ccf_fit.map);
    {
        json est;
        est["freqs"] = mir_fit.curve.freqs;
        est["mir_velocities"] = mir_fit.curve.velocities;
        est["ccf_velocities"] = ccf_fit.curve.velocities;
        io::write_json(ctx.out / "dispersion_est.json", est);
    }

    json metrics;
    metrics["mir_error"] = velocity_error(mir_fit.curve, sc.dispersion);
    metrics["ccf_error"] = velocity_error(ccf_fit.curve, sc.dispersion);
    metrics["final_loss"] = mir.final_loss;
    metrics["mean_posterior_std"] = mir.posterior.stddev().mean();
    io::write_json(ctx.out / "metrics.json", metrics);
}

// --------------------------------------------------------------------------
// compare (ant error-vs-pairs sweep)

void compare_cmd(const CmdContext& ctx, bool quantize) {
    const json& a = ctx.config.at("ant");
    AntScenario sc = scenario_from(a, ctx.seed);
    AntSweepConfig sweep;
    sweep.ccf_window_length = a.at("ccf").at("window_length").get<int>();
    sweep.water_level = a.at("ccf").at("water_level").get<double>();
    sweep.train = train_config(a.at("train"), split_seed(ctx.seed, 999));
    sweep.freq_grid = linear_grid(a.at("freq_grid"));
    sweep.velocity_grid = linear_grid(a.at("velocity_grid"));
    const auto counts = a.at("pair_counts").get<std::vector<int>>();

    const auto rows = sweep_pairs(sc, counts, quantize, sweep);
    io::write_sweep_csv(ctx.out / (quantize ? "sweep_1bit.csv" : "sweep.csv"), rows, ctx.seed);
}

// --------------------------------------------------------------------------
// plotdata

void write_series(const fs::path& path, const std::vector<double>& x,
                  const std::vector<double>& y, const std::vector<double>* ylo,
                  const std::vector<double>* yhi) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("io error [" + path.string() + "]: cannot open");
    out << (ylo ? "x,y,ylo,yhi\n" : "x,y\n");
    for (std::size_t i = 0; i < x.size(); ++i) {
        out << io::format_double(x[i]) << "," << io::format_double(y[i]);
        if (ylo) out << "," << io::format_double((*ylo)[i]) << "," << io::format_double((*yhi)[i]);
        out << "\n";
    }
}

void plotdata_cmd(const CmdContext& ctx) {
    ensure_out(ctx);
    bool produced = false;
    if (fs::exists(ctx.data / "fit.json")) {
        const LtiFit fit = io::read_lti_fit(ctx.data / "fit.json");
        std::vector<double> x, y, ylo, yhi;
        const Eigen::VectorXd std = fit.posterior.stddev();
        for (int i = 0; i < fit.p; ++i) {
            x.push_back(static_cast<double>(i + 1));
            y.push_back(fit.posterior.mean(i));
            ylo.push_back(fit.posterior.mean(i) - 2.0 * std(i));
            yhi.push_back(fit.posterior.mean(i) + 2.0 * std(i));
        }
        write_series(ctx.out / "ir_posterior.csv", x, y, &ylo, &yhi);
        produced = true;
    }
    if (fs::exists(ctx.data / "freq_response.json")) {
        const json fr = io::read_json(ctx.data / "freq_response.json");
        const auto freqs = fr.at("frequencies").get<std::vector<double>>();
        const auto mm = fr.at("mag_mean").get<std::vector<double>>();
        const auto ml = fr.at("mag_lo").get<std::vector<double>>();
        const auto mh = fr.at("mag_hi").get<std::vector<double>>();
        write_series(ctx.out / "freq_magnitude.csv", freqs, mm, &ml, &mh);
        const auto pm = fr.at("phase_mean").get<std::vector<double>>();
        const auto ps = fr.at("phase_std").get<std::vector<double>>();
        std::vector<double> plo(pm.size()), phi(pm.size());
        for (std::size_t i = 0; i < pm.size(); ++i) {
            plo[i] = pm[i] - 2.0 * ps[i];
            phi[i] = pm[i] + 2.0 * ps[i];
        }
        write_series(ctx.out / "freq_phase.csv", freqs, pm, &plo, &phi);
        produced = true;
    }
    for (const char* name : {"sweep.csv", "sweep_1bit.csv"}) {
        if (!fs::exists(ctx.data / name)) continue;
        std::ifstream in(ctx.data / name);
        std::string line;
        std::getline(in, line); // header
        std::vector<double> x, mir, ccf;
        while (std::getline(in, line)) {
            double pc, me, ce;
            unsigned long long seed;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%llu", &pc, &me, &ce, &seed) == 4) {
                x.push_back(pc);
                mir.push_back(me);
                ccf.push_back(ce);
            }
        }
        const std::string stem = fs::path(name).stem().string();
        write_series(ctx.out / (stem + "_mir.csv"), x, mir, nullptr, nullptr);
        write_series(ctx.out / (stem + "_ccf.csv"), x, ccf, nullptr, nullptr);
        produced = true;
    }
    for (const char* name : {"misfit_mir.csv", "misfit_ccf.csv"}) {
        if (!fs::exists(ctx.data / name)) continue;
        // pass-through with normalized header marker
        std::ifstream in(ctx.data / name);
        std::ofstream out(ctx.out / name);
        out << "# misfit map: rows=freqs, cols=velocities\n";
        out << in.rdbuf();
        produced = true;
    }
    if (fs::exists(ctx.data / "h_est.csv")) {
        const TimeVaryingIR est = io::read_tvir(ctx.data / "h_est.csv");
        std::vector<double> x(static_cast<std::size_t>(est.length()));
        for (int i = 0; i < est.length(); ++i) x[static_cast<std::size_t>(i)] = i;
        for (int k = 0; k < est.order(); ++k) {
            std::vector<double> y(static_cast<std::size_t>(est.length()));
            for (int i = 0; i < est.length(); ++i) y[static_cast<std::size_t>(i)] = est.taps(i, k);
            char name[64];
            std::snprintf(name, sizeof(name), "tap_%02d.csv", k + 1);
            write_series(ctx.out / name, x, y, nullptr, nullptr);
        }
        produced = true;
    }
    if (!produced)
        throw std::runtime_error("io error [" + ctx.data.string() +
                                 "]: no recognized result files");
}

// --------------------------------------------------------------------------
// selftest: condensed Monte Carlo oracle checks

int selftest_cmd(std::uint64_t seed) {
    int failures = 0;
    const auto report = [&](const char* name, bool ok) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
        if (!ok) ++failures;
    };

    { // output-variance quadratic form vs sampling
        Rng rng(split_seed(seed, 1));
        int hits = 0;
        const int trials = 5;
        for (int trial = 0; trial < trials; ++trial) {
            const int p = 4 + trial;
            Eigen::MatrixXd A(p, p);
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) A(i, j) = rng.normal();
            PosteriorIR post;
            post.mean = Eigen::VectorXd::Zero(p);
            post.cov = A * A.transpose() / p;
            Signal f;
            f.sample_rate = 1.0;
            for (int i = 0; i < 32; ++i) f.samples.push_back(rng.normal());
            const Signal var = output_variance(f, post);
            const int n_check = 20;
            const Eigen::MatrixXd L = post.chol();
            const int n_samples = 20000;
            double mc_acc = 0.0, mc_acc2 = 0.0;
            for (int s = 0; s < n_samples; ++s) {
                Eigen::VectorXd z(p);
                for (int i = 0; i < p; ++i) z(i) = rng.normal();
                const Eigen::VectorXd h = post.mean + L * z;
                double gm = 0.0;
                for (int j = 0; j < p && j < n_check; ++j)
                    gm += h(j) * f.samples[static_cast<std::size_t>(n_check - 1 - j)];
                mc_acc += gm;
                mc_acc2 += gm * gm;
            }
            const double mc_mean = mc_acc / n_samples;
            const double mc_var = mc_acc2 / n_samples - mc_mean * mc_mean;
            const double se = mc_var * std::sqrt(2.0 / (n_samples - 1));
            if (std::abs(mc_var - var.samples[n_check]) <= 3.0 * se) ++hits;
        }
        report("output variance quadratic form vs Monte Carlo", hits >= trials - 1);
    }

    { // KL nonnegativity and zero at the prior
        Rng rng(split_seed(seed, 2));
        bool ok = true;
        for (int trial = 0; trial < 200; ++trial) {
            const int d = 1 + static_cast<int>(rng.uniform(0.0, 8.0));
            DiagGaussian q;
            q.mean.resize(d);
            q.log_std.resize(d);
            for (int i = 0; i < d; ++i) {
                q.mean(i) = rng.normal();
                q.log_std(i) = rng.uniform(-2.0, 1.0);
            }
            const IsotropicPrior prior{std::exp(rng.uniform(-1.0, 1.0)), d};
            if (kl_to_isotropic(q, prior) < -1e-9) ok = false;
        }
        DiagGaussian q0;
        q0.mean = Eigen::VectorXd::Zero(3);
        q0.log_std = Eigen::VectorXd::Constant(3, std::log(0.7));
        ok = ok && std::abs(kl_to_isotropic(q0, IsotropicPrior{0.7, 3})) < 1e-12;
        report("KL nonnegativity", ok);
    }

    { // analytic gradients vs finite differences
        Rng rng(split_seed(seed, 3));
        Signal f;
        f.sample_rate = 1.0;
        for (int i = 0; i < 64; ++i) f.samples.push_back(rng.normal());
        Fir h;
        for (int i = 0; i < 8; ++i) h.taps.push_back(rng.normal());
        const Signal g = convolve(f, h);
        DiagGaussian q = DiagGaussian::zeros(8, -1.0);
        for (int i = 0; i < 8; ++i) q.mean(i) = 0.3 * rng.normal();
        TrainConfig cfg;
        cfg.batch_replicas = 4;
        Eigen::MatrixXd noise(4, 8);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 8; ++j) noise(i, j) = rng.normal();
        const IsotropicPrior prior{1.0 / std::sqrt(8.0), 8};
        const ElboResult base = elbo_and_grads(f, g, q, prior, cfg, &noise);
        bool ok = true;
        const double eps = 1e-5;
        for (int j = 0; j < 8; ++j) {
            DiagGaussian qp = q, qm = q;
            qp.mean(j) += eps;
            qm.mean(j) -= eps;
            const double fd = (elbo_and_grads(f, g, qp, prior, cfg, &noise).loss -
                               elbo_and_grads(f, g, qm, prior, cfg, &noise).loss) /
                              (2.0 * eps);
            if (std::abs(fd - base.grad_mean(j)) > 1e-4 * std::max(1.0, std::abs(fd))) ok = false;
        }
        report("ELBO gradients vs finite differences", ok);
    }

    { // GP Gram reconstruction
        RbfKernelSpec spec;
        spec.lengthscale = 3.0;
        spec.variance = 0.5;
        const GramFactor gf = rbf_gram(spec, 16);
        const Eigen::MatrixXd recon =
            gf.chol_lower * gf.chol_lower.transpose();
        report("RBF Gram Cholesky reconstruction",
               (recon - gf.gram).norm() < 1e-8 * gf.gram.norm() + 1e-10);
    }

    { // Bessel branch agreement near the switch point
        bool ok = true;
        for (double x : {11.5, 11.9, 12.0, 12.1, 12.5}) {
            double series = 1.0, term = 1.0;
            const double qq = -x * x / 4.0;
            for (int m = 1; m <= 80; ++m) {
                term *= qq / (static_cast<double>(m) * static_cast<double>(m));
                series += term;
            }
            if (std::abs(series - bessel_j0(x)) > 1e-9) ok = false;
        }
        report("Bessel J0 series/asymptotic agreement", ok);
    }

    return failures == 0 ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian impulse response estimation toolkit"};
    app.require_subcommand(1);

    std::string kind = "lti";
    std::string out_dir = "out";
    std::string data_dir;
    std::string config_path;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;
    std::vector<std::string> overrides;
    bool quantize = false;
    int pairs_override = -1;

    const auto add_common = [&](CLI::App* cmd, bool needs_data) {
        cmd->add_option("--seed", seed_flag, "root random seed")->each([&](const std::string&) {
            seed_set = true;
        });
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--set", overrides, "config override path.to.field=value");
        if (needs_data) cmd->add_option("--data", data_dir, "fixture/result directory")->required();
    };

    CLI::App* gen = app.add_subcommand("gen", "generate experiment fixtures");
    gen->add_option("--kind", kind, "lti | ltv | ant");
    gen->add_option("--pairs", pairs_override, "override ant pair count");
    add_common(gen, false);

    CLI::App* fit = app.add_subcommand("fit", "fit a model to generated fixtures");
    fit->add_option("--kind", kind, "lti | ltv | ant");
    add_common(fit, true);

    CLI::App* compare = app.add_subcommand("compare", "ANT error-vs-pairs sweep");
    compare->add_flag("--quantize", quantize, "apply 1-bit quantization first");
    add_common(compare, false);

    CLI::App* plotdata = app.add_subcommand("plotdata", "emit tidy plot CSVs from results");
    add_common(plotdata, true);

    CLI::App* selftest = app.add_subcommand("selftest", "run the Monte Carlo oracle suite");
    selftest->add_option("--seed", seed_flag, "root random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        CmdContext ctx;
        ctx.config = default_config();
        if (!config_path.empty()) {
            ctx.config.merge_patch(io::read_json(config_path));
        }
        for (const auto& o : overrides) apply_override(ctx.config, o);
        ctx.seed = seed_set ? seed_flag : ctx.config.at("seed").get<std::uint64_t>();
        ctx.out = out_dir;
        ctx.data = data_dir;
        if (pairs_override > 0) ctx.config["ant"]["pairs"] = pairs_override;

        if (gen->parsed()) {
            ensure_out(ctx);
            if (kind == "lti")
                gen_lti(ctx);
            else if (kind == "ltv")
                gen_ltv(ctx);
            else if (kind == "ant")
                gen_ant(ctx);
            else
                throw std::invalid_argument("gen: unknown kind '" + kind + "'");
        } else if (fit->parsed()) {
            ensure_out(ctx);
            if (kind == "lti")
                fit_lti_cmd(ctx);
            else if (kind == "ltv")
                fit_ltv_cmd(ctx);
            else if (kind == "ant")
                fit_ant_cmd(ctx);
            else
                throw std::invalid_argument("fit: unknown kind '" + kind + "'");
        } else if (compare->parsed()) {
            ensure_out(ctx);
            compare_cmd(ctx, quantize);
        } else if (plotdata->parsed()) {
            plotdata_cmd(ctx);
        } else if (selftest->parsed()) {
            return selftest_cmd(seed_flag == 0 ? 7 : seed_flag);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        if (what.rfind("io error", 0) == 0) {
            std::cerr << what << "\n";
            return 4;
        }
        std::cerr << "numerical failure: " << what << "\n";
        return 3;
    }
    return 0;
}
