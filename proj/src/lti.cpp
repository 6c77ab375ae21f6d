#include "bltv/lti.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bltv {

LtiFit fit_lti(const std::vector<SignalPair>& pairs, int p, TrainConfig cfg) {
    if (pairs.empty())
        throw std::invalid_argument("fit_lti: need at least one signal pair");
    if (p < 1)
        throw std::invalid_argument("fit_lti: p must be >= 1");
    for (const auto& [f, g] : pairs) {
        f.validate();
        g.validate();
        if (f.size() != g.size())
            throw std::invalid_argument("fit_lti: pair signals must have equal length");
        if (mean_power(f) <= 0.0)
            throw std::invalid_argument("fit_lti: input signal has zero power");
    }

    const IsotropicPrior prior{1.0 / std::sqrt(static_cast<double>(p)), p};
    const int replicas = cfg.batch_replicas;
    const double beta = cfg.beta();

    // Precompute per-pair designs and output vectors once.
    std::vector<Eigen::MatrixXd> designs;
    std::vector<Eigen::VectorXd> outputs;
    designs.reserve(pairs.size());
    outputs.reserve(pairs.size());
    for (const auto& [f, g] : pairs) {
        designs.push_back(convolution_design(f, p));
        outputs.emplace_back(
            Eigen::Map<const Eigen::VectorXd>(g.samples.data(), static_cast<long>(g.size())));
    }

    Objective objective = [&](const DiagGaussian& q, int /*step*/, Rng& rng) -> ElboResult {
        const Eigen::VectorXd std = q.stddev();
        Eigen::MatrixXd noise(replicas, p);
        for (int i = 0; i < replicas; ++i)
            for (int j = 0; j < p; ++j) noise(i, j) = rng.normal();

        Eigen::MatrixXd H = (noise.array().rowwise() * std.transpose().array()).transpose();
        H.colwise() += q.mean;

        double recon = 0.0;
        Eigen::VectorXd grad_mean = Eigen::VectorXd::Zero(p);
        Eigen::VectorXd grad_log_std_raw = Eigen::VectorXd::Zero(p);
        for (std::size_t i = 0; i < designs.size(); ++i) {
            Eigen::MatrixXd residual = (-(designs[i] * H)).colwise() + outputs[i];
            recon += residual.squaredNorm() / static_cast<double>(replicas);
            Eigen::MatrixXd per_sample = -2.0 * (designs[i].transpose() * residual);
            grad_mean += per_sample.rowwise().mean();
            grad_log_std_raw +=
                (per_sample.array() * noise.transpose().array()).rowwise().mean().matrix();
        }

        const double kl = kl_to_isotropic(q, prior);
        Eigen::VectorXd kl_gm, kl_gls;
        kl_to_isotropic_grads(q, prior, kl_gm, kl_gls);

        ElboResult e;
        e.loss = recon + beta * kl;
        e.grad_mean = grad_mean + beta * kl_gm;
        e.grad_log_std = grad_log_std_raw.cwiseProduct(std) + beta * kl_gls;
        return e;
    };

    ViFitResult vi = adam_cosine_fit(objective, DiagGaussian::zeros(p), cfg);

    LtiFit fit;
    fit.p = p;
    fit.posterior = std::move(vi.q);
    fit.trace = std::move(vi.trace);
    fit.config = cfg;
    fit.final_loss = fit.trace.back();
    return fit;
}

Fir least_squares_fir(const Signal& f, const Signal& g, int p, double ridge) {
    f.validate();
    g.validate();
    if (f.size() != g.size())
        throw std::invalid_argument("least_squares_fir: signal lengths differ");
    const Eigen::MatrixXd design = convolution_design(f, p);
    Eigen::MatrixXd gram = design.transpose() * design;
    gram.diagonal().array() += ridge;
    const Eigen::Map<const Eigen::VectorXd> gv(g.samples.data(), static_cast<long>(g.size()));
    const Eigen::VectorXd sol = gram.ldlt().solve(design.transpose() * gv);
    Fir h;
    h.taps.assign(sol.data(), sol.data() + sol.size());
    return h;
}

PredictStats posterior_predict(const LtiFit& fit, const Signal& f, int n_samples,
                               std::uint64_t seed, int keep_samples) {
    if (n_samples < 1)
        throw std::invalid_argument("posterior_predict: n_samples must be >= 1");
    f.validate();
    const Eigen::MatrixXd design = convolution_design(f, fit.p);
    const Eigen::MatrixXd H = sample(fit.posterior, n_samples, seed); // n x p

    const long n = static_cast<long>(f.size());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd acc2 = Eigen::VectorXd::Zero(n);
    PredictStats out;
    out.samples.reserve(static_cast<std::size_t>(std::min(keep_samples, n_samples)));
    for (int i = 0; i < n_samples; ++i) {
        const Eigen::VectorXd pred = design * H.row(i).transpose();
        acc += pred;
        acc2 += pred.cwiseProduct(pred);
        if (i < keep_samples) {
            Signal s;
            s.sample_rate = f.sample_rate;
            s.samples.assign(pred.data(), pred.data() + pred.size());
            out.samples.push_back(std::move(s));
        }
    }
    acc /= static_cast<double>(n_samples);
    acc2 = (acc2 / static_cast<double>(n_samples)) - acc.cwiseProduct(acc);
    out.mean.sample_rate = f.sample_rate;
    out.mean.samples.assign(acc.data(), acc.data() + acc.size());
    out.stddev.sample_rate = f.sample_rate;
    out.stddev.samples.resize(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i)
        out.stddev.samples[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, acc2(i)));
    return out;
}

CcfStats posterior_ccf(const LtiFit& fit, const Signal& f, int max_lag, int n_samples,
                       std::uint64_t seed, int keep_samples) {
    if (n_samples < 1)
        throw std::invalid_argument("posterior_ccf: n_samples must be >= 1");
    // acf on an extended range so that (f x f) * h covers [-max_lag, max_lag]
    const LagSeries acf = cross_correlate(f, f, max_lag + fit.p);
    const Eigen::MatrixXd H = sample(fit.posterior, n_samples, seed);

    const int m = 2 * max_lag + 1;
    std::vector<double> acc(static_cast<std::size_t>(m), 0.0);
    std::vector<double> acc2(static_cast<std::size_t>(m), 0.0);
    CcfStats out;
    out.max_lag = max_lag;
    out.samples.reserve(static_cast<std::size_t>(std::min(keep_samples, n_samples)));
    std::vector<double> cur(static_cast<std::size_t>(m));
    for (int i = 0; i < n_samples; ++i) {
        for (int lag = -max_lag; lag <= max_lag; ++lag) {
            double v = 0.0;
            for (int j = 0; j < fit.p; ++j)
                v += H(i, j) * acf(lag - 1 - j);
            cur[static_cast<std::size_t>(lag + max_lag)] = v;
        }
        for (int j = 0; j < m; ++j) {
            acc[static_cast<std::size_t>(j)] += cur[static_cast<std::size_t>(j)];
            acc2[static_cast<std::size_t>(j)] += cur[static_cast<std::size_t>(j)] * cur[static_cast<std::size_t>(j)];
        }
        if (i < keep_samples) out.samples.push_back(cur);
    }
    out.mean.resize(static_cast<std::size_t>(m));
    out.stddev.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const double mu = acc[static_cast<std::size_t>(j)] / n_samples;
        const double var = acc2[static_cast<std::size_t>(j)] / n_samples - mu * mu;
        out.mean[static_cast<std::size_t>(j)] = mu;
        out.stddev[static_cast<std::size_t>(j)] = std::sqrt(std::max(0.0, var));
    }
    return out;
}

FreqRespStats posterior_frequency_response(const LtiFit& fit, int n_freqs, int n_samples,
                                           std::uint64_t seed, double sample_rate) {
    if (n_samples < 1)
        throw std::invalid_argument("posterior_frequency_response: n_samples must be >= 1");
    const Eigen::MatrixXd H = sample(fit.posterior, n_samples, seed);

    FreqRespStats out;
    std::vector<std::vector<double>> mags(static_cast<std::size_t>(n_freqs),
                                          std::vector<double>(static_cast<std::size_t>(n_samples)));
    std::vector<std::vector<double>> phases = mags;
    for (int i = 0; i < n_samples; ++i) {
        Fir h;
        h.taps.resize(static_cast<std::size_t>(fit.p));
        for (int j = 0; j < fit.p; ++j) h.taps[static_cast<std::size_t>(j)] = H(i, j);
        const Spectrum s = frequency_response(h, n_freqs, sample_rate);
        if (i == 0) out.frequencies = s.frequencies;
        for (int k = 0; k < n_freqs; ++k) {
            mags[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = std::abs(s.values[static_cast<std::size_t>(k)]);
            phases[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = std::arg(s.values[static_cast<std::size_t>(k)]);
        }
    }

    const auto stats = [](std::vector<double>& v, double& mean, double& sd, double* lo, double* hi) {
        double acc = 0.0, acc2 = 0.0;
        for (double x : v) { acc += x; acc2 += x * x; }
        mean = acc / static_cast<double>(v.size());
        sd = std::sqrt(std::max(0.0, acc2 / static_cast<double>(v.size()) - mean * mean));
        if (lo && hi) {
            std::sort(v.begin(), v.end());
            const auto pick = [&](double q) {
                const double pos = q * static_cast<double>(v.size() - 1);
                const std::size_t i0 = static_cast<std::size_t>(pos);
                const std::size_t i1 = std::min(i0 + 1, v.size() - 1);
                const double w = pos - static_cast<double>(i0);
                return v[i0] * (1.0 - w) + v[i1] * w;
            };
            *lo = pick(0.025);
            *hi = pick(0.975);
        }
    };

    out.mag_mean.resize(static_cast<std::size_t>(n_freqs));
    out.mag_std.resize(static_cast<std::size_t>(n_freqs));
    out.mag_lo.resize(static_cast<std::size_t>(n_freqs));
    out.mag_hi.resize(static_cast<std::size_t>(n_freqs));
    out.phase_mean.resize(static_cast<std::size_t>(n_freqs));
    out.phase_std.resize(static_cast<std::size_t>(n_freqs));
    for (int k = 0; k < n_freqs; ++k) {
        stats(mags[static_cast<std::size_t>(k)], out.mag_mean[static_cast<std::size_t>(k)],
              out.mag_std[static_cast<std::size_t>(k)], &out.mag_lo[static_cast<std::size_t>(k)],
              &out.mag_hi[static_cast<std::size_t>(k)]);
        stats(phases[static_cast<std::size_t>(k)], out.phase_mean[static_cast<std::size_t>(k)],
              out.phase_std[static_cast<std::size_t>(k)], nullptr, nullptr);
    }
    return out;
}

} // namespace bltv
