#include "bltv/stochastic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bltv {

namespace {

constexpr double kPsdJitter = 1e-10;

Eigen::MatrixXd chol_with_jitter(const Eigen::MatrixXd& cov, const char* what) {
    if (cov.rows() != cov.cols())
        throw std::invalid_argument(std::string(what) + ": covariance must be square");
    if (!cov.isApprox(cov.transpose(), 1e-9))
        throw std::invalid_argument(std::string(what) + ": covariance must be symmetric");
    Eigen::MatrixXd jittered = cov;
    jittered.diagonal().array() += kPsdJitter;
    Eigen::LLT<Eigen::MatrixXd> llt(jittered);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument(std::string(what) + ": covariance is not PSD");
    return llt.matrixL();
}

// f[n] = (f[n-1], ..., f[n-p]), zero-padded below index 0
Eigen::VectorXd lag_vector(const Signal& f, int n, int p) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < p; ++j) {
        const int idx = n - 1 - j;
        if (idx >= 0 && idx < static_cast<int>(f.size()))
            v(j) = f.samples[static_cast<std::size_t>(idx)];
    }
    return v;
}

} // namespace

PosteriorIR PosteriorIR::diagonal(const Eigen::VectorXd& mean, const Eigen::VectorXd& var) {
    PosteriorIR p;
    p.mean = mean;
    p.cov = var.asDiagonal();
    return p;
}

void PosteriorIR::validate() const {
    if (mean.size() == 0)
        throw std::invalid_argument("PosteriorIR: empty mean");
    if (!mean.allFinite())
        throw std::invalid_argument("PosteriorIR: non-finite mean");
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
        throw std::invalid_argument("PosteriorIR: covariance dimension mismatch");
    (void)chol_with_jitter(cov, "PosteriorIR");
}

Eigen::MatrixXd PosteriorIR::chol() const { return chol_with_jitter(cov, "PosteriorIR"); }

CrossTimeCov CrossTimeCov::white(std::vector<Eigen::MatrixXd> per_time) {
    if (per_time.empty())
        throw std::invalid_argument("CrossTimeCov: need at least one covariance");
    CrossTimeCov c;
    c.n_times_ = static_cast<int>(per_time.size());
    c.taps_ = static_cast<int>(per_time.front().rows());
    for (const auto& s : per_time)
        if (s.rows() != c.taps_ || s.cols() != c.taps_)
            throw std::invalid_argument("CrossTimeCov: inconsistent tap dimension");
    c.per_time_ = std::move(per_time);
    return c;
}

CrossTimeCov CrossTimeCov::dense(Eigen::MatrixXd full, int n_times, int taps) {
    if (full.rows() != static_cast<long>(n_times) * taps || full.cols() != full.rows())
        throw std::invalid_argument("CrossTimeCov: dense matrix must be (n*p) x (n*p)");
    if (static_cast<long>(n_times) * taps > 4096)
        throw std::invalid_argument("CrossTimeCov: dense representation limited to n*p <= 4096");
    CrossTimeCov c;
    c.n_times_ = n_times;
    c.taps_ = taps;
    c.dense_ = std::move(full);
    return c;
}

double CrossTimeCov::operator()(int n, int m, int k, int l) const {
    if (n < 0 || n >= n_times_ || m < 0 || m >= n_times_)
        throw std::out_of_range("CrossTimeCov: time index out of range");
    if (k < 0 || k >= taps_ || l < 0 || l >= taps_)
        throw std::out_of_range("CrossTimeCov: tap index out of range");
    if (is_white())
        return n == m ? per_time_[static_cast<std::size_t>(n)](k, l) : 0.0;
    return dense_(static_cast<long>(n) * taps_ + k, static_cast<long>(m) * taps_ + l);
}

const Eigen::MatrixXd& CrossTimeCov::sigma_at(int n) const {
    if (!is_white())
        throw std::logic_error("CrossTimeCov: sigma_at only valid for white-in-time");
    return per_time_.at(static_cast<std::size_t>(n));
}

Signal expected_output(const Signal& f, const PosteriorIR& post) {
    Fir h;
    h.taps.assign(post.mean.data(), post.mean.data() + post.mean.size());
    return convolve(f, h);
}

Signal expected_output(const Signal& f, const std::vector<PosteriorIR>& per_time) {
    if (per_time.size() != f.size())
        throw std::invalid_argument("expected_output: one posterior per sample required");
    const int p = per_time.front().order();
    TimeVaryingIR H;
    H.sample_rate = f.sample_rate;
    H.taps.resize(static_cast<long>(per_time.size()), p);
    for (std::size_t n = 0; n < per_time.size(); ++n)
        H.taps.row(static_cast<long>(n)) = per_time[n].mean.transpose();
    return convolve_ltv(f, H);
}

Signal output_variance(const Signal& f, const PosteriorIR& post) {
    f.validate();
    post.validate();
    const int p = post.order();
    Signal out;
    out.sample_rate = f.sample_rate;
    out.samples.resize(f.size());
    for (int n = 0; n < static_cast<int>(f.size()); ++n) {
        const Eigen::VectorXd v = lag_vector(f, n, p);
        out.samples[static_cast<std::size_t>(n)] = v.dot(post.cov * v);
    }
    return out;
}

Signal output_variance(const Signal& f, const std::vector<PosteriorIR>& per_time) {
    f.validate();
    if (per_time.size() != f.size())
        throw std::invalid_argument("output_variance: one posterior per sample required");
    Signal out;
    out.sample_rate = f.sample_rate;
    out.samples.resize(f.size());
    for (int n = 0; n < static_cast<int>(f.size()); ++n) {
        const PosteriorIR& post = per_time[static_cast<std::size_t>(n)];
        post.validate();
        const Eigen::VectorXd v = lag_vector(f, n, post.order());
        out.samples[static_cast<std::size_t>(n)] = v.dot(post.cov * v);
    }
    return out;
}

double output_covariance(const Signal& f, const CrossTimeCov& cov, int n, int m) {
    f.validate();
    if (n < 0 || n >= cov.n_times() || m < 0 || m >= cov.n_times())
        throw std::out_of_range("output_covariance: time index out of range");
    const int p = cov.taps();
    if (cov.is_white() && n != m) return 0.0;
    double acc = 0.0;
    for (int k = 0; k < p; ++k) {
        const int fn = n - 1 - k;
        if (fn < 0 || fn >= static_cast<int>(f.size())) continue;
        for (int l = 0; l < p; ++l) {
            const int fm = m - 1 - l;
            if (fm < 0 || fm >= static_cast<int>(f.size())) continue;
            acc += f.samples[static_cast<std::size_t>(fn)] * f.samples[static_cast<std::size_t>(fm)] *
                   cov(n, m, k, l);
        }
    }
    return acc;
}

Spectrum fluctuation_spectrum(const Eigen::MatrixXd& cov, int n_freqs, double sample_rate) {
    if (cov.rows() != cov.cols() || cov.rows() == 0)
        throw std::invalid_argument("fluctuation_spectrum: covariance must be square");
    if (n_freqs < 2)
        throw std::invalid_argument("fluctuation_spectrum: n_freqs must be >= 2");
    const int p = static_cast<int>(cov.rows());
    // tap-lag autocovariance: r[d] = sum_k cov(k, k+d)
    std::vector<double> r(static_cast<std::size_t>(p), 0.0);
    for (int d = 0; d < p; ++d)
        for (int k = 0; k + d < p; ++k)
            r[static_cast<std::size_t>(d)] += cov(k, k + d);
    Spectrum s;
    s.frequencies.resize(static_cast<std::size_t>(n_freqs));
    s.values.resize(static_cast<std::size_t>(n_freqs));
    for (int i = 0; i < n_freqs; ++i) {
        const double omega = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_freqs - 1);
        double acc = r[0];
        for (int d = 1; d < p; ++d)
            acc += 2.0 * r[static_cast<std::size_t>(d)] * std::cos(omega * d);
        s.frequencies[static_cast<std::size_t>(i)] =
            omega * sample_rate / (2.0 * std::numbers::pi);
        s.values[static_cast<std::size_t>(i)] = acc;
    }
    return s;
}

Spectrum ltie_psd(const Spectrum& input_psd, const Spectrum& mean_fr, const Spectrum& fluct_psd) {
    if (input_psd.size() != mean_fr.size() || input_psd.size() != fluct_psd.size())
        throw std::invalid_argument("ltie_psd: spectra must share one frequency grid");
    for (std::size_t i = 0; i < input_psd.size(); ++i) {
        const double df = std::abs(input_psd.frequencies[i] - mean_fr.frequencies[i]) +
                          std::abs(input_psd.frequencies[i] - fluct_psd.frequencies[i]);
        if (df > 1e-9)
            throw std::invalid_argument("ltie_psd: frequency grids differ");
    }
    Spectrum out;
    out.frequencies = input_psd.frequencies;
    out.values.resize(input_psd.size());
    for (std::size_t i = 0; i < input_psd.size(); ++i) {
        const double sin = input_psd.values[i].real();
        const double mag2 = std::norm(mean_fr.values[i]);
        const double se = fluct_psd.values[i].real();
        out.values[i] = sin * (mag2 + se);
    }
    return out;
}

} // namespace bltv
