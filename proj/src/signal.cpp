#include "bltv/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bltv/rng.hpp"

namespace bltv {

void Signal::validate() const {
    if (samples.empty())
        throw std::invalid_argument("Signal: empty sample vector");
    if (!(sample_rate > 0.0))
        throw std::invalid_argument("Signal: sample_rate must be positive");
    for (double v : samples)
        if (!std::isfinite(v))
            throw std::invalid_argument("Signal: non-finite sample");
}

void Fir::validate() const {
    if (taps.empty())
        throw std::invalid_argument("Fir: empty tap vector");
    for (double v : taps)
        if (!std::isfinite(v))
            throw std::invalid_argument("Fir: non-finite tap");
}

double mean_power(const Signal& x) {
    double acc = 0.0;
    for (double v : x.samples) acc += v * v;
    return x.samples.empty() ? 0.0 : acc / static_cast<double>(x.samples.size());
}

namespace fft {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// iterative radix-2 Cooley-Tukey; length must be a power of two
static void transform(std::vector<std::complex<double>>& a, bool invert) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft: length must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (invert ? 1.0 : -1.0);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (invert) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& v : a) v *= inv_n;
    }
}

void forward(std::vector<std::complex<double>>& a) { transform(a, false); }
void inverse(std::vector<std::complex<double>>& a) { transform(a, true); }

} // namespace fft

Signal convolve(const Signal& f, const Fir& h) {
    f.validate();
    h.validate();
    const int n = static_cast<int>(f.size());
    const int p = h.order();
    Signal out;
    out.sample_rate = f.sample_rate;
    out.samples.assign(static_cast<std::size_t>(n), 0.0);
    // taps[j] is h_{j+1}: delay j+1 samples
    for (int nn = 0; nn < n; ++nn) {
        double acc = 0.0;
        const int kmax = std::min(p, nn);
        for (int j = 0; j < kmax; ++j)
            acc += h.taps[static_cast<std::size_t>(j)] * f.samples[static_cast<std::size_t>(nn - 1 - j)];
        out.samples[static_cast<std::size_t>(nn)] = acc;
    }
    return out;
}

Signal convolve_ltv(const Signal& f, const TimeVaryingIR& H) {
    f.validate();
    const int n = static_cast<int>(f.size());
    if (H.length() != n)
        throw std::invalid_argument("convolve_ltv: tap row count must equal signal length");
    const int p = H.order();
    Signal out;
    out.sample_rate = f.sample_rate;
    out.samples.assign(static_cast<std::size_t>(n), 0.0);
    for (int nn = 0; nn < n; ++nn) {
        double acc = 0.0;
        const int kmax = std::min(p, nn);
        for (int j = 0; j < kmax; ++j)
            acc += H.taps(nn, j) * f.samples[static_cast<std::size_t>(nn - 1 - j)];
        out.samples[static_cast<std::size_t>(nn)] = acc;
    }
    return out;
}

LagSeries cross_correlate(const Signal& f, const Signal& g, int max_lag) {
    f.validate();
    g.validate();
    if (f.sample_rate != g.sample_rate)
        throw std::invalid_argument("cross_correlate: sample rates differ");
    if (max_lag < 0 || static_cast<std::size_t>(max_lag) >= f.size() ||
        static_cast<std::size_t>(max_lag) >= g.size())
        throw std::invalid_argument("cross_correlate: max_lag must be below the signal length");

    const std::size_t nf = f.size();
    const std::size_t ng = g.size();
    LagSeries out;
    out.max_lag = max_lag;
    out.values.assign(static_cast<std::size_t>(2 * max_lag + 1), 0.0);

    if (nf * ng <= 1u << 14) {
        // direct summation for short inputs
        for (int lag = -max_lag; lag <= max_lag; ++lag) {
            double acc = 0.0;
            for (std::size_t n = 0; n < nf; ++n) {
                const long long m = static_cast<long long>(n) + lag;
                if (m >= 0 && m < static_cast<long long>(ng))
                    acc += f.samples[n] * g.samples[static_cast<std::size_t>(m)];
            }
            out(lag) = acc;
        }
        return out;
    }

    const std::size_t nfft = fft::next_pow2(nf + ng);
    std::vector<std::complex<double>> F(nfft), G(nfft);
    for (std::size_t i = 0; i < nf; ++i) F[i] = f.samples[i];
    for (std::size_t i = 0; i < ng; ++i) G[i] = g.samples[i];
    fft::forward(F);
    fft::forward(G);
    for (std::size_t i = 0; i < nfft; ++i) F[i] = std::conj(F[i]) * G[i];
    fft::inverse(F);
    // c[l] lives at index l mod nfft
    for (int lag = -max_lag; lag <= max_lag; ++lag) {
        const std::size_t idx = static_cast<std::size_t>((lag + static_cast<long long>(nfft)) % static_cast<long long>(nfft));
        out(lag) = F[idx].real();
    }
    return out;
}

Spectrum power_spectrum(const Signal& x, int segment_length) {
    x.validate();
    if (segment_length < 2)
        throw std::invalid_argument("power_spectrum: segment_length must be >= 2");
    if (static_cast<std::size_t>(segment_length) > x.size())
        throw std::invalid_argument("power_spectrum: segment_length exceeds signal length");

    const std::size_t L = static_cast<std::size_t>(segment_length);
    const std::size_t nfft = fft::next_pow2(L);
    const std::size_t hop = L / 2;
    const std::size_t n_bins = nfft / 2 + 1;

    std::vector<double> window(L);
    double win_power = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
        window[j] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(j) /
                                          static_cast<double>(L - 1)));
        win_power += window[j] * window[j];
    }

    std::vector<double> psd(n_bins, 0.0);
    std::size_t n_segments = 0;
    std::vector<std::complex<double>> buf(nfft);
    for (std::size_t start = 0; start + L <= x.size(); start += hop) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (std::size_t j = 0; j < L; ++j)
            buf[j] = x.samples[start + j] * window[j];
        fft::forward(buf);
        for (std::size_t k = 0; k < n_bins; ++k)
            psd[k] += std::norm(buf[k]);
        ++n_segments;
    }

    const double scale = 1.0 / (static_cast<double>(n_segments) * win_power * x.sample_rate);
    Spectrum s;
    s.frequencies.resize(n_bins);
    s.values.resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        double v = psd[k] * scale;
        if (k != 0 && k != n_bins - 1) v *= 2.0; // one-sided
        s.frequencies[k] = static_cast<double>(k) * x.sample_rate / static_cast<double>(nfft);
        s.values[k] = v;
    }
    return s;
}

Spectrum frequency_response(const Fir& h, int n_freqs, double sample_rate) {
    h.validate();
    if (n_freqs < h.order() || n_freqs < 2)
        throw std::invalid_argument("frequency_response: n_freqs must be >= max(2, tap count)");
    Spectrum s;
    s.frequencies.resize(static_cast<std::size_t>(n_freqs));
    s.values.resize(static_cast<std::size_t>(n_freqs));
    for (int i = 0; i < n_freqs; ++i) {
        const double omega = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_freqs - 1);
        std::complex<double> acc(0.0, 0.0);
        for (int j = 0; j < h.order(); ++j) {
            const double phase = -omega * static_cast<double>(j + 1);
            acc += h.taps[static_cast<std::size_t>(j)] * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        s.frequencies[static_cast<std::size_t>(i)] =
            omega * sample_rate / (2.0 * std::numbers::pi);
        s.values[static_cast<std::size_t>(i)] = acc;
    }
    return s;
}

Signal spectral_whiten(const Signal& x, double water_level) {
    x.validate();
    if (!(water_level > 0.0))
        throw std::invalid_argument("spectral_whiten: water_level must be positive");

    const std::size_t n = x.size();
    const std::size_t nfft = fft::next_pow2(n);
    std::vector<std::complex<double>> X(nfft);
    for (std::size_t i = 0; i < n; ++i) X[i] = x.samples[i];
    fft::forward(X);

    double max_mag = 0.0;
    for (const auto& v : X) max_mag = std::max(max_mag, std::abs(v));
    Signal out;
    out.sample_rate = x.sample_rate;
    out.samples.assign(n, 0.0);
    if (max_mag == 0.0) return out;

    const double threshold = water_level * max_mag;
    for (auto& v : X) {
        const double mag = std::abs(v);
        v /= std::max(mag, threshold);
    }
    fft::inverse(X);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = X[i].real();
    return out;
}

Signal one_bit_quantize(const Signal& x) {
    x.validate();
    Signal out;
    out.sample_rate = x.sample_rate;
    out.samples.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out.samples[i] = x.samples[i] < 0.0 ? -1.0 : 1.0; // sign(0) = +1
    return out;
}

Signal add_white_noise(const Signal& x, double snr_db, std::uint64_t seed) {
    x.validate();
    if (std::isinf(snr_db) && snr_db > 0.0) return x;
    const double p = mean_power(x);
    if (p <= 0.0)
        throw std::invalid_argument("add_white_noise: signal has zero power");
    const double noise_std = std::sqrt(p / std::pow(10.0, snr_db / 10.0));
    Rng rng(seed);
    Signal out = x;
    for (auto& v : out.samples) v += noise_std * rng.normal();
    return out;
}

Signal gen_pulse_train(int length, int n_pulses, std::uint64_t seed,
                       double sample_rate, int wavelet_length) {
    if (n_pulses < 1)
        throw std::invalid_argument("gen_pulse_train: n_pulses must be >= 1");
    if (length < wavelet_length)
        throw std::invalid_argument("gen_pulse_train: length too short for one wavelet");

    Rng rng(seed);
    Signal out;
    out.sample_rate = sample_rate;
    out.samples.assign(static_cast<std::size_t>(length), 0.0);
    const int lw = wavelet_length;
    for (int pi = 0; pi < n_pulses; ++pi) {
        const int start = static_cast<int>(rng.uniform(0.0, static_cast<double>(length - lw)));
        const double amp = rng.uniform(0.5, 2.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        const double freq = rng.uniform(0.05, 0.4); // cycles per sample
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (int j = 0; j < lw; ++j) {
            const double win = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * j / (lw - 1)));
            out.samples[static_cast<std::size_t>(start + j)] +=
                amp * win * std::sin(2.0 * std::numbers::pi * freq * j + phase);
        }
    }
    return out;
}

} // namespace bltv
