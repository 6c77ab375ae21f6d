#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace bltv {

// Uniformly sampled real-valued time series.
struct Signal {
    std::vector<double> samples;
    double sample_rate = 1.0;

    std::size_t size() const { return samples.size(); }
    double operator[](std::size_t i) const { return samples[i]; }

    // throws std::invalid_argument if empty, non-finite, or sample_rate <= 0
    void validate() const;
};

// Causal FIR taps h_1..h_p (index 0 holds h_1, the one-sample-delay tap).
struct Fir {
    std::vector<double> taps;

    int order() const { return static_cast<int>(taps.size()); }
    void validate() const;
};

// Dense matrix of FIR taps over time: row n holds the taps active at output
// sample n. Optional per-entry standard deviation for stitched estimates.
struct TimeVaryingIR {
    Eigen::MatrixXd taps;      // n x p
    Eigen::MatrixXd tap_std;   // n x p, empty when absent
    double sample_rate = 1.0;

    bool has_std() const { return tap_std.size() > 0; }
    int length() const { return static_cast<int>(taps.rows()); }
    int order() const { return static_cast<int>(taps.cols()); }
};

// Complex spectrum on an explicit frequency grid (Hz). PSDs are stored with
// zero imaginary part.
struct Spectrum {
    std::vector<double> frequencies;
    std::vector<std::complex<double>> values;

    std::size_t size() const { return frequencies.size(); }
};

// Values at lags -max_lag..max_lag; operator() indexes by signed lag.
struct LagSeries {
    int max_lag = 0;
    std::vector<double> values; // length 2*max_lag + 1

    double operator()(int lag) const { return values[static_cast<std::size_t>(lag + max_lag)]; }
    double& operator()(int lag) { return values[static_cast<std::size_t>(lag + max_lag)]; }
};

namespace fft {
std::size_t next_pow2(std::size_t n);
void forward(std::vector<std::complex<double>>& a);
void inverse(std::vector<std::complex<double>>& a);
} // namespace fft

// g[n] = sum_{k=1..p} h_k f[n-k], zero-padded on the left; |g| = |f|.
Signal convolve(const Signal& f, const Fir& h);

// Time-variant counterpart; H must have one row per sample of f.
Signal convolve_ltv(const Signal& f, const TimeVaryingIR& H);

// c[l] = sum_n f[n] g[n+l] for l in [-max_lag, max_lag].
LagSeries cross_correlate(const Signal& f, const Signal& g, int max_lag);

// Welch-averaged one-sided PSD (Hann window, 50% overlap).
Spectrum power_spectrum(const Signal& x, int segment_length);

// DTFT of the taps on a uniform grid over [0, Nyquist], honoring the k=1
// delay convention.
Spectrum frequency_response(const Fir& h, int n_freqs, double sample_rate = 1.0);

// Flatten the magnitude spectrum above a relative water level, keep phase.
Signal spectral_whiten(const Signal& x, double water_level = 1e-4);

Signal one_bit_quantize(const Signal& x);

// Additive white Gaussian noise at the requested SNR. An infinite snr_db is
// the no-noise sentinel.
Signal add_white_noise(const Signal& x, double snr_db, std::uint64_t seed);

// Random superposition of Hann-windowed tone bursts; stands in for
// pulse-like field recordings.
Signal gen_pulse_train(int length, int n_pulses, std::uint64_t seed,
                       double sample_rate = 1.0, int wavelet_length = 64);

double mean_power(const Signal& x);

} // namespace bltv
