#pragma once

#include <utility>
#include <vector>

#include "bltv/vi.hpp"

namespace bltv {

using SignalPair = std::pair<Signal, Signal>;

struct LtiFit {
    int p = 0;
    DiagGaussian posterior;
    std::vector<double> trace;
    TrainConfig config;
    double final_loss = 0.0;
};

// Variational posterior over a time-invariant FIR from one or more noisy
// (input, output) pairs. Prior is zero-mean isotropic with std 1/sqrt(p);
// the reconstruction term sums over pairs.
LtiFit fit_lti(const std::vector<SignalPair>& pairs, int p, TrainConfig cfg);

// Normal-equations FIR estimate; the classical point-estimate baseline.
Fir least_squares_fir(const Signal& f, const Signal& g, int p, double ridge = 0.0);

struct PredictStats {
    Signal mean;
    Signal stddev;
    std::vector<Signal> samples;
};

PredictStats posterior_predict(const LtiFit& fit, const Signal& f, int n_samples,
                               std::uint64_t seed, int keep_samples = 0);

struct CcfStats {
    int max_lag = 0;
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<std::vector<double>> samples;
};

// Posterior over the expected cross-correlation: per sample (f x f) * h_i.
CcfStats posterior_ccf(const LtiFit& fit, const Signal& f, int max_lag, int n_samples,
                       std::uint64_t seed, int keep_samples = 0);

struct FreqRespStats {
    std::vector<double> frequencies;
    std::vector<double> mag_mean, mag_std, mag_lo, mag_hi; // lo/hi: 2.5/97.5 percentiles
    std::vector<double> phase_mean, phase_std;
};

FreqRespStats posterior_frequency_response(const LtiFit& fit, int n_freqs, int n_samples,
                                           std::uint64_t seed, double sample_rate = 1.0);

} // namespace bltv
