#pragma once

#include <vector>

#include "bltv/lti.hpp"
#include "bltv/signal.hpp"

namespace bltv {

// Sampled phase-velocity curve c(f); linearly interpolated between nodes.
struct DispersionCurve {
    std::vector<double> freqs;      // Hz, strictly increasing
    std::vector<double> velocities; // m/s, positive

    void validate() const;
    double velocity_at(double f) const; // clamped linear interpolation
    double min_velocity() const;
    double f_min() const { return freqs.front(); }
    double f_max() const { return freqs.back(); }
};

struct AntScenario {
    double distance = 5000.0; // meters between the receivers
    DispersionCurve dispersion;
    int n_pairs = 100;
    int sources_per_pair = 24;
    double snr_db = 6.0;
    std::uint64_t seed = 0;
    int signal_length = 512;
    double sample_rate = 8.0; // Hz
    int medium_taps = 32;

    void validate() const;
};

// Medium impulse response with flat in-band amplitude, cosine-tapered band
// edges, and phase -2*pi*f*d/c(f) + pi/4 (propagation delay plus the
// far-field phase of the 2-D Green's function).
Fir dispersive_ir(const DispersionCurve& curve, double distance, int n_taps,
                  double sample_rate, double taper_fraction = 0.1);

// Receiver-A / receiver-B recordings: a shared random source field observed
// directly at A and through the medium at B, each with independent noise.
std::vector<SignalPair> gen_ant_pairs(const AntScenario& scenario);

struct StackResult {
    int max_lag = 0;
    std::vector<double> mean;
    std::vector<double> stddev; // across pairs
};

// Classical baseline: whiten each segment, cross-correlate, stack.
StackResult ccf_stack(const std::vector<SignalPair>& pairs, int window_length,
                      double water_level, int max_lag);

// Positive-lag side of a stacked CCF reinterpreted as a causal FIR estimate.
Fir ccf_to_fir(const StackResult& stack, int p);

// Bayesian mean-impulse-response estimator on the raw pairs.
LtiFit fit_mir(const std::vector<SignalPair>& pairs, int p, TrainConfig cfg);

// J0 via power series (|x| < 12) and the Hankel asymptotic expansion.
double bessel_j0(double x);

// J0(z) divided by its asymptotic envelope sqrt(2/(pi z)). The measured rho
// is unit-normalized per frequency, so the raw J0 amplitude would dominate
// the misfit; the normalized pattern keeps the comparison on the phase.
double beam_pattern(double z);

struct MisfitMap {
    std::vector<double> freqs;
    std::vector<double> velocities;
    Eigen::MatrixXd misfit; // freqs.size() x velocities.size()
};

struct DispersionFitResult {
    MisfitMap map;
    DispersionCurve curve;
};

// Fit per-frequency normalized real spectra against J0(2*pi*f*d/c) beam
// patterns; the curve is extracted by ridge tracking with a 3-cell max jump.
DispersionFitResult dispersion_fit_rho(const std::vector<double>& rho, double distance,
                                       const std::vector<double>& freq_grid,
                                       const std::vector<double>& velocity_grid);

DispersionFitResult dispersion_fit(const Fir& ir_estimate, double sample_rate, double distance,
                                   const std::vector<double>& freq_grid,
                                   const std::vector<double>& velocity_grid);

// Band-mean relative absolute velocity error over the common band.
double velocity_error(const DispersionCurve& estimate, const DispersionCurve& truth);

struct SweepRow {
    int pair_count = 0;
    double mir_error = 0.0;
    double ccf_error = 0.0;
};

struct AntSweepConfig {
    int ccf_window_length = 128;
    double water_level = 1e-3;
    TrainConfig train;
    std::vector<double> freq_grid;
    std::vector<double> velocity_grid;
};

// Error-vs-pairs comparison; count N reuses the first N generated pairs.
std::vector<SweepRow> sweep_pairs(const AntScenario& scenario,
                                  const std::vector<int>& pair_counts, bool quantize,
                                  const AntSweepConfig& cfg);

} // namespace bltv
