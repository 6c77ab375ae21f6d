#include "bltv/ant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bltv/rng.hpp"

namespace bltv {

void DispersionCurve::validate() const {
    if (freqs.size() < 2 || freqs.size() != velocities.size())
        throw std::invalid_argument("DispersionCurve: need matching grids with >= 2 nodes");
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        if (i > 0 && !(freqs[i] > freqs[i - 1]))
            throw std::invalid_argument("DispersionCurve: frequencies must be strictly increasing");
        if (!(velocities[i] > 0.0))
            throw std::invalid_argument("DispersionCurve: velocities must be positive");
    }
}

double DispersionCurve::velocity_at(double f) const {
    if (f <= freqs.front()) return velocities.front();
    if (f >= freqs.back()) return velocities.back();
    const auto it = std::upper_bound(freqs.begin(), freqs.end(), f);
    const std::size_t i = static_cast<std::size_t>(it - freqs.begin());
    const double w = (f - freqs[i - 1]) / (freqs[i] - freqs[i - 1]);
    return velocities[i - 1] * (1.0 - w) + velocities[i] * w;
}

double DispersionCurve::min_velocity() const {
    return *std::min_element(velocities.begin(), velocities.end());
}

void AntScenario::validate() const {
    dispersion.validate();
    if (!(distance > 0.0))
        throw std::invalid_argument("AntScenario: distance must be positive");
    if (n_pairs < 1)
        throw std::invalid_argument("AntScenario: n_pairs must be >= 1");
    if (sources_per_pair < 1)
        throw std::invalid_argument("AntScenario: sources_per_pair must be >= 1");
    if (signal_length < 2 || medium_taps < 1 || !(sample_rate > 0.0))
        throw std::invalid_argument("AntScenario: invalid signal geometry");
}

Fir dispersive_ir(const DispersionCurve& curve, double distance, int n_taps,
                  double sample_rate, double taper_fraction) {
    curve.validate();
    if (!(distance > 0.0) || n_taps < 1 || !(sample_rate > 0.0))
        throw std::invalid_argument("dispersive_ir: invalid geometry");
    const double max_travel = distance / curve.min_velocity();
    if (max_travel * sample_rate >= static_cast<double>(n_taps))
        throw std::invalid_argument("dispersive_ir: travel time exceeds the tap horizon");

    const std::size_t nfft = fft::next_pow2(static_cast<std::size_t>(std::max(4 * n_taps, 64)));
    const double f_lo = curve.f_min();
    const double f_hi = std::min(curve.f_max(), sample_rate / 2.0);
    const double taper = taper_fraction * (f_hi - f_lo);

    std::vector<std::complex<double>> H(nfft, {0.0, 0.0});
    for (std::size_t k = 0; k <= nfft / 2; ++k) {
        const double f = static_cast<double>(k) * sample_rate / static_cast<double>(nfft);
        if (f < f_lo || f > f_hi) continue;
        double amp = 1.0;
        if (f < f_lo + taper)
            amp = 0.5 * (1.0 - std::cos(std::numbers::pi * (f - f_lo) / taper));
        else if (f > f_hi - taper)
            amp = 0.5 * (1.0 - std::cos(std::numbers::pi * (f_hi - f) / taper));
        // propagation phase plus the far-field pi/4 of the 2-D Green's
        // function; the latter is what lines the field correlation up with
        // the J0 beam pattern instead of a biased cosine
        const double phase =
            -2.0 * std::numbers::pi * f * distance / curve.velocity_at(f) + std::numbers::pi / 4.0;
        H[k] = amp * std::complex<double>(std::cos(phase), std::sin(phase));
        if (k != 0 && k != nfft / 2) H[nfft - k] = std::conj(H[k]);
    }
    fft::inverse(H);

    double max_imag = 0.0;
    for (const auto& v : H) max_imag = std::max(max_imag, std::abs(v.imag()));
    if (max_imag > 1e-10)
        throw std::runtime_error("dispersive_ir: Hermitian symmetry violated");

    // sample m of the inverse transform is the response at delay m; tap j
    // holds the delay j+1 coefficient
    Fir h;
    h.taps.resize(static_cast<std::size_t>(n_taps));
    for (int j = 0; j < n_taps; ++j)
        h.taps[static_cast<std::size_t>(j)] = H[static_cast<std::size_t>(j + 1)].real();
    return h;
}

std::vector<SignalPair> gen_ant_pairs(const AntScenario& scenario) {
    scenario.validate();
    const Fir medium = dispersive_ir(scenario.dispersion, scenario.distance,
                                     scenario.medium_taps, scenario.sample_rate);
    std::vector<SignalPair> pairs;
    pairs.reserve(static_cast<std::size_t>(scenario.n_pairs));
    const int wavelet = std::min(64, scenario.signal_length / 4);
    for (int i = 0; i < scenario.n_pairs; ++i) {
        const std::uint64_t pair_seed = split_seed(scenario.seed, static_cast<std::uint64_t>(i));
        Signal source = gen_pulse_train(scenario.signal_length, scenario.sources_per_pair,
                                        split_seed(pair_seed, 0), scenario.sample_rate, wavelet);
        Signal b_clean = convolve(source, medium);
        Signal a = std::isinf(scenario.snr_db)
                       ? source
                       : add_white_noise(source, scenario.snr_db, split_seed(pair_seed, 1));
        Signal b = std::isinf(scenario.snr_db)
                       ? b_clean
                       : add_white_noise(b_clean, scenario.snr_db, split_seed(pair_seed, 2));
        pairs.emplace_back(std::move(a), std::move(b));
    }
    return pairs;
}

StackResult ccf_stack(const std::vector<SignalPair>& pairs, int window_length,
                      double water_level, int max_lag) {
    if (pairs.empty())
        throw std::invalid_argument("ccf_stack: need at least one pair");
    const int m = 2 * max_lag + 1;
    std::vector<double> acc(static_cast<std::size_t>(m), 0.0);
    std::vector<double> acc2(static_cast<std::size_t>(m), 0.0);

    for (const auto& [a, b] : pairs) {
        if (static_cast<int>(a.size()) < window_length || static_cast<int>(b.size()) < window_length)
            throw std::invalid_argument("ccf_stack: window longer than the signals");
        if (max_lag >= window_length)
            throw std::invalid_argument("ccf_stack: max_lag must be below window_length");
        std::vector<double> pair_ccf(static_cast<std::size_t>(m), 0.0);
        int n_segments = 0;
        for (int start = 0; start + window_length <= static_cast<int>(a.size());
             start += window_length) {
            Signal wa, wb;
            wa.sample_rate = a.sample_rate;
            wb.sample_rate = b.sample_rate;
            wa.samples.assign(a.samples.begin() + start, a.samples.begin() + start + window_length);
            wb.samples.assign(b.samples.begin() + start, b.samples.begin() + start + window_length);
            const LagSeries c =
                cross_correlate(spectral_whiten(wa, water_level), spectral_whiten(wb, water_level),
                                max_lag);
            for (int j = 0; j < m; ++j) pair_ccf[static_cast<std::size_t>(j)] += c.values[static_cast<std::size_t>(j)];
            ++n_segments;
        }
        for (int j = 0; j < m; ++j) {
            const double v = pair_ccf[static_cast<std::size_t>(j)] / n_segments;
            acc[static_cast<std::size_t>(j)] += v;
            acc2[static_cast<std::size_t>(j)] += v * v;
        }
    }

    const double np = static_cast<double>(pairs.size());
    StackResult out;
    out.max_lag = max_lag;
    out.mean.resize(static_cast<std::size_t>(m));
    out.stddev.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const double mu = acc[static_cast<std::size_t>(j)] / np;
        out.mean[static_cast<std::size_t>(j)] = mu;
        out.stddev[static_cast<std::size_t>(j)] =
            std::sqrt(std::max(0.0, acc2[static_cast<std::size_t>(j)] / np - mu * mu));
    }
    return out;
}

Fir ccf_to_fir(const StackResult& stack, int p) {
    if (p < 1 || p > stack.max_lag)
        throw std::invalid_argument("ccf_to_fir: need 1 <= p <= max_lag");
    Fir h;
    h.taps.resize(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j)
        h.taps[static_cast<std::size_t>(j)] =
            stack.mean[static_cast<std::size_t>(stack.max_lag + 1 + j)]; // lags 1..p
    return h;
}

LtiFit fit_mir(const std::vector<SignalPair>& pairs, int p, TrainConfig cfg) {
    return fit_lti(pairs, p, cfg);
}

double bessel_j0(double x) {
    if (!std::isfinite(x))
        throw std::invalid_argument("bessel_j0: non-finite argument");
    x = std::abs(x);
    if (x < 12.0) {
        // sum_m (-x^2/4)^m / (m!)^2
        double term = 1.0, sum = 1.0;
        const double q = -x * x / 4.0;
        for (int m = 1; m <= 60; ++m) {
            term *= q / (static_cast<double>(m) * static_cast<double>(m));
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }
    // Hankel expansion: u_m = u_{m-1} * -(2m-1)^2 / (8 m x)
    double u = 1.0;
    double P = 0.0, Q = 0.0;
    for (int m = 0; m <= 16; ++m) {
        const double contrib = ((m / 2) % 2 == 0) ? u : -u;
        if (m % 2 == 0)
            P += contrib;
        else
            Q += contrib;
        const double next = -u * (2.0 * m + 1.0) * (2.0 * m + 1.0) /
                            (8.0 * (static_cast<double>(m) + 1.0) * x);
        if (std::abs(next) >= std::abs(u)) break; // asymptotic tail start
        u = next;
    }
    const double chi = x - std::numbers::pi / 4.0;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (P * std::cos(chi) - Q * std::sin(chi));
}

double beam_pattern(double z) {
    return bessel_j0(z) * std::sqrt(std::numbers::pi * std::max(z, 1e-12) / 2.0);
}

DispersionFitResult dispersion_fit_rho(const std::vector<double>& rho, double distance,
                                       const std::vector<double>& freq_grid,
                                       const std::vector<double>& velocity_grid) {
    if (freq_grid.empty() || velocity_grid.empty())
        throw std::invalid_argument("dispersion_fit: empty grid");
    if (rho.size() != freq_grid.size())
        throw std::invalid_argument("dispersion_fit: rho/grid size mismatch");
    if (!(distance > 0.0))
        throw std::invalid_argument("dispersion_fit: distance must be positive");

    const int nf = static_cast<int>(freq_grid.size());
    const int nv = static_cast<int>(velocity_grid.size());

    DispersionFitResult out;
    out.map.freqs = freq_grid;
    out.map.velocities = velocity_grid;
    out.map.misfit.resize(nf, nv);
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < nv; ++j) {
            const double z = 2.0 * std::numbers::pi * freq_grid[static_cast<std::size_t>(i)] *
                             distance / velocity_grid[static_cast<std::size_t>(j)];
            const double d = rho[static_cast<std::size_t>(i)] - beam_pattern(z);
            out.map.misfit(i, j) = d * d;
        }

    // Ridge tracking: minimum-total-misfit path over frequency with a max
    // jump of 3 cells per step (dynamic programming); among equal-cost
    // transitions the smaller jump wins, i.e. ties go toward the previous
    // frequency's pick.
    constexpr int kMaxJump = 3;
    Eigen::MatrixXd cost(nf, nv);
    Eigen::MatrixXi from(nf, nv);
    for (int j = 0; j < nv; ++j) {
        cost(0, j) = out.map.misfit(0, j);
        from(0, j) = j;
    }
    for (int i = 1; i < nf; ++i)
        for (int j = 0; j < nv; ++j) {
            double best = std::numeric_limits<double>::infinity();
            int arg = j;
            for (int dj = 0; dj <= kMaxJump; ++dj)
                for (const int prev : {j - dj, j + dj}) {
                    if (prev < 0 || prev >= nv || (dj == 0 && prev != j)) continue;
                    if (cost(i - 1, prev) < best) { // strict: smaller jumps win ties
                        best = cost(i - 1, prev);
                        arg = prev;
                    }
                }
            cost(i, j) = out.map.misfit(i, j) + best;
            from(i, j) = arg;
        }

    std::vector<int> best_path(static_cast<std::size_t>(nf));
    int tail = 0;
    for (int j = 1; j < nv; ++j)
        if (cost(nf - 1, j) < cost(nf - 1, tail)) tail = j;
    best_path[static_cast<std::size_t>(nf - 1)] = tail;
    for (int i = nf - 1; i > 0; --i)
        best_path[static_cast<std::size_t>(i - 1)] = from(i, best_path[static_cast<std::size_t>(i)]);

    out.curve.freqs = freq_grid;
    out.curve.velocities.resize(static_cast<std::size_t>(nf));
    for (int i = 0; i < nf; ++i)
        out.curve.velocities[static_cast<std::size_t>(i)] =
            velocity_grid[static_cast<std::size_t>(best_path[static_cast<std::size_t>(i)])];
    return out;
}

DispersionFitResult dispersion_fit(const Fir& ir_estimate, double sample_rate, double distance,
                                   const std::vector<double>& freq_grid,
                                   const std::vector<double>& velocity_grid) {
    ir_estimate.validate();
    std::vector<double> rho(freq_grid.size(), 0.0);
    for (std::size_t i = 0; i < freq_grid.size(); ++i) {
        const double omega = 2.0 * std::numbers::pi * freq_grid[i] / sample_rate;
        std::complex<double> acc(0.0, 0.0);
        for (int j = 0; j < ir_estimate.order(); ++j) {
            const double phase = -omega * static_cast<double>(j + 1);
            acc += ir_estimate.taps[static_cast<std::size_t>(j)] *
                   std::complex<double>(std::cos(phase), std::sin(phase));
        }
        const double mag = std::abs(acc);
        rho[i] = mag > 1e-300 ? acc.real() / mag : 0.0;
    }
    return dispersion_fit_rho(rho, distance, freq_grid, velocity_grid);
}

double velocity_error(const DispersionCurve& estimate, const DispersionCurve& truth) {
    estimate.validate();
    truth.validate();
    const double lo = std::max(estimate.f_min(), truth.f_min());
    const double hi = std::min(estimate.f_max(), truth.f_max());
    if (!(lo <= hi))
        throw std::invalid_argument("velocity_error: disjoint frequency bands");
    double acc = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < estimate.freqs.size(); ++i) {
        const double f = estimate.freqs[i];
        if (f < lo || f > hi) continue;
        const double ct = truth.velocity_at(f);
        acc += std::abs(estimate.velocities[i] - ct) / ct;
        ++count;
    }
    if (count == 0)
        throw std::invalid_argument("velocity_error: no estimate samples in the common band");
    return acc / static_cast<double>(count);
}

std::vector<SweepRow> sweep_pairs(const AntScenario& scenario, const std::vector<int>& pair_counts,
                                  bool quantize, const AntSweepConfig& cfg) {
    if (pair_counts.empty())
        throw std::invalid_argument("sweep_pairs: empty pair_counts");
    for (std::size_t i = 1; i < pair_counts.size(); ++i)
        if (pair_counts[i] <= pair_counts[i - 1])
            throw std::invalid_argument("sweep_pairs: pair_counts must be ascending");

    AntScenario full = scenario;
    full.n_pairs = pair_counts.back();
    std::vector<SignalPair> pairs = gen_ant_pairs(full);
    if (quantize)
        for (auto& [a, b] : pairs) {
            a = one_bit_quantize(a);
            b = one_bit_quantize(b);
        }

    const int p = scenario.medium_taps;
    std::vector<SweepRow> rows;
    rows.reserve(pair_counts.size());
    for (std::size_t ci = 0; ci < pair_counts.size(); ++ci) {
        const int count = pair_counts[ci];
        const std::vector<SignalPair> subset(pairs.begin(), pairs.begin() + count);

        const StackResult stack =
            ccf_stack(subset, cfg.ccf_window_length, cfg.water_level, p);
        const Fir ccf_ir = ccf_to_fir(stack, p);
        const DispersionFitResult ccf_fit = dispersion_fit(
            ccf_ir, scenario.sample_rate, scenario.distance, cfg.freq_grid, cfg.velocity_grid);

        TrainConfig tc = cfg.train;
        tc.seed = split_seed(cfg.train.seed, ci);
        const LtiFit mir = fit_mir(subset, p, tc);
        Fir mir_ir;
        mir_ir.taps.assign(mir.posterior.mean.data(),
                           mir.posterior.mean.data() + mir.posterior.mean.size());
        const DispersionFitResult mir_fit = dispersion_fit(
            mir_ir, scenario.sample_rate, scenario.distance, cfg.freq_grid, cfg.velocity_grid);

        SweepRow row;
        row.pair_count = count;
        row.ccf_error = velocity_error(ccf_fit.curve, scenario.dispersion);
        row.mir_error = velocity_error(mir_fit.curve, scenario.dispersion);
        rows.push_back(row);
    }
    return rows;
}

} // namespace bltv
