#pragma once

#include <vector>

#include <Eigen/Dense>

#include "bltv/signal.hpp"

namespace bltv {

// Gaussian posterior over a length-p FIR: h = mean + fluctuation with
// Cov[fluctuation] = cov.
struct PosteriorIR {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    int order() const { return static_cast<int>(mean.size()); }

    static PosteriorIR diagonal(const Eigen::VectorXd& mean, const Eigen::VectorXd& var);

    // throws std::invalid_argument unless cov is symmetric PSD (Cholesky
    // with 1e-10 jitter) and mean is finite
    void validate() const;

    // lower Cholesky factor of cov + jitter; reused for sampling
    Eigen::MatrixXd chol() const;
};

// Cov[E_k[n], E_l[m]] for the fluctuation process. White-in-time stores one
// covariance per time step (delta-correlated across n); dense stores the full
// (n*p) x (n*p) matrix for short horizons.
class CrossTimeCov {
  public:
    static CrossTimeCov white(std::vector<Eigen::MatrixXd> per_time);
    static CrossTimeCov dense(Eigen::MatrixXd full, int n_times, int taps);

    int n_times() const { return n_times_; }
    int taps() const { return taps_; }
    bool is_white() const { return dense_.size() == 0; }

    // k, l are zero-based tap indices (tap k corresponds to h_{k+1})
    double operator()(int n, int m, int k, int l) const;

    const Eigen::MatrixXd& sigma_at(int n) const;
    const Eigen::MatrixXd& dense_matrix() const { return dense_; }

  private:
    std::vector<Eigen::MatrixXd> per_time_;
    Eigen::MatrixXd dense_;
    int n_times_ = 0;
    int taps_ = 0;
};

// E[g[n]] = convolution with the posterior mean taps.
Signal expected_output(const Signal& f, const PosteriorIR& post);
Signal expected_output(const Signal& f, const std::vector<PosteriorIR>& per_time);

// Var[g[n]] = f[n]^T Sigma[n] f[n] with f[n] = (f[n-1],...,f[n-p])^T.
Signal output_variance(const Signal& f, const PosteriorIR& post);
Signal output_variance(const Signal& f, const std::vector<PosteriorIR>& per_time);

// Cov[g[n], g[m]] via the double sum over tap lags.
double output_covariance(const Signal& f, const CrossTimeCov& cov, int n, int m);

// DTFT of the tap-lag autocovariance of Sigma on a uniform [0, Nyquist] grid.
Spectrum fluctuation_spectrum(const Eigen::MatrixXd& cov, int n_freqs, double sample_rate = 1.0);

// Output PSD of an LTIE system: S_in * (|mean_fr|^2 + fluct_psd), pointwise.
Spectrum ltie_psd(const Spectrum& input_psd, const Spectrum& mean_fr, const Spectrum& fluct_psd);

} // namespace bltv
