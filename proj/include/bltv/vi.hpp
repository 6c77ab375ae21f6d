#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "bltv/rng.hpp"
#include "bltv/signal.hpp"

namespace bltv {

// Mean-field Gaussian variational family.
struct DiagGaussian {
    Eigen::VectorXd mean;
    Eigen::VectorXd log_std;

    int dim() const { return static_cast<int>(mean.size()); }
    Eigen::VectorXd stddev() const { return log_std.array().exp(); }

    static DiagGaussian zeros(int d, double log_std_init = -3.0);
};

struct IsotropicPrior {
    double std = 1.0;
    int dim = 0;
};

struct TrainConfig {
    int steps = 2000;
    int batch_replicas = 256;
    double lr_init = 0.05;
    double kl_weight = -1.0; // <= 0 means the 1/batch_replicas default
    std::uint64_t seed = 0;

    double beta() const {
        return kl_weight > 0.0 ? kl_weight : 1.0 / static_cast<double>(batch_replicas);
    }
};

// n x d matrix of reparameterized samples mean + std .* eps.
Eigen::MatrixXd sample(const DiagGaussian& q, int n, std::uint64_t seed);

double kl_to_isotropic(const DiagGaussian& q, const IsotropicPrior& p);

// KL(q || N(prior_mean, K)) with K = L L^T given by its lower Cholesky factor.
double kl_to_full_gaussian(const DiagGaussian& q, const Eigen::VectorXd& prior_mean,
                           const Eigen::MatrixXd& chol_lower);

struct ElboResult {
    double loss = 0.0;
    Eigen::VectorXd grad_mean;
    Eigen::VectorXd grad_log_std;
};

// Sampled negative ELBO for the linear FIR observation model and its exact
// gradients through the reparameterization. fixed_noise (replicas x d), when
// supplied, replaces the seeded draws and makes the map deterministic.
ElboResult elbo_and_grads(const Signal& f, const Signal& g, const DiagGaussian& q,
                          const IsotropicPrior& prior, const TrainConfig& cfg,
                          const Eigen::MatrixXd* fixed_noise = nullptr,
                          std::uint64_t noise_seed = 0);

// KL gradients, shared with the estimator modules.
void kl_to_isotropic_grads(const DiagGaussian& q, const IsotropicPrior& p,
                           Eigen::VectorXd& grad_mean, Eigen::VectorXd& grad_log_std);

using Objective = std::function<ElboResult(const DiagGaussian& q, int step, Rng& rng)>;

struct ViFitResult {
    DiagGaussian q;
    std::vector<double> trace; // loss per step
};

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) with cosine-decayed learning rate;
// throws std::runtime_error naming the step index if the loss goes
// non-finite.
ViFitResult adam_cosine_fit(const Objective& objective, DiagGaussian q0, const TrainConfig& cfg);

// Left-shifted Toeplitz design: row n holds (f[n-1], ..., f[n-p]), so that
// convolve(f, h) == design * h.
Eigen::MatrixXd convolution_design(const Signal& f, int p);

} // namespace bltv
