#pragma once

#include <Eigen/Dense>

#include "bltv/vi.hpp"

namespace bltv {

struct RbfKernelSpec {
    double lengthscale = 8.0; // in window steps
    double variance = 1.0;
    double jitter = -1.0;     // < 0 means the 1e-8 * variance default

    double effective_jitter() const { return jitter >= 0.0 ? jitter : 1e-8 * variance; }
};

struct GramFactor {
    Eigen::MatrixXd gram;        // K with jitter applied to the diagonal
    Eigen::MatrixXd chol_lower;  // L with L L^T = gram
    double jitter_used = 0.0;
};

// K[i,j] = variance * exp(-(i-j)^2 / (2 l^2)) + jitter on the diagonal.
// Escalates the jitter x10 up to 3 retries before giving up.
GramFactor rbf_gram(const RbfKernelSpec& spec, int window);

// Zero-mean GP prior over each tap's trajectory across a W-step window; taps
// are independent a priori (one W x W block per tap).
struct GPWindowPrior {
    int window = 32;
    int taps = 1;
    RbfKernelSpec spec;
    GramFactor gram;
    Eigen::MatrixXd gram_inverse;

    int dim() const { return window * taps; }
};

GPWindowPrior make_window_prior(const RbfKernelSpec& spec, int window, int taps);

// Sum over taps of KL(q_block || N(0, K)); q is laid out time-major, index
// t * taps + k for window step t and tap k.
double window_kl(const DiagGaussian& q, const GPWindowPrior& prior);

void window_kl_grads(const DiagGaussian& q, const GPWindowPrior& prior,
                     Eigen::VectorXd& grad_mean, Eigen::VectorXd& grad_log_std);

} // namespace bltv
