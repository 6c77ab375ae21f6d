#include "bltv/gp_prior.hpp"

#include <cmath>
#include <stdexcept>

namespace bltv {

GramFactor rbf_gram(const RbfKernelSpec& spec, int window) {
    if (window < 1)
        throw std::invalid_argument("rbf_gram: window must be >= 1");
    if (!(spec.lengthscale > 0.0) || !(spec.variance > 0.0))
        throw std::invalid_argument("rbf_gram: lengthscale and variance must be positive");

    Eigen::MatrixXd base(window, window);
    const double inv2l2 = 1.0 / (2.0 * spec.lengthscale * spec.lengthscale);
    for (int i = 0; i < window; ++i)
        for (int j = 0; j < window; ++j) {
            const double d = static_cast<double>(i - j);
            base(i, j) = spec.variance * std::exp(-d * d * inv2l2);
        }

    double jitter = spec.effective_jitter();
    for (int attempt = 0; attempt <= 3; ++attempt) {
        Eigen::MatrixXd k = base;
        k.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() == Eigen::Success) {
            GramFactor out;
            out.gram = std::move(k);
            out.chol_lower = llt.matrixL();
            out.jitter_used = jitter;
            return out;
        }
        jitter = jitter > 0.0 ? jitter * 10.0 : 1e-10 * spec.variance;
    }
    throw std::runtime_error("rbf_gram: Cholesky failed after jitter escalation");
}

GPWindowPrior make_window_prior(const RbfKernelSpec& spec, int window, int taps) {
    if (taps < 1)
        throw std::invalid_argument("make_window_prior: taps must be >= 1");
    GPWindowPrior prior;
    prior.window = window;
    prior.taps = taps;
    prior.spec = spec;
    prior.gram = rbf_gram(spec, window);
    Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(window, window);
    prior.gram_inverse =
        prior.gram.chol_lower.triangularView<Eigen::Lower>().transpose().solve(
            prior.gram.chol_lower.triangularView<Eigen::Lower>().solve(ident));
    return prior;
}

namespace {

DiagGaussian tap_block(const DiagGaussian& q, const GPWindowPrior& prior, int tap) {
    DiagGaussian block;
    block.mean.resize(prior.window);
    block.log_std.resize(prior.window);
    for (int t = 0; t < prior.window; ++t) {
        const int idx = t * prior.taps + tap;
        block.mean(t) = q.mean(idx);
        block.log_std(t) = q.log_std(idx);
    }
    return block;
}

} // namespace

double window_kl(const DiagGaussian& q, const GPWindowPrior& prior) {
    if (q.dim() != prior.dim())
        throw std::invalid_argument("window_kl: q dimension must equal window * taps");
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(prior.window);
    double kl = 0.0;
    for (int k = 0; k < prior.taps; ++k)
        kl += kl_to_full_gaussian(tap_block(q, prior, k), zero, prior.gram.chol_lower);
    return kl;
}

void window_kl_grads(const DiagGaussian& q, const GPWindowPrior& prior,
                     Eigen::VectorXd& grad_mean, Eigen::VectorXd& grad_log_std) {
    if (q.dim() != prior.dim())
        throw std::invalid_argument("window_kl_grads: q dimension must equal window * taps");
    grad_mean.setZero(q.dim());
    grad_log_std.setZero(q.dim());
    const Eigen::VectorXd kinv_diag = prior.gram_inverse.diagonal();
    for (int k = 0; k < prior.taps; ++k) {
        const DiagGaussian block = tap_block(q, prior, k);
        const Eigen::VectorXd gm = prior.gram_inverse * block.mean;
        const Eigen::VectorXd var = block.stddev().array().square().matrix();
        for (int t = 0; t < prior.window; ++t) {
            const int idx = t * prior.taps + k;
            grad_mean(idx) = gm(t);
            grad_log_std(idx) = kinv_diag(t) * var(t) - 1.0;
        }
    }
}

} // namespace bltv
