#include "bltv/vi.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bltv {

DiagGaussian DiagGaussian::zeros(int d, double log_std_init) {
    DiagGaussian q;
    q.mean = Eigen::VectorXd::Zero(d);
    q.log_std = Eigen::VectorXd::Constant(d, log_std_init);
    return q;
}

Eigen::MatrixXd sample(const DiagGaussian& q, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    const int d = q.dim();
    const Eigen::VectorXd std = q.stddev();
    Rng rng(seed);
    Eigen::MatrixXd out(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            out(i, j) = q.mean(j) + std(j) * rng.normal();
    return out;
}

double kl_to_isotropic(const DiagGaussian& q, const IsotropicPrior& p) {
    if (q.dim() != p.dim)
        throw std::invalid_argument("kl_to_isotropic: dimension mismatch");
    if (!(p.std > 0.0))
        throw std::invalid_argument("kl_to_isotropic: prior std must be positive");
    const Eigen::ArrayXd std = q.stddev().array();
    const Eigen::ArrayXd mean = q.mean.array();
    const double ps2 = p.std * p.std;
    return ((std::log(p.std) - q.log_std.array()) + (std * std + mean * mean) / (2.0 * ps2) - 0.5)
        .sum();
}

void kl_to_isotropic_grads(const DiagGaussian& q, const IsotropicPrior& p,
                           Eigen::VectorXd& grad_mean, Eigen::VectorXd& grad_log_std) {
    const double ps2 = p.std * p.std;
    const Eigen::ArrayXd var = q.stddev().array().square();
    grad_mean = q.mean / ps2;
    grad_log_std = (var / ps2 - 1.0).matrix();
}

double kl_to_full_gaussian(const DiagGaussian& q, const Eigen::VectorXd& prior_mean,
                           const Eigen::MatrixXd& chol_lower) {
    const int d = q.dim();
    if (prior_mean.size() != d || chol_lower.rows() != d || chol_lower.cols() != d)
        throw std::invalid_argument("kl_to_full_gaussian: dimension mismatch");
    for (int i = 0; i < d; ++i)
        if (!(chol_lower(i, i) > 0.0))
            throw std::invalid_argument("kl_to_full_gaussian: singular Cholesky factor");

    const Eigen::VectorXd std = q.stddev();
    const auto L = chol_lower.triangularView<Eigen::Lower>();

    // tr(K^-1 S) = sum_i std_i^2 * ||L^-1 e_i||^2 computed column-wise
    Eigen::MatrixXd inv_cols = Eigen::MatrixXd::Identity(d, d);
    L.solveInPlace(inv_cols); // rows now L^-1
    double trace_term = 0.0;
    for (int i = 0; i < d; ++i)
        trace_term += std(i) * std(i) * inv_cols.col(i).squaredNorm();

    const Eigen::VectorXd delta = q.mean - prior_mean;
    const Eigen::VectorXd w = L.solve(delta);
    const double quad = w.squaredNorm();

    double logdet_k = 0.0;
    for (int i = 0; i < d; ++i) logdet_k += 2.0 * std::log(chol_lower(i, i));
    const double logdet_s = 2.0 * q.log_std.sum();

    return 0.5 * (trace_term + quad - static_cast<double>(d) + logdet_k - logdet_s);
}

Eigen::MatrixXd convolution_design(const Signal& f, int p) {
    const int n = static_cast<int>(f.size());
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, p);
    for (int row = 0; row < n; ++row)
        for (int j = 0; j < p && j < row; ++j)
            design(row, j) = f.samples[static_cast<std::size_t>(row - 1 - j)];
    return design;
}

ElboResult elbo_and_grads(const Signal& f, const Signal& g, const DiagGaussian& q,
                          const IsotropicPrior& prior, const TrainConfig& cfg,
                          const Eigen::MatrixXd* fixed_noise, std::uint64_t noise_seed) {
    f.validate();
    g.validate();
    if (f.size() != g.size())
        throw std::invalid_argument("elbo_and_grads: signal lengths differ");
    const int d = q.dim();
    if (prior.dim != d)
        throw std::invalid_argument("elbo_and_grads: prior dimension mismatch");
    const int replicas = cfg.batch_replicas;

    Eigen::MatrixXd noise;
    if (fixed_noise) {
        if (fixed_noise->rows() != replicas || fixed_noise->cols() != d)
            throw std::invalid_argument("elbo_and_grads: fixed_noise must be replicas x d");
        noise = *fixed_noise;
    } else {
        Rng rng(noise_seed);
        noise.resize(replicas, d);
        for (int i = 0; i < replicas; ++i)
            for (int j = 0; j < d; ++j) noise(i, j) = rng.normal();
    }

    const Eigen::VectorXd std = q.stddev();
    // h_i = mean + std .* eps_i, columns of H
    Eigen::MatrixXd H = (noise.array().rowwise() * std.transpose().array()).transpose();
    H.colwise() += q.mean;

    const Eigen::MatrixXd design = convolution_design(f, d);
    const Eigen::Map<const Eigen::VectorXd> gv(g.samples.data(), static_cast<long>(g.size()));

    Eigen::MatrixXd residual = (-(design * H)).colwise() + gv; // column i = g - f*h_i
    double recon = residual.squaredNorm() / static_cast<double>(replicas);

    // d||r_i||^2/dh = -2 design^T r_i
    Eigen::MatrixXd per_sample_grad = -2.0 * (design.transpose() * residual); // d x replicas
    Eigen::VectorXd grad_mean = per_sample_grad.rowwise().mean();
    Eigen::VectorXd grad_log_std =
        ((per_sample_grad.array() * noise.transpose().array()).rowwise().mean()).matrix()
            .cwiseProduct(std);

    const double beta = cfg.beta();
    const double kl = kl_to_isotropic(q, prior);
    Eigen::VectorXd kl_gm, kl_gls;
    kl_to_isotropic_grads(q, prior, kl_gm, kl_gls);

    ElboResult out;
    out.loss = recon + beta * kl;
    out.grad_mean = grad_mean + beta * kl_gm;
    out.grad_log_std = grad_log_std + beta * kl_gls;
    return out;
}

ViFitResult adam_cosine_fit(const Objective& objective, DiagGaussian q0, const TrainConfig& cfg) {
    if (cfg.steps < 1)
        throw std::invalid_argument("adam_cosine_fit: steps must be >= 1");
    const int d = q0.dim();
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    Eigen::VectorXd m = Eigen::VectorXd::Zero(2 * d);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * d);

    ViFitResult result;
    result.q = std::move(q0);
    result.trace.reserve(static_cast<std::size_t>(cfg.steps));

    Rng rng(cfg.seed);
    for (int t = 0; t < cfg.steps; ++t) {
        const ElboResult e = objective(result.q, t, rng);
        if (!std::isfinite(e.loss))
            throw std::runtime_error("adam_cosine_fit: non-finite loss at step " +
                                     std::to_string(t));
        result.trace.push_back(e.loss);

        Eigen::VectorXd grad(2 * d);
        grad.head(d) = e.grad_mean;
        grad.tail(d) = e.grad_log_std;

        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
        const double bc1 = 1.0 - std::pow(beta1, t + 1);
        const double bc2 = 1.0 - std::pow(beta2, t + 1);
        const double lr = cfg.lr_init * 0.5 *
                          (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) /
                                          static_cast<double>(cfg.steps)));

        const Eigen::ArrayXd mhat = m.array() / bc1;
        const Eigen::ArrayXd vhat = v.array() / bc2;
        const Eigen::VectorXd step = (lr * mhat / (vhat.sqrt() + eps)).matrix();
        result.q.mean -= step.head(d);
        result.q.log_std -= step.tail(d);
    }
    return result;
}

} // namespace bltv
