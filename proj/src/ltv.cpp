#include "bltv/ltv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bltv {

void InterpolationSchedule::validate() const {
    for (const auto& h : base_firs) h.validate();
    const auto p = base_firs[0].order();
    if (base_firs[1].order() != p || base_firs[2].order() != p)
        throw std::invalid_argument("InterpolationSchedule: base FIR lengths differ");
    if (weights.cols() != 3 || weights.rows() < 1)
        throw std::invalid_argument("InterpolationSchedule: weights must be n x 3");
    for (long i = 0; i < weights.rows(); ++i) {
        double sum = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double w = weights(i, j);
            if (w < -1e-12 || w > 1.0 + 1e-12)
                throw std::invalid_argument("InterpolationSchedule: weight outside [0, 1]");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("InterpolationSchedule: weight rows must sum to 1");
    }
}

namespace {
double smoothstep(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * (3.0 - 2.0 * x);
}
} // namespace

InterpolationSchedule smoothstep_schedule(int n, const std::array<Fir, 3>& base_firs,
                                          double transition_fraction) {
    if (n < 1) throw std::invalid_argument("smoothstep_schedule: n must be >= 1");
    InterpolationSchedule sched;
    sched.base_firs = base_firs;
    sched.weights.resize(n, 3);
    const double tw = transition_fraction * n;
    const double c1 = n / 3.0, c2 = 2.0 * n / 3.0; // transition centers
    for (int i = 0; i < n; ++i) {
        const double s1 = smoothstep((i - (c1 - tw / 2.0)) / tw); // 0 -> 1 across first region
        const double s2 = smoothstep((i - (c2 - tw / 2.0)) / tw);
        sched.weights(i, 0) = 1.0 - s1;
        sched.weights(i, 1) = s1 * (1.0 - s2);
        sched.weights(i, 2) = s1 * s2;
    }
    sched.validate();
    return sched;
}

TimeVaryingIR gen_ltv_ground_truth(const InterpolationSchedule& sched, double sample_rate) {
    sched.validate();
    const int n = static_cast<int>(sched.weights.rows());
    const int p = sched.base_firs[0].order();
    TimeVaryingIR out;
    out.sample_rate = sample_rate;
    out.taps.resize(n, p);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < p; ++k)
            out.taps(i, k) = sched.weights(i, 0) * sched.base_firs[0].taps[static_cast<std::size_t>(k)] +
                             sched.weights(i, 1) * sched.base_firs[1].taps[static_cast<std::size_t>(k)] +
                             sched.weights(i, 2) * sched.base_firs[2].taps[static_cast<std::size_t>(k)];
    return out;
}

WindowPlan make_window_plan(int n, int window, int stride) {
    if (window < 1 || n < window)
        throw std::invalid_argument("make_window_plan: need 1 <= window <= n");
    if (stride < 1 || stride > window)
        throw std::invalid_argument("make_window_plan: need 1 <= stride <= window");
    WindowPlan plan;
    plan.window = window;
    plan.stride = stride;
    plan.n = n;
    for (int s = 0;; s += stride) {
        if (s + window >= n) {
            plan.starts.push_back(n - window); // clamp the final window
            break;
        }
        plan.starts.push_back(s);
    }
    return plan;
}

std::vector<DiagGaussian> fit_ltv(const Signal& f, const Signal& g, int p,
                                  const WindowPlan& plan, const GPWindowPrior& prior,
                                  TrainConfig cfg) {
    f.validate();
    g.validate();
    if (f.size() != g.size())
        throw std::invalid_argument("fit_ltv: signal lengths differ");
    if (static_cast<int>(f.size()) != plan.n)
        throw std::invalid_argument("fit_ltv: plan does not match signal length");
    if (plan.window < p)
        throw std::invalid_argument("fit_ltv: window shorter than tap count");
    if (prior.window != plan.window || prior.taps != p)
        throw std::invalid_argument("fit_ltv: prior shape does not match plan");

    const int W = plan.window;
    const int d = W * p;
    const int replicas = cfg.batch_replicas;
    const double beta = cfg.beta();

    std::vector<DiagGaussian> posteriors;
    posteriors.reserve(plan.starts.size());

    for (std::size_t wi = 0; wi < plan.starts.size(); ++wi) {
        const int s = plan.starts[wi];

        // B(t*p + k, t) = f[s + t - 1 - k]: maps a sampled tap vector to the
        // window prediction. Input context before the window comes from the
        // true preceding samples of f.
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, W);
        for (int t = 0; t < W; ++t)
            for (int k = 0; k < p; ++k) {
                const int idx = s + t - 1 - k;
                if (idx >= 0) B(t * p + k, t) = f.samples[static_cast<std::size_t>(idx)];
            }
        Eigen::VectorXd gw(W);
        for (int t = 0; t < W; ++t) gw(t) = g.samples[static_cast<std::size_t>(s + t)];

        Objective objective = [&](const DiagGaussian& q, int /*step*/, Rng& rng) -> ElboResult {
            const Eigen::VectorXd std = q.stddev();
            Eigen::MatrixXd noise(replicas, d);
            for (int i = 0; i < replicas; ++i)
                for (int j = 0; j < d; ++j) noise(i, j) = rng.normal();

            Eigen::MatrixXd H = noise.array().rowwise() * std.transpose().array();
            H.rowwise() += q.mean.transpose(); // replicas x d

            Eigen::MatrixXd pred = H * B;                       // replicas x W
            Eigen::MatrixXd residual = (-pred).rowwise() + gw.transpose();
            const double recon = residual.squaredNorm() / static_cast<double>(replicas);

            Eigen::MatrixXd grad_h = -2.0 * (residual * B.transpose()); // replicas x d
            Eigen::VectorXd grad_mean = grad_h.colwise().mean();
            Eigen::VectorXd grad_log_std =
                (grad_h.array() * noise.array()).colwise().mean().matrix().transpose()
                    .cwiseProduct(std);

            const double kl = window_kl(q, prior);
            Eigen::VectorXd kl_gm, kl_gls;
            window_kl_grads(q, prior, kl_gm, kl_gls);

            ElboResult e;
            e.loss = recon + beta * kl;
            e.grad_mean = grad_mean + beta * kl_gm;
            e.grad_log_std = grad_log_std + beta * kl_gls;
            return e;
        };

        TrainConfig wcfg = cfg;
        wcfg.seed = split_seed(cfg.seed, wi);
        ViFitResult vi = adam_cosine_fit(objective, DiagGaussian::zeros(d), wcfg);
        posteriors.push_back(std::move(vi.q));
    }
    return posteriors;
}

TimeVaryingIR stitch(const std::vector<DiagGaussian>& windows, const WindowPlan& plan, int p,
                     double sample_rate) {
    if (windows.size() != plan.starts.size())
        throw std::invalid_argument("stitch: window count does not match plan");
    const int W = plan.window;
    const int n = plan.n;

    TimeVaryingIR out;
    out.sample_rate = sample_rate;
    out.taps = Eigen::MatrixXd::Zero(n, p);
    out.tap_std = Eigen::MatrixXd::Zero(n, p);
    Eigen::MatrixXd second_moment = Eigen::MatrixXd::Zero(n, p);
    Eigen::VectorXd coverage = Eigen::VectorXd::Zero(n);

    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        const int s = plan.starts[wi];
        const DiagGaussian& q = windows[wi];
        if (q.dim() != W * p)
            throw std::invalid_argument("stitch: window posterior has wrong dimension");
        const Eigen::VectorXd var = q.stddev().array().square().matrix();
        for (int t = 0; t < W; ++t) {
            const int nn = s + t;
            coverage(nn) += 1.0;
            for (int k = 0; k < p; ++k) {
                const double mu = q.mean(t * p + k);
                out.taps(nn, k) += mu;
                second_moment(nn, k) += var(t * p + k) + mu * mu;
            }
        }
    }

    for (int nn = 0; nn < n; ++nn) {
        if (coverage(nn) == 0.0)
            throw std::logic_error("stitch: plan leaves a time index uncovered");
        for (int k = 0; k < p; ++k) {
            out.taps(nn, k) /= coverage(nn);
            const double m2 = second_moment(nn, k) / coverage(nn);
            out.tap_std(nn, k) = std::sqrt(std::max(0.0, m2 - out.taps(nn, k) * out.taps(nn, k)));
        }
    }
    return out;
}

} // namespace bltv
