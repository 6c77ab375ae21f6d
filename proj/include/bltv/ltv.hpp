#pragma once

#include <array>
#include <vector>

#include "bltv/gp_prior.hpp"
#include "bltv/vi.hpp"

namespace bltv {

// Three base FIRs blended by per-time convex weights.
struct InterpolationSchedule {
    std::array<Fir, 3> base_firs;
    Eigen::MatrixXd weights; // n x 3, rows sum to 1

    void validate() const;
};

// Piecewise-smoothstep weights with two transition regions, giving three
// regimes dominated by one base filter each.
InterpolationSchedule smoothstep_schedule(int n, const std::array<Fir, 3>& base_firs,
                                          double transition_fraction = 0.15);

TimeVaryingIR gen_ltv_ground_truth(const InterpolationSchedule& sched, double sample_rate = 1.0);

struct WindowPlan {
    int window = 32;
    int stride = 16;
    int n = 0;
    std::vector<int> starts;
};

// Covering plan over [0, n); the last window is clamped to end at n.
WindowPlan make_window_plan(int n, int window = 32, int stride = 16);

// Per-window diagonal-Gaussian posteriors over window*p tap values
// (time-major layout: index t*p + k).
std::vector<DiagGaussian> fit_ltv(const Signal& f, const Signal& g, int p,
                                  const WindowPlan& plan, const GPWindowPrior& prior,
                                  TrainConfig cfg);

// Uniform mixture combination of all windows covering each time index.
TimeVaryingIR stitch(const std::vector<DiagGaussian>& windows, const WindowPlan& plan, int p,
                     double sample_rate = 1.0);

} // namespace bltv
