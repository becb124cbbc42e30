#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace foliate {

using VecFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct IntegratorSettings {
    double atol = 1e-12;
    double rtol = 1e-10;
    double initial_step = 1e-3;
    double min_step = 1e-14;
    long max_steps = 2'000'000;
};

struct IntegrationStats {
    long accepted = 0;
    long rejected = 0;
};

/// Dormand-Prince 5(4) with a PI step controller. Autonomous fields only.
/// Throws ConvergenceError on step-size underflow, non-finite states or an exhausted budget.
Eigen::VectorXd integrate(const VecFn& field, const Eigen::VectorXd& y0, double t_end,
                          const IntegratorSettings& settings = {}, IntegrationStats* stats = nullptr);

/// States at each of the (non-decreasing, non-negative) output times, starting from y0 at t = 0.
std::vector<Eigen::VectorXd> integrate_to_times(const VecFn& field, const Eigen::VectorXd& y0,
                                                const std::vector<double>& times,
                                                const IntegratorSettings& settings = {});

}  // namespace foliate
