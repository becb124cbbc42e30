#include "foliate/ode.hpp"

#include "foliate/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace foliate {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

class Stepper {
public:
    Stepper(const VecFn& f, const IntegratorSettings& s, IntegrationStats* stats)
        : f_(f), s_(s), stats_(stats), h_(s.initial_step) {}

    void advance(Eigen::VectorXd& y, double t0, double t1) {
        double t = t0;
        if (t1 <= t0) {
            return;
        }
        Eigen::VectorXd k1 = f_(y);
        check_finite(k1, t);
        while (t < t1) {
            if (steps_++ > s_.max_steps) {
                throw ConvergenceError("integrate: step budget exhausted at t = " + std::to_string(t));
            }
            const bool last = t + h_ >= t1;
            const double h = last ? t1 - t : h_;
            const Eigen::VectorXd k2 = f_(y + h * a21 * k1);
            const Eigen::VectorXd k3 = f_(y + h * (a31 * k1 + a32 * k2));
            const Eigen::VectorXd k4 = f_(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
            const Eigen::VectorXd k5 = f_(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            const Eigen::VectorXd k6 = f_(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            Eigen::VectorXd y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const Eigen::VectorXd k7 = f_(y_new);
            const Eigen::VectorXd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            double acc = 0.0;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                const double sc = s_.atol + s_.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
                const double r = err[i] / sc;
                acc += r * r;
            }
            const double en = y.size() > 0 ? std::sqrt(acc / static_cast<double>(y.size())) : 0.0;
            if (!std::isfinite(en)) {
                h_ = 0.25 * h;
                if (stats_) {
                    ++stats_->rejected;
                }
                if (h_ < s_.min_step) {
                    throw ConvergenceError("integrate: non-finite state at t = " + std::to_string(t));
                }
                continue;
            }
            const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            if (en <= 1.0) {
                t = last ? t1 : t + h;
                y = std::move(y_new);
                k1 = k7;
                if (stats_) {
                    ++stats_->accepted;
                }
                // Keep the controller's step unless it was clipped to land on t1.
                if (!last || h == h_) {
                    h_ = h * factor;
                }
            } else {
                h_ = h * std::max(factor, 0.2);
                if (stats_) {
                    ++stats_->rejected;
                }
            }
            if (h_ < s_.min_step) {
                throw ConvergenceError("integrate: step size underflow at t = " + std::to_string(t));
            }
        }
    }

private:
    void check_finite(const Eigen::VectorXd& v, double t) const {
        if (!v.allFinite()) {
            throw ConvergenceError("integrate: non-finite vector field at t = " + std::to_string(t));
        }
    }

    const VecFn& f_;
    const IntegratorSettings& s_;
    IntegrationStats* stats_;
    double h_;
    long steps_ = 0;
};

}  // namespace

Eigen::VectorXd integrate(const VecFn& field, const Eigen::VectorXd& y0, double t_end,
                          const IntegratorSettings& settings, IntegrationStats* stats) {
    if (t_end < 0.0) {
        throw PreconditionError("integrate: negative end time");
    }
    Eigen::VectorXd y = y0;
    Stepper stepper(field, settings, stats);
    stepper.advance(y, 0.0, t_end);
    return y;
}

std::vector<Eigen::VectorXd> integrate_to_times(const VecFn& field, const Eigen::VectorXd& y0,
                                                const std::vector<double>& times,
                                                const IntegratorSettings& settings) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(times.size());
    Eigen::VectorXd y = y0;
    Stepper stepper(field, settings, nullptr);
    double t = 0.0;
    for (double target : times) {
        if (target < t) {
            throw PreconditionError("integrate_to_times: output times must be non-decreasing and non-negative");
        }
        stepper.advance(y, t, target);
        t = target;
        out.push_back(y);
    }
    return out;
}

}  // namespace foliate
