#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "ksub/errors.hpp"

namespace ksub {

// Adaptive Dormand-Prince 5(4) integrator over a small fixed-size state.
// The right-hand side writes dy/ds into dydt. A stop predicate, when given,
// halts integration at the first accepted step whose end state satisfies it.
template <size_t N>
class DormandPrince {
public:
    using State = std::array<double, N>;
    using Rhs = std::function<void(const State&, State&)>;

    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    double h_init = 1e-3;
    double h_min = 1e-14;
    double h_max = 0.25;
    long max_steps = 2'000'000;

    // Integrates y from s to s_target. Returns the reached value of s
    // (s_target unless the stop predicate fired).
    double integrate(State& y, double s, double s_target, const Rhs& rhs,
                     const std::function<bool(const State&)>& stop = nullptr) const {
        if (s_target == s) return s;
        const double dir = s_target > s ? 1.0 : -1.0;
        double h = std::min(h_init, std::abs(s_target - s)) * dir;
        State k1, k2, k3, k4, k5, k6, k7, y5, y4, tmp;
        rhs(y, k1);
        long steps = 0;
        while (dir * (s_target - s) > 0) {
            if (++steps > max_steps)
                throw StepFailure("ode: step budget exhausted");
            if (dir * (s + h) > dir * s_target) h = s_target - s;

            auto stage = [&](State& out, std::initializer_list<std::pair<const State*, double>> terms) {
                for (size_t i = 0; i < N; ++i) {
                    double acc = y[i];
                    for (auto& [k, c] : terms) acc += h * c * (*k)[i];
                    out[i] = acc;
                }
            };

            stage(tmp, {{&k1, 1.0 / 5}});
            rhs(tmp, k2);
            stage(tmp, {{&k1, 3.0 / 40}, {&k2, 9.0 / 40}});
            rhs(tmp, k3);
            stage(tmp, {{&k1, 44.0 / 45}, {&k2, -56.0 / 15}, {&k3, 32.0 / 9}});
            rhs(tmp, k4);
            stage(tmp, {{&k1, 19372.0 / 6561}, {&k2, -25360.0 / 2187}, {&k3, 64448.0 / 6561}, {&k4, -212.0 / 729}});
            rhs(tmp, k5);
            stage(tmp, {{&k1, 9017.0 / 3168}, {&k2, -355.0 / 33}, {&k3, 46732.0 / 5247}, {&k4, 49.0 / 176}, {&k5, -5103.0 / 18656}});
            rhs(tmp, k6);
            stage(y5, {{&k1, 35.0 / 384}, {&k3, 500.0 / 1113}, {&k4, 125.0 / 192}, {&k5, -2187.0 / 6784}, {&k6, 11.0 / 84}});
            rhs(y5, k7);
            // 4th-order solution for the error estimate
            for (size_t i = 0; i < N; ++i)
                y4[i] = y[i] + h * (5179.0 / 57600 * k1[i] + 7571.0 / 16695 * k3[i] + 393.0 / 640 * k4[i]
                                    - 92097.0 / 339200 * k5[i] + 187.0 / 2100 * k6[i] + 1.0 / 40 * k7[i]);

            double err = 0;
            for (size_t i = 0; i < N; ++i) {
                double sc = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
                err = std::max(err, std::abs(y5[i] - y4[i]) / sc);
            }

            if (err <= 1.0) {
                s += h;
                y = y5;
                k1 = k7; // FSAL
                if (stop && stop(y)) return s;
            }
            double factor = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            factor = std::clamp(factor, 0.2, 5.0);
            h *= factor;
            if (std::abs(h) > h_max) h = h_max * dir;
            if (std::abs(h) < h_min) {
                if (err > 1.0)
                    throw StepFailure("ode: cannot meet tolerance at minimal step size");
                h = h_min * dir;
            }
        }
        return s;
    }
};

} // namespace ksub
