#pragma once

#include "priorsens/errors.hpp"

#include <cmath>
#include <optional>

namespace priorsens {

struct RootResult {
    double x = 0.0;
    double fx = 0.0;
    int iterations = 0;
};

/// Root of f inside a sign-changing bracket [a, b]. Regula falsi steps with
/// the Illinois modification, falling back to bisection whenever the false
/// position step fails to halve the bracket, so convergence is guaranteed.
/// Stops once |f| <= f_tol or the bracket is narrower than x_tol (relative).
template <class F>
[[nodiscard]] RootResult find_root_bracketed(F&& f, double a, double b, double fa, double fb,
                                             double f_tol, double x_tol = 1e-15,
                                             int max_iterations = 300) {
    if (fa == 0.0) return {a, fa, 0};
    if (fb == 0.0) return {b, fb, 0};
    if (std::signbit(fa) == std::signbit(fb)) {
        throw NumericalError("root bracket has no sign change");
    }
    double width = std::abs(b - a);
    int side = 0;  // which end was retained in the last false position step
    for (int it = 1; it <= max_iterations; ++it) {
        double x = (a * fb - b * fa) / (fb - fa);
        const double lo = std::min(a, b);
        const double hi = std::max(a, b);
        if (!(x > lo && x < hi)) x = 0.5 * (a + b);
        const double fx = f(x);
        if (!std::isfinite(fx)) throw NumericalError("non-finite function value in root search");
        if (std::abs(fx) <= f_tol) return {x, fx, it};
        if (std::signbit(fx) == std::signbit(fb)) {
            b = x;
            fb = fx;
            if (side == -1) fa *= 0.5;
            side = -1;
        } else {
            a = x;
            fa = fx;
            if (side == 1) fb *= 0.5;
            side = 1;
        }
        const double new_width = std::abs(b - a);
        if (new_width > 0.5 * width) {
            // Poor false-position progress: force a bisection step.
            const double m = 0.5 * (a + b);
            const double fm = f(m);
            if (!std::isfinite(fm)) throw NumericalError("non-finite function value in root search");
            if (std::abs(fm) <= f_tol) return {m, fm, it};
            if (std::signbit(fm) == std::signbit(fb)) {
                b = m;
                fb = fm;
            } else {
                a = m;
                fa = fm;
            }
            side = 0;
        }
        width = std::abs(b - a);
        if (width <= x_tol * (1.0 + std::abs(a))) {
            return std::abs(fa) < std::abs(fb) ? RootResult{a, fa, it} : RootResult{b, fb, it};
        }
    }
    throw NumericalError("root search did not converge");
}

}  // namespace priorsens
