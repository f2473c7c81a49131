#include "fbq/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "fbq/errors.hpp"

namespace fbq::numerics {

namespace {

// Finite-difference step at x, kept clear of the radius.
double safe_step(double x, double radius) {
    double step = 1e-4 * std::max(1.0, std::abs(x));
    if (std::isfinite(radius)) step = std::min(step, 0.25 * (radius - x));
    return step;
}

}  // namespace

double derivative(const ScalarFunction &f, double x, double step) {
    const double coarse = (f(x + step) - f(x - step)) / (2.0 * step);
    const double half = 0.5 * step;
    const double fine = (f(x + half) - f(x - half)) / step;
    return (4.0 * fine - coarse) / 3.0;
}

Maximum maximize_concave(const ScalarFunction &f, double lower, double radius, double tolerance) {
    if (!(radius > lower)) throw SolverError("maximize_concave: empty search interval");
    const auto slope = [&](double x) { return derivative(f, x, safe_step(x, radius)); };

    // Upper end of the bracket.
    double hi;
    if (std::isinf(radius)) {
        hi = lower + 1.0;
        while (slope(hi) >= 0.0) {
            hi = lower + 2.0 * (hi - lower);
            if (hi - lower > 1e12) throw SolverError("maximize_concave: objective does not turn down");
        }
    } else {
        const double span = radius - lower;
        hi = radius;
        for (int k = 1; k <= 60; ++k) {
            const double candidate = radius - span * std::ldexp(1.0, -k);
            if (!std::isfinite(f(candidate)) || slope(candidate) < 0.0) {
                hi = candidate;
                break;
            }
        }
        if (hi == radius) throw SolverError("maximize_concave: maximizer not bracketed below the radius");
    }

    // Golden section.
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lower;
    double b = hi;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = f(c);
    double fd = f(d);
    const double golden_tol = 1e-6 * std::max(1.0, std::abs(hi));
    while (b - a > golden_tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }

    // Derivative bisection; widen until the slope changes sign.
    double width = b - a;
    double left = a;
    double right = b;
    for (int i = 0; i < 60 && left > lower && slope(left) <= 0.0; ++i) {
        left = std::max(lower, left - width);
        width *= 2.0;
    }
    width = b - a;
    for (int i = 0; i < 60 && slope(right) >= 0.0; ++i) {
        right = std::min(right + width, hi);
        width *= 2.0;
    }
    if (slope(left) <= 0.0 && left == lower) {
        throw SolverError("maximize_concave: maximizer sits on the lower boundary");
    }
    while (right - left > tolerance * std::max(1.0, std::abs(left))) {
        const double mid = 0.5 * (left + right);
        if (mid <= left || mid >= right) break;
        if (slope(mid) > 0.0) {
            left = mid;
        } else {
            right = mid;
        }
    }

    Maximum out;
    out.argmax = 0.5 * (left + right);
    out.value = f(out.argmax);
    out.tolerance = right - left;
    out.derivative = slope(out.argmax);
    if (!std::isfinite(out.value)) throw SolverError("maximize_concave: non-finite maximum");
    return out;
}

double bisect(const ScalarFunction &f, double lo, double hi, double tolerance) {
    double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw SolverError("bisect: root not bracketed");
    for (;;) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= std::min(lo, hi) || mid >= std::max(lo, hi) || std::abs(hi - lo) <= tolerance) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace fbq::numerics
