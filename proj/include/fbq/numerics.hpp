#pragma once

#include <functional>

namespace fbq::numerics {

using ScalarFunction = std::function<double(double)>;

// Central difference with one Richardson step; O(step^4) truncation error.
double derivative(const ScalarFunction &f, double x, double step);

struct Maximum {
    double argmax = 0.0;
    double value = 0.0;
    double tolerance = 0.0;   // width of the final bracket on the argument
    double derivative = 0.0;  // finite-difference f' at argmax
};

// Maximizes a concave f over [lower, radius). f may return -inf at or near
// radius (which may itself be +inf); such points are treated as "step back".
// Golden-section narrows the bracket, bisection on the sign of the
// finite-difference derivative refines it to `tolerance`.
// Throws SolverError if no interior maximizer can be bracketed.
Maximum maximize_concave(const ScalarFunction &f, double lower, double radius,
                         double tolerance = 1e-12);

// Root of f on [lo, hi] given f(lo) and f(hi) of opposite signs (either
// order). Runs until the bracket is below `tolerance` or no longer shrinks.
double bisect(const ScalarFunction &f, double lo, double hi, double tolerance = 0.0);

}  // namespace fbq::numerics
