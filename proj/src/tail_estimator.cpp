#include "fbq/tail_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fbq/errors.hpp"

namespace fbq {

EmpiricalSurvival::EmpiricalSurvival(std::vector<double> samples) : sorted_(std::move(samples)) {
    if (sorted_.empty()) throw PreconditionError("empirical survival of an empty sample");
    for (double x : sorted_)
        if (!std::isfinite(x)) throw PreconditionError("samples must be finite");
    std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalSurvival::operator()(double x) const {
    const auto above = sorted_.end() - std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(above) / static_cast<double>(sorted_.size());
}

EmpiricalSurvival empirical_survival(std::span<const double> samples) {
    return EmpiricalSurvival(std::vector<double>(samples.begin(), samples.end()));
}

namespace {

// Empirical quantile: the smallest sample with F^ >= q.
double quantile(const std::vector<double> &sorted, double q) {
    const double n = static_cast<double>(sorted.size());
    auto k = static_cast<std::size_t>(std::ceil(q * n));
    k = std::clamp<std::size_t>(k, 1, sorted.size());
    return sorted[k - 1];
}

}  // namespace

DecayEstimate estimate_decay(std::span<const double> samples, const EstimatorOptions &options) {
    if (!(options.q_lo > 0.0 && options.q_lo < options.q_hi && options.q_hi < 1.0))
        throw ConfigError("estimator window needs 0 < q_lo < q_hi < 1");
    if (samples.size() < kMinEstimatorSamples)
        throw PreconditionError("decay estimation needs at least " + std::to_string(kMinEstimatorSamples) +
                                " samples, got " + std::to_string(samples.size()));

    const EmpiricalSurvival survival = empirical_survival(samples);
    const auto &sorted = survival.sorted();
    const double n = static_cast<double>(sorted.size());
    const double x_lo = quantile(sorted, options.q_lo);
    const double x_hi = quantile(sorted, options.q_hi);
    const double k = options.poly_exponent;

    std::vector<double> xs;
    std::vector<double> ys;
    auto it = std::lower_bound(sorted.begin(), sorted.end(), x_lo);
    while (it != sorted.end() && *it <= x_hi) {
        const double x = *it;
        it = std::upper_bound(it, sorted.end(), x);
        const double p = static_cast<double>(sorted.end() - it) / n;
        const double y = std::log(p) - (k != 0.0 ? k * std::log(x) : 0.0);
        if (!std::isfinite(y))
            throw PreconditionError("non-finite log survival at x = " + std::to_string(x) +
                                    (k != 0.0 ? " (polynomial correction needs x > 0)" : ""));
        xs.push_back(x);
        ys.push_back(y);
    }
    if (xs.size() < kMinWindowPoints)
        throw PreconditionError("only " + std::to_string(xs.size()) + " distinct points in the estimator window");

    const double m = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw PreconditionError("estimator window has zero width");
    const double slope = sxy / sxx;
    const double sse = std::max(0.0, syy - slope * sxy);

    DecayEstimate out;
    out.rate = -slope;
    out.std_error = std::sqrt(sse / (m - 2.0) / sxx);
    out.x_lo = x_lo;
    out.x_hi = x_hi;
    out.points = xs.size();
    out.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    out.poly_exponent = k;
    return out;
}

}  // namespace fbq
