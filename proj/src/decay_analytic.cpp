#include "fbq/decay_analytic.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fbq/errors.hpp"
#include "fbq/numerics.hpp"

namespace fbq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double compute_load(double arrival_rate, const ServiceDistribution &service) {
    if (!std::isfinite(arrival_rate) || arrival_rate <= 0.0)
        throw ConfigError("arrival rate must be finite and > 0");
    const double rho = arrival_rate * service.mean();
    if (!(rho < 1.0))
        throw UnstableModel("unstable model: rho = lambda * EB = " + std::to_string(rho) + " >= 1");
    return rho;
}

}  // namespace

QueueModel::QueueModel(double arrival_rate, ServiceDistribution service)
    : arrival_rate_(arrival_rate), service_(std::move(service)), load_(compute_load(arrival_rate_, service_)) {}

QueueModel QueueModel::truncated(double tau) const {
    return QueueModel(arrival_rate_, ServiceDistribution::truncated(service_, tau));
}

double h(const QueueModel &model, double theta) {
    const double m = model.service().mgf(theta);
    if (std::isinf(m)) return -kInf;
    return theta - model.arrival_rate() * (m - 1.0);
}

double arrival_log_mgf(const QueueModel &model, double theta) {
    const double m = model.service().mgf(theta);
    if (std::isinf(m)) return kInf;
    return model.arrival_rate() * (m - 1.0);
}

BusyPeriodDecay busy_period_decay(const QueueModel &model) {
    const auto objective = [&](double theta) { return h(model, theta); };
    const auto best = numerics::maximize_concave(objective, 0.0, model.service().mgf_radius());
    BusyPeriodDecay out;
    out.rate = best.value;
    out.theta_star = best.argmax;
    out.theta_tolerance = best.tolerance;
    out.derivative_residual = std::abs(best.derivative);
    return out;
}

CoxSmithDecay cox_smith_decay(const QueueModel &model) {
    const ServiceDistribution &service = model.service();
    const double lambda = model.arrival_rate();
    const double radius = service.mgf_radius();  // g(s) is finite for s > -radius
    const auto g = [&](double s) { return service.laplace(s); };
    const auto g_slope = [&](double s) {
        double step = 1e-4 * std::max(1.0, std::abs(s));
        if (std::isfinite(radius)) step = std::min(step, 0.25 * (s + radius));
        return numerics::derivative(g, s, step);
    };
    // g' is increasing with g'(0) = -EB > -1/lambda; find zeta < 0 where it drops below.
    const auto excess = [&](double s) { return g_slope(s) + 1.0 / lambda; };
    double left = -1.0;
    if (std::isfinite(radius)) {
        left = 0.0;
        for (int k = 1; k <= 60 && excess(left) >= 0.0; ++k) left = -radius * (1.0 - std::ldexp(1.0, -k));
    } else {
        for (int k = 0; k < 60 && excess(left) >= 0.0; ++k) left *= 2.0;
    }
    if (excess(left) >= 0.0) throw SolverError("cox_smith_decay: root of g'(s) = -1/lambda not bracketed");

    CoxSmithDecay out;
    out.zeta = numerics::bisect(excess, left, 0.0);
    out.rate = lambda - out.zeta - lambda * g(out.zeta);
    return out;
}

double cramer_decay(const QueueModel &model) {
    const auto objective = [&](double theta) {
        const double log_mgf = arrival_log_mgf(model, theta);
        return std::isinf(log_mgf) ? -kInf : theta - log_mgf;
    };
    return numerics::maximize_concave(objective, 0.0, model.service().mgf_radius()).value;
}

std::vector<DecayCurvePoint> truncated_decay_curve(const QueueModel &model, std::span<const double> taus) {
    std::vector<DecayCurvePoint> out;
    out.reserve(taus.size());
    for (double tau : taus) {
        if (!(tau > 0.0) || !(model.service().prob_at_least(tau) > 0.0))
            throw PreconditionError("c(tau) needs tau > 0 with P(B >= tau) > 0; got tau = " + std::to_string(tau));
        out.push_back({tau, busy_period_decay(model.truncated(tau)).rate});
    }
    return out;
}

double fifo_decay(const QueueModel &model) {
    const auto objective = [&](double theta) { return h(model, theta); };
    const double start = busy_period_decay(model).theta_star;
    const double radius = model.service().mgf_radius();
    double right = start;
    if (std::isfinite(radius)) {
        for (int k = 1; k <= 60 && !(objective(right) < 0.0); ++k)
            right = start + (radius - start) * (1.0 - std::ldexp(1.0, -k));
    } else {
        right = 2.0 * start;
        for (int k = 0; k < 60 && !(objective(right) < 0.0); ++k) right *= 2.0;
    }
    if (!(objective(right) < 0.0)) throw SolverError("fifo_decay: positive root of h not bracketed");
    return numerics::bisect(objective, start, right);
}

double workload_transform(const QueueModel &model, double s) {
    if (!(s > 0.0)) throw PreconditionError("workload transform needs s > 0");
    const double lambda = model.arrival_rate();
    const double denominator = s - lambda + lambda * model.service().laplace(s);
    if (denominator == 0.0) throw PreconditionError("workload transform denominator vanishes");
    return s * (1.0 - model.load()) / denominator;
}

MM1Rates mm1_closed_forms(double arrival_rate, double service_rate) {
    if (!(arrival_rate > 0.0) || !(service_rate > 0.0)) throw ConfigError("M/M/1 rates must be > 0");
    if (!(arrival_rate < service_rate)) throw UnstableModel("unstable M/M/1: lambda >= mu");
    const double gap = std::sqrt(service_rate) - std::sqrt(arrival_rate);
    return {gap * gap, service_rate - arrival_rate, service_rate};
}

AnalyticRates analytic_rates(const QueueModel &model, std::span<const double> taus) {
    const auto busy = busy_period_decay(model);
    AnalyticRates out;
    out.c = busy.rate;
    out.theta_star = busy.theta_star;
    out.theta_tolerance = busy.theta_tolerance;
    out.derivative_residual = busy.derivative_residual;
    out.theta0 = fifo_decay(model);
    out.dr_b = model.service().mgf_radius();
    out.c_tau = truncated_decay_curve(model, taus);
    return out;
}

}  // namespace fbq
