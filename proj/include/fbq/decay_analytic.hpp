#pragma once

#include <span>
#include <vector>

#include "fbq/distributions.hpp"

namespace fbq {

// Poisson(arrival_rate) arrivals into a single server with iid service
// times. Construction enforces stability, rho = lambda * EB < 1.
class QueueModel {
public:
    QueueModel(double arrival_rate, ServiceDistribution service);

    double arrival_rate() const noexcept { return arrival_rate_; }
    const ServiceDistribution &service() const noexcept { return service_; }
    double load() const noexcept { return load_; }

    // The tau-queue: same arrivals, service min(B, tau).
    QueueModel truncated(double tau) const;

private:
    double arrival_rate_;
    ServiceDistribution service_;
    double load_;
};

// h(theta) = theta - lambda (E e^{theta B} - 1); -inf where the MGF diverges.
double h(const QueueModel &model, double theta);

// log E e^{theta A(1)} = lambda (E e^{theta B} - 1), A(1) the work brought in
// by one time unit of arrivals.
double arrival_log_mgf(const QueueModel &model, double theta);

struct BusyPeriodDecay {
    double rate = 0.0;        // c = dr(L) = sup_theta h(theta)
    double theta_star = 0.0;  // maximizer
    double theta_tolerance = 0.0;
    double derivative_residual = 0.0;  // |h'(theta_star)|
};

BusyPeriodDecay busy_period_decay(const QueueModel &model);

struct CoxSmithDecay {
    double rate = 0.0;  // lambda - zeta - lambda g(zeta)
    double zeta = 0.0;  // negative root of g'(zeta) = -1/lambda
};

// Same rate, computed from the Laplace transform g(s) = E e^{-sB}.
CoxSmithDecay cox_smith_decay(const QueueModel &model);

// sup_theta { theta - arrival_log_mgf(theta) }: large-deviation rate of the
// event that a window of length x brings in more than x work.
double cramer_decay(const QueueModel &model);

struct DecayCurvePoint {
    double tau;
    double rate;
};

// c(tau) = dr(L(tau)) on the given grid. Throws PreconditionError when
// P(B >= tau) = 0 for some grid point.
std::vector<DecayCurvePoint> truncated_decay_curve(const QueueModel &model, std::span<const double> taus);

// Positive root theta0 of h: the decay rate of the FIFO workload and sojourn time.
double fifo_decay(const QueueModel &model);

// Pollaczek-Khinchin transform E e^{-sW} = s(1-rho) / (s - lambda + lambda g(s)), s > 0.
double workload_transform(const QueueModel &model, double s);

struct MM1Rates {
    double c_fb;    // (sqrt(mu) - sqrt(lambda))^2
    double c_fifo;  // mu - lambda
    double dr_b;    // mu
};

MM1Rates mm1_closed_forms(double arrival_rate, double service_rate);

struct AnalyticRates {
    double c = 0.0;
    double theta_star = 0.0;
    double theta0 = 0.0;
    double dr_b = 0.0;
    double theta_tolerance = 0.0;
    double derivative_residual = 0.0;
    std::vector<DecayCurvePoint> c_tau;
};

AnalyticRates analytic_rates(const QueueModel &model, std::span<const double> taus = {});

}  // namespace fbq
