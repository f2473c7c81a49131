#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fbq/random.hpp"

namespace fbq {

enum class ServiceKind { Deterministic, Exponential, Gamma, Uniform, HyperExponential, Truncated };

struct ExponentialPhase {
    double weight;
    double rate;
};

// Service-time law B. Values are immutable once constructed; copies share
// the (immutable) base of a truncation.
//
// Every variant has a finite exponential moment, i.e. mgf(theta) < inf for
// some theta > 0. mgf() returns +infinity instead of failing outside the
// domain of convergence.
class ServiceDistribution {
public:
    static ServiceDistribution deterministic(double value);
    static ServiceDistribution exponential(double rate);
    static ServiceDistribution gamma(double shape, double rate);
    static ServiceDistribution uniform(double lower, double upper);
    static ServiceDistribution hyperexponential(std::vector<ExponentialPhase> phases);
    // Law of min(base, tau).
    static ServiceDistribution truncated(ServiceDistribution base, double tau);

    // Parses `exp:1.0`, `det:1.0`, `gamma:0.5,1.0`, `unif:0,2`,
    // `hyper:0.4,1.0,0.6,3.0` (weight,rate pairs) and `trunc(<spec>,tau)`.
    // Throws ParseError carrying the offending position.
    static ServiceDistribution parse(std::string_view spec);

    ServiceKind kind() const noexcept;

    double sample(Rng &rng) const;

    // E exp(theta B); +infinity when theta >= mgf_radius() for unbounded laws.
    double mgf(double theta) const;
    // Laplace transform g(s) = E exp(-s B).
    double laplace(double s) const { return mgf(-s); }

    double mean() const;
    // x_F = inf{u >= 0 : F(u) = 1}; +infinity for unbounded support.
    double endpoint() const;
    // sup{theta : mgf(theta) < inf}, i.e. the decay rate of B itself.
    double mgf_radius() const;

    double survival(double x) const;       // P(B > x)
    double prob_at_least(double x) const;  // P(B >= x)

    // Points in [0, inf) where survival() is discontinuous or has a kink.
    std::vector<double> nonsmooth_points() const;

    // Canonical spec string; parse(spec()) reproduces the law exactly.
    std::string spec() const;

    // Truncation accessors; only meaningful when kind() == Truncated.
    const ServiceDistribution &truncation_base() const;
    double truncation_point() const;

private:
    struct Deterministic {
        double value;
    };
    struct Exponential {
        double rate;
    };
    struct Gamma {
        double shape;
        double rate;
    };
    struct Uniform {
        double lower;
        double upper;
    };
    struct HyperExponential {
        std::vector<ExponentialPhase> phases;
    };
    struct Truncated {
        std::shared_ptr<const ServiceDistribution> base;
        double tau;
    };
    using Law = std::variant<Deterministic, Exponential, Gamma, Uniform, HyperExponential, Truncated>;

    explicit ServiceDistribution(Law law) : law_(std::move(law)) {}

    friend double truncated_mgf(const ServiceDistribution &, double, double);
    friend double truncated_mean(const ServiceDistribution &, double);

    Law law_;
};

// E exp(theta (B ^ tau)) for the given base law. Closed forms for
// deterministic, exponential, hyperexponential and uniform bases; adaptive
// quadrature otherwise.
double truncated_mgf(const ServiceDistribution &base, double tau, double theta);
double truncated_mean(const ServiceDistribution &base, double tau);

// Quadrature route for the truncated MGF, valid for any base:
//   E exp(theta (B ^ tau)) = 1 + theta * int_0^tau exp(theta x) P(B > x) dx.
double truncated_mgf_quadrature(const ServiceDistribution &base, double tau, double theta);

}  // namespace fbq
