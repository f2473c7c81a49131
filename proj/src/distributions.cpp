#include "fbq/distributions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "fbq/errors.hpp"

namespace fbq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// (e^y - 1) / y, continuous at 0.
double expm1_over(double y) {
    if (y == 0.0) return 1.0;
    return std::expm1(y) / y;
}

// E exp(theta (B ^ tau)) for B ~ Exp(rate).
double truncated_exponential_mgf(double rate, double tau, double theta) {
    const double x = (theta - rate) * tau;
    return rate * tau * expm1_over(x) + std::exp(x);
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require(bool ok, const std::string &what) {
    if (!ok) throw ConfigError(what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

ServiceDistribution ServiceDistribution::deterministic(double value) {
    require(finite_positive(value), "deterministic service time must be finite and > 0");
    return ServiceDistribution(Deterministic{value});
}

ServiceDistribution ServiceDistribution::exponential(double rate) {
    require(finite_positive(rate), "exponential rate must be finite and > 0");
    return ServiceDistribution(Exponential{rate});
}

ServiceDistribution ServiceDistribution::gamma(double shape, double rate) {
    require(finite_positive(shape), "gamma shape must be finite and > 0");
    require(finite_positive(rate), "gamma rate must be finite and > 0");
    return ServiceDistribution(Gamma{shape, rate});
}

ServiceDistribution ServiceDistribution::uniform(double lower, double upper) {
    require(std::isfinite(lower) && lower >= 0.0, "uniform lower bound must be finite and >= 0");
    require(std::isfinite(upper) && upper > lower, "uniform upper bound must exceed the lower bound");
    return ServiceDistribution(Uniform{lower, upper});
}

ServiceDistribution ServiceDistribution::hyperexponential(std::vector<ExponentialPhase> phases) {
    require(!phases.empty(), "hyperexponential needs at least one phase");
    double total = 0.0;
    for (const auto &p : phases) {
        require(finite_positive(p.weight), "hyperexponential weights must be > 0");
        require(finite_positive(p.rate), "hyperexponential rates must be finite and > 0");
        total += p.weight;
    }
    require(std::abs(total - 1.0) <= 1e-12, "hyperexponential weights must sum to 1");
    return ServiceDistribution(HyperExponential{std::move(phases)});
}

ServiceDistribution ServiceDistribution::truncated(ServiceDistribution base, double tau) {
    require(finite_positive(tau), "truncation point must be finite and > 0");
    return ServiceDistribution(
        Truncated{std::make_shared<const ServiceDistribution>(std::move(base)), tau});
}

ServiceKind ServiceDistribution::kind() const noexcept {
    return static_cast<ServiceKind>(law_.index());
}

double ServiceDistribution::sample(Rng &rng) const {
    return std::visit(
        Overloaded{
            [](const Deterministic &d) { return d.value; },
            [&](const Exponential &e) { return rng.exponential(e.rate); },
            [&](const Gamma &g) {
                // Marsaglia-Tsang squeeze; shape < 1 is boosted via U^{1/shape}.
                const double shape = g.shape < 1.0 ? g.shape + 1.0 : g.shape;
                const double d = shape - 1.0 / 3.0;
                const double c = 1.0 / std::sqrt(9.0 * d);
                double draw;
                for (;;) {
                    const double x = rng.normal();
                    double v = 1.0 + c * x;
                    if (v <= 0.0) continue;
                    v = v * v * v;
                    const double u = rng.uniform();
                    if (u < 1.0 - 0.0331 * x * x * x * x ||
                        std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
                        draw = d * v;
                        break;
                    }
                }
                if (g.shape < 1.0) draw *= std::pow(rng.uniform(), 1.0 / g.shape);
                return draw / g.rate;
            },
            [&](const Uniform &u) { return u.lower + (u.upper - u.lower) * rng.uniform(); },
            [&](const HyperExponential &h) {
                const double u = rng.uniform();
                double acc = 0.0;
                for (const auto &p : h.phases) {
                    acc += p.weight;
                    if (u < acc) return rng.exponential(p.rate);
                }
                return rng.exponential(h.phases.back().rate);
            },
            [&](const Truncated &t) { return std::min(t.base->sample(rng), t.tau); },
        },
        law_);
}

double ServiceDistribution::mgf(double theta) const {
    if (theta == 0.0) return 1.0;
    return std::visit(
        Overloaded{
            [&](const Deterministic &d) { return std::exp(theta * d.value); },
            [&](const Exponential &e) { return theta < e.rate ? e.rate / (e.rate - theta) : kInf; },
            [&](const Gamma &g) {
                return theta < g.rate ? std::pow(g.rate / (g.rate - theta), g.shape) : kInf;
            },
            [&](const Uniform &u) {
                const double width = u.upper - u.lower;
                const double y = theta * width;
                double ratio;
                if (std::abs(y) < 1e-4) {
                    ratio = 1.0 + y / 2.0 + y * y / 6.0 + y * y * y / 24.0;
                } else {
                    ratio = std::expm1(y) / y;
                }
                return std::exp(theta * u.lower) * ratio;
            },
            [&](const HyperExponential &h) {
                double out = 0.0;
                for (const auto &p : h.phases) {
                    if (theta >= p.rate) return kInf;
                    out += p.weight * p.rate / (p.rate - theta);
                }
                return out;
            },
            [&](const Truncated &t) { return truncated_mgf(*t.base, t.tau, theta); },
        },
        law_);
}

double ServiceDistribution::mean() const {
    return std::visit(
        Overloaded{
            [](const Deterministic &d) { return d.value; },
            [](const Exponential &e) { return 1.0 / e.rate; },
            [](const Gamma &g) { return g.shape / g.rate; },
            [](const Uniform &u) { return 0.5 * (u.lower + u.upper); },
            [](const HyperExponential &h) {
                double out = 0.0;
                for (const auto &p : h.phases) out += p.weight / p.rate;
                return out;
            },
            [](const Truncated &t) { return truncated_mean(*t.base, t.tau); },
        },
        law_);
}

double ServiceDistribution::endpoint() const {
    return std::visit(Overloaded{
                          [](const Deterministic &d) { return d.value; },
                          [](const Uniform &u) { return u.upper; },
                          [](const Truncated &t) { return std::min(t.tau, t.base->endpoint()); },
                          [](const auto &) { return kInf; },
                      },
                      law_);
}

double ServiceDistribution::mgf_radius() const {
    return std::visit(Overloaded{
                          [](const Exponential &e) { return e.rate; },
                          [](const Gamma &g) { return g.rate; },
                          [](const HyperExponential &h) {
                              double r = kInf;
                              for (const auto &p : h.phases) r = std::min(r, p.rate);
                              return r;
                          },
                          [](const auto &) { return kInf; },
                      },
                      law_);
}

double ServiceDistribution::survival(double x) const {
    if (x < 0.0) return 1.0;
    return std::visit(
        Overloaded{
            [&](const Deterministic &d) { return x < d.value ? 1.0 : 0.0; },
            [&](const Exponential &e) { return std::exp(-e.rate * x); },
            [&](const Gamma &g) { return boost::math::gamma_q(g.shape, g.rate * x); },
            [&](const Uniform &u) {
                if (x <= u.lower) return 1.0;
                if (x >= u.upper) return 0.0;
                return (u.upper - x) / (u.upper - u.lower);
            },
            [&](const HyperExponential &h) {
                double out = 0.0;
                for (const auto &p : h.phases) out += p.weight * std::exp(-p.rate * x);
                return out;
            },
            [&](const Truncated &t) { return x < t.tau ? t.base->survival(x) : 0.0; },
        },
        law_);
}

double ServiceDistribution::prob_at_least(double x) const {
    return std::visit(Overloaded{
                          [&](const Deterministic &d) { return x <= d.value ? 1.0 : 0.0; },
                          [&](const Truncated &t) { return x <= t.tau ? t.base->prob_at_least(x) : 0.0; },
                          [&](const auto &) { return survival(x); },
                      },
                      law_);
}

std::vector<double> ServiceDistribution::nonsmooth_points() const {
    return std::visit(Overloaded{
                          [](const Deterministic &d) { return std::vector<double>{d.value}; },
                          [](const Uniform &u) { return std::vector<double>{u.lower, u.upper}; },
                          [](const Truncated &t) {
                              auto pts = t.base->nonsmooth_points();
                              std::erase_if(pts, [&](double p) { return p >= t.tau; });
                              pts.push_back(t.tau);
                              return pts;
                          },
                          [](const auto &) { return std::vector<double>{}; },
                      },
                      law_);
}

std::string ServiceDistribution::spec() const {
    return std::visit(
        Overloaded{
            [](const Deterministic &d) { return "det:" + format_number(d.value); },
            [](const Exponential &e) { return "exp:" + format_number(e.rate); },
            [](const Gamma &g) { return "gamma:" + format_number(g.shape) + "," + format_number(g.rate); },
            [](const Uniform &u) { return "unif:" + format_number(u.lower) + "," + format_number(u.upper); },
            [](const HyperExponential &h) {
                std::string out = "hyper:";
                for (std::size_t i = 0; i < h.phases.size(); ++i) {
                    if (i) out += ',';
                    out += format_number(h.phases[i].weight) + "," + format_number(h.phases[i].rate);
                }
                return out;
            },
            [](const Truncated &t) { return "trunc(" + t.base->spec() + "," + format_number(t.tau) + ")"; },
        },
        law_);
}

const ServiceDistribution &ServiceDistribution::truncation_base() const {
    const auto *t = std::get_if<Truncated>(&law_);
    if (!t) throw PreconditionError("distribution is not a truncation");
    return *t->base;
}

double ServiceDistribution::truncation_point() const {
    const auto *t = std::get_if<Truncated>(&law_);
    if (!t) throw PreconditionError("distribution is not a truncation");
    return t->tau;
}

double truncated_mgf(const ServiceDistribution &base, double tau, double theta) {
    if (theta == 0.0) return 1.0;
    using SD = ServiceDistribution;
    return std::visit(
        Overloaded{
            [&](const SD::Deterministic &d) { return std::exp(theta * std::min(d.value, tau)); },
            [&](const SD::Exponential &e) { return truncated_exponential_mgf(e.rate, tau, theta); },
            [&](const SD::HyperExponential &h) {
                double out = 0.0;
                for (const auto &p : h.phases) out += p.weight * truncated_exponential_mgf(p.rate, tau, theta);
                return out;
            },
            [&](const SD::Uniform &u) {
                if (tau >= u.upper) return base.mgf(theta);
                if (tau <= u.lower) return std::exp(theta * tau);
                const double width = u.upper - u.lower;
                const double body = std::exp(theta * u.lower) * (tau - u.lower) *
                                    expm1_over(theta * (tau - u.lower));
                return (body + std::exp(theta * tau) * (u.upper - tau)) / width;
            },
            [&](const SD::Truncated &t) { return truncated_mgf(*t.base, std::min(t.tau, tau), theta); },
            [&](const SD::Gamma &) { return truncated_mgf_quadrature(base, tau, theta); },
        },
        base.law_);
}

double truncated_mean(const ServiceDistribution &base, double tau) {
    using SD = ServiceDistribution;
    return std::visit(
        Overloaded{
            [&](const SD::Deterministic &d) { return std::min(d.value, tau); },
            [&](const SD::Exponential &e) { return -std::expm1(-e.rate * tau) / e.rate; },
            [&](const SD::HyperExponential &h) {
                double out = 0.0;
                for (const auto &p : h.phases) out += p.weight * -std::expm1(-p.rate * tau) / p.rate;
                return out;
            },
            [&](const SD::Uniform &u) {
                if (tau >= u.upper) return base.mean();
                if (tau <= u.lower) return tau;
                const double width = u.upper - u.lower;
                const double gone = u.upper - tau;
                return u.lower + (width * width - gone * gone) / (2.0 * width);
            },
            [&](const SD::Gamma &g) {
                const double z = g.rate * tau;
                return g.shape / g.rate * boost::math::gamma_p(g.shape + 1.0, z) +
                       tau * boost::math::gamma_q(g.shape, z);
            },
            [&](const SD::Truncated &t) { return truncated_mean(*t.base, std::min(t.tau, tau)); },
        },
        base.law_);
}

double truncated_mgf_quadrature(const ServiceDistribution &base, double tau, double theta) {
    if (theta == 0.0) return 1.0;
    std::vector<double> cuts{0.0};
    for (double p : base.nonsmooth_points())
        if (p > 0.0 && p < tau) cuts.push_back(p);
    cuts.push_back(tau);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    thread_local boost::math::quadrature::tanh_sinh<double> integrator;
    const auto integrand = [&](double x) { return std::exp(theta * x) * base.survival(x); };
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        // The integrand is bounded, so endpoint clustering costs nothing.
        integral += integrator.integrate(integrand, cuts[i], cuts[i + 1], 1e-15);
    }
    return 1.0 + theta * integral;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class SpecParser {
public:
    explicit SpecParser(std::string_view text) : text_(text) {}

    ServiceDistribution parse_all() {
        auto dist = parse_spec(false);
        if (pos_ != text_.size()) fail(pos_, "unexpected trailing characters");
        return dist;
    }

private:
    [[noreturn]] void fail(std::size_t at, const std::string &what) const {
        throw ParseError(std::string(text_), at, what);
    }

    bool consume(std::string_view token) {
        if (text_.substr(pos_, token.size()) == token) {
            pos_ += token.size();
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (pos_ >= text_.size() || text_[pos_] != c) fail(pos_, std::string("expected '") + c + "'");
        ++pos_;
    }

    double number() {
        const char *first = text_.data() + pos_;
        const char *last = text_.data() + text_.size();
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr == first) fail(pos_, "expected a number");
        if (!std::isfinite(value)) fail(pos_, "number must be finite");
        pos_ += static_cast<std::size_t>(ptr - first);
        return value;
    }

    template <class F>
    ServiceDistribution build(std::size_t at, F &&make) {
        try {
            return make();
        } catch (const ParseError &) {
            throw;
        } catch (const ConfigError &e) {
            fail(at, e.what());
        }
    }

    ServiceDistribution parse_spec(bool inside_trunc) {
        const std::size_t start = pos_;
        if (consume("trunc(")) {
            auto base = parse_spec(true);
            expect(',');
            const std::size_t at = pos_;
            const double tau = number();
            expect(')');
            return build(at, [&] { return ServiceDistribution::truncated(std::move(base), tau); });
        }

        const std::size_t colon = text_.find(':', pos_);
        if (colon == std::string_view::npos) fail(pos_, "expected '<family>:<parameters>' or 'trunc('");
        const std::string_view family = text_.substr(pos_, colon - pos_);
        pos_ = colon + 1;

        std::size_t arity = 0;
        if (family == "exp" || family == "det") {
            arity = 1;
        } else if (family == "gamma" || family == "unif") {
            arity = 2;
        } else if (family != "hyper") {
            fail(start, "unknown distribution family '" + std::string(family) + "'");
        }

        std::vector<std::pair<double, std::size_t>> values;
        auto read = [&] {
            const std::size_t at = pos_;
            values.emplace_back(number(), at);
        };
        if (arity > 0) {
            read();
            for (std::size_t i = 1; i < arity; ++i) {
                expect(',');
                read();
            }
            if (!inside_trunc && pos_ < text_.size() && text_[pos_] == ',')
                fail(pos_ + 1, "too many parameters for '" + std::string(family) + "'");
        } else {
            // weight,rate pairs; inside trunc( ) a lone trailing number is tau.
            for (;;) {
                read();
                expect(',');
                read();
                if (pos_ >= text_.size() || text_[pos_] != ',') break;
                if (inside_trunc) {
                    const std::size_t saved = pos_;
                    ++pos_;
                    number();
                    const bool is_tau = pos_ < text_.size() && text_[pos_] == ')';
                    pos_ = saved;
                    if (is_tau) break;
                }
                ++pos_;
            }
        }

        const std::size_t at = values.front().second;
        return build(at, [&] {
            if (family == "exp") return ServiceDistribution::exponential(values[0].first);
            if (family == "det") return ServiceDistribution::deterministic(values[0].first);
            if (family == "gamma") return ServiceDistribution::gamma(values[0].first, values[1].first);
            if (family == "unif") return ServiceDistribution::uniform(values[0].first, values[1].first);
            std::vector<ExponentialPhase> phases;
            for (std::size_t i = 0; i < values.size(); i += 2)
                phases.push_back({values[i].first, values[i + 1].first});
            return ServiceDistribution::hyperexponential(std::move(phases));
        });
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

ServiceDistribution ServiceDistribution::parse(std::string_view spec) {
    return SpecParser(spec).parse_all();
}

}  // namespace fbq
