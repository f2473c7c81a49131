#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "fbq/decay_analytic.hpp"
#include "fbq/errors.hpp"
#include "fbq/numerics.hpp"

using fbq::QueueModel;
using fbq::ServiceDistribution;

namespace {

QueueModel mm1(double lambda, double mu) { return QueueModel(lambda, ServiceDistribution::exponential(mu)); }

struct Reference {
    const char *spec;
    double c;
    double theta_star;
    double theta0;
};

// lambda = 0.5; c, theta* and theta0 from tests/oracles/compute_oracles.py
// (mpmath golden section + findroot at 40 digits).
const std::vector<Reference> kReference{
    {"exp:1.0", 0.085786437626904951, 0.29289321881345248, 0.5},
    {"det:1.0", 0.19314718055994531, 0.69314718055994531, 1.2564312086261697},
    {"gamma:0.5,1.0", 0.30944921102385039, 0.60314973700795013, 0.86602540378443865},
    {"unif:0,2", 0.14085908577047738, 0.5, 0.8966410664503805},
    {"hyper:0.4,1.0,0.6,3.0", 0.24045803791480335, 0.51610205161672314, 0.76892915648257082},
};

}  // namespace

TEST_CASE("QueueModel validates stability") {
    CHECK_THROWS_AS(mm1(2.0, 1.0), fbq::UnstableModel);
    CHECK_THROWS_AS(mm1(1.0, 1.0), fbq::UnstableModel);
    CHECK_THROWS_AS(mm1(0.0, 1.0), fbq::ConfigError);
    CHECK(mm1(0.5, 1.0).load() == 0.5);
}

TEST_CASE("h: examples") {
    for (const auto &r : kReference) CHECK(fbq::h(QueueModel(0.5, ServiceDistribution::parse(r.spec)), 0.0) == 0.0);
    const auto model = mm1(0.5, 1.0);
    CHECK(fbq::h(model, 0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(fbq::h(model, 1.2) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("busy_period_decay: examples") {
    const auto exp_rate = fbq::busy_period_decay(mm1(0.5, 1.0));
    const double mm1_c = std::pow(1.0 - std::sqrt(0.5), 2);
    CHECK(std::abs(exp_rate.rate - mm1_c) < 1e-12);
    CHECK(exp_rate.rate == doctest::Approx(0.0857864).epsilon(1e-6));

    // Grid scan of h over [0, 5] with step 1e-6 gives 0.193147180560 = ln 2 - 0.5.
    const auto det = fbq::busy_period_decay(QueueModel(0.5, ServiceDistribution::deterministic(1.0)));
    CHECK(std::abs(det.rate - (std::log(2.0) - 0.5)) < 1e-12);
    CHECK(std::abs(det.theta_star - std::log(2.0)) < 1e-8);

    const auto far = fbq::busy_period_decay(mm1(0.5, 1.0).truncated(50.0));
    CHECK(std::abs(far.rate - mm1_c) < 1e-6);
}

TEST_CASE("busy_period_decay matches high-precision references") {
    for (const auto &r : kReference) {
        CAPTURE(r.spec);
        const QueueModel model(0.5, ServiceDistribution::parse(r.spec));
        const auto busy = fbq::busy_period_decay(model);
        CHECK(std::abs(busy.rate - r.c) < 1e-12);
        CHECK(std::abs(busy.theta_star - r.theta_star) < 1e-8);
        CHECK(busy.theta_tolerance < 1e-11);
        CHECK(std::abs(fbq::fifo_decay(model) - r.theta0) < 1e-11);
    }
}

TEST_CASE("property: h'(theta*) vanishes by central differences") {
    for (const auto &r : kReference) {
        CAPTURE(r.spec);
        const QueueModel model(0.5, ServiceDistribution::parse(r.spec));
        const auto busy = fbq::busy_period_decay(model);
        const double step = 1e-5;
        const double slope =
            (fbq::h(model, busy.theta_star + step) - fbq::h(model, busy.theta_star - step)) / (2 * step);
        CHECK(std::abs(slope) < 1e-8);
        CHECK(busy.derivative_residual < 1e-8);
    }
}

TEST_CASE("cox_smith_decay: examples and agreement with the Legendre form") {
    const auto e = fbq::cox_smith_decay(mm1(0.5, 1.0));
    CHECK(e.rate == doctest::Approx(0.0857864).epsilon(1e-6));
    CHECK(std::abs(e.zeta - (std::sqrt(0.5) - 1.0)) < 1e-9);

    const auto d = fbq::cox_smith_decay(QueueModel(0.5, ServiceDistribution::deterministic(1.0)));
    CHECK(std::abs(d.zeta + std::log(2.0)) < 1e-9);

    for (const auto &r : kReference) {
        CAPTURE(r.spec);
        const QueueModel model(0.5, ServiceDistribution::parse(r.spec));
        const auto legendre = fbq::busy_period_decay(model);
        const auto cs = fbq::cox_smith_decay(model);
        CHECK(std::abs(legendre.rate - cs.rate) < 1e-8);
        CHECK(std::abs(legendre.theta_star + cs.zeta) < 1e-8);
    }
}

TEST_CASE("truncated_decay_curve: monotone, convergent, vacuous past the endpoint") {
    const auto model = mm1(0.5, 1.0);
    const std::vector<double> taus{0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    const auto curve = fbq::truncated_decay_curve(model, taus);
    REQUIRE(curve.size() == taus.size());
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].rate < curve[i - 1].rate);

    // Grid oracle (step 1e-6 over [0,5]) refined by mpmath.findroot.
    const std::vector<double> frozen{1.7572744208434402, 0.54217467972548253, 0.187677562654359,
                                     0.10081777501092532, 0.086525750020543096, 0.085788965744985947};
    for (std::size_t i = 0; i < curve.size(); ++i) CHECK(std::abs(curve[i].rate - frozen[i]) < 1e-10);

    const double c = fbq::busy_period_decay(model).rate;
    CHECK(std::abs(curve.back().rate - c) < 1e-4);
    for (const auto &p : curve) CHECK(p.rate >= c);

    const QueueModel det(0.5, ServiceDistribution::deterministic(1.0));
    const std::vector<double> at_end{1.0};
    CHECK(fbq::truncated_decay_curve(det, at_end)[0].rate == fbq::busy_period_decay(det).rate);

    const std::vector<double> beyond{1.5};
    CHECK_THROWS_AS(fbq::truncated_decay_curve(det, beyond), fbq::PreconditionError);
}

TEST_CASE("property: c(tau) nonincreasing and nonnegative for random models") {
    // Hand-rolled generator over families, loads and tau grids.
    fbq::Rng rng(31337);
    for (int trial = 0; trial < 25; ++trial) {
        const int family = trial % 4;
        const double scale = 0.5 + rng.uniform();
        ServiceDistribution service = family == 0   ? ServiceDistribution::exponential(1.0 / scale)
                                      : family == 1 ? ServiceDistribution::gamma(0.3 + 2 * rng.uniform(), 1.0 / scale)
                                      : family == 2 ? ServiceDistribution::uniform(0.0, 2.0 * scale)
                                                    : ServiceDistribution::hyperexponential(
                                                          {{0.3, 0.5 / scale}, {0.7, 3.0 / scale}});
        const double rho = 0.1 + 0.8 * rng.uniform();
        const QueueModel model(rho / service.mean(), service);
        std::vector<double> taus;
        double tau = 0.2 * scale;
        const double end = std::min(service.endpoint(), 12.0 * scale);
        while (tau <= end) {
            taus.push_back(tau);
            tau *= 1.6;
        }
        CAPTURE(service.spec());
        CAPTURE(rho);
        const auto curve = fbq::truncated_decay_curve(model, taus);
        const double c = fbq::busy_period_decay(model).rate;
        for (std::size_t i = 0; i < curve.size(); ++i) {
            CHECK(curve[i].rate >= 0.0);
            CHECK(curve[i].rate >= c - 1e-12);
            if (i > 0) CHECK(curve[i].rate <= curve[i - 1].rate + 1e-12);
        }
    }
}

TEST_CASE("fifo_decay: examples") {
    CHECK(std::abs(fbq::fifo_decay(mm1(0.5, 1.0)) - 0.5) < 1e-12);
    CHECK(std::abs(fbq::fifo_decay(mm1(0.9, 1.0)) - 0.1) < 1e-12);
    // Bisection on theta = 0.5 (e^theta - 1) to 1e-10 gives 1.256431208606.
    const QueueModel det(0.5, ServiceDistribution::deterministic(1.0));
    const double theta0 = fbq::fifo_decay(det);
    CHECK(std::abs(theta0 - 1.256431208606) < 1e-9);
    CHECK(std::abs(fbq::h(det, theta0)) < 1e-12);
}

TEST_CASE("property: ordering 0 < c < theta0 < drB and concavity of h") {
    for (const auto &r : kReference) {
        for (double rho : {0.1, 0.5, 0.9}) {
            const auto service = ServiceDistribution::parse(r.spec);
            const QueueModel model(rho / service.mean(), service);
            CAPTURE(r.spec);
            CAPTURE(rho);
            const auto rates = fbq::analytic_rates(model);
            CHECK(rates.c > 0.0);
            CHECK(rates.c < rates.theta0);
            CHECK(rates.theta0 < rates.dr_b);
            CHECK(rates.theta_star < rates.theta0);
            CHECK(std::abs(fbq::h(model, rates.theta0)) < 1e-12);

            const double top = std::isfinite(rates.dr_b) ? 0.99 * rates.dr_b : 3.0 * rates.theta0;
            const int points = 400;
            const double step = top / points;
            double previous_slope = std::numeric_limits<double>::infinity();
            for (int i = 1; i <= points; ++i) {
                const double slope = (fbq::h(model, i * step) - fbq::h(model, (i - 1) * step)) / step;
                CHECK(slope <= previous_slope + 1e-9);
                previous_slope = slope;
            }
        }
    }
}

TEST_CASE("workload_transform: Pollaczek-Khinchin examples") {
    const auto model = mm1(0.5, 1.0);
    CHECK(std::abs(fbq::workload_transform(model, 1e-8) - 1.0) < 1e-6);
    CHECK(fbq::workload_transform(model, 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    double previous = 1.0;
    for (double s = 0.05; s < 20.0; s *= 1.3) {
        const double value = fbq::workload_transform(model, s);
        CHECK(value <= previous);
        CHECK(value > 0.0);
        previous = value;
    }
    CHECK_THROWS_AS(fbq::workload_transform(model, 0.0), fbq::PreconditionError);
    CHECK_THROWS_AS(fbq::workload_transform(model, -1.0), fbq::PreconditionError);
}

TEST_CASE("arrival_log_mgf and the Cramer identity") {
    const auto model = mm1(0.5, 1.0);
    CHECK(fbq::arrival_log_mgf(model, 0.0) == 0.0);
    CHECK(fbq::arrival_log_mgf(model, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::isinf(fbq::arrival_log_mgf(model, 1.0)));
    for (const auto &r : kReference) {
        const QueueModel m(0.5, ServiceDistribution::parse(r.spec));
        CHECK(std::abs(fbq::cramer_decay(m) - fbq::busy_period_decay(m).rate) < 1e-12);
    }
}

TEST_CASE("mm1_closed_forms: examples and agreement with generic solvers") {
    const auto half = fbq::mm1_closed_forms(0.5, 1.0);
    CHECK(half.c_fb == doctest::Approx(0.0857864).epsilon(1e-6));
    CHECK(half.c_fifo == 0.5);
    CHECK(half.dr_b == 1.0);
    const auto quarter = fbq::mm1_closed_forms(0.25, 1.0);
    CHECK(quarter.c_fb == 0.25);
    CHECK(quarter.c_fifo == 0.75);
    CHECK_THROWS_AS(fbq::mm1_closed_forms(1.0, 1.0), fbq::UnstableModel);
    const auto critical = fbq::mm1_closed_forms(0.999999, 1.0);
    CHECK(critical.c_fb < 1e-12);
    CHECK(critical.c_fifo < 1e-5);

    for (double mu : {0.5, 1.0, 4.0}) {
        for (int k = 1; k <= 9; ++k) {
            const double lambda = 0.1 * k * mu;
            const auto closed = fbq::mm1_closed_forms(lambda, mu);
            const auto model = mm1(lambda, mu);
            CHECK(std::abs(fbq::busy_period_decay(model).rate - closed.c_fb) < 1e-10);
            CHECK(std::abs(fbq::fifo_decay(model) - closed.c_fifo) < 1e-10);
            CHECK(model.service().mgf_radius() == closed.dr_b);
        }
    }
}

TEST_CASE("numerics: maximize_concave reports its exit state") {
    const auto parabola = [](double x) { return -(x - 2.0) * (x - 2.0) + 1.0; };
    const auto best = fbq::numerics::maximize_concave(parabola, 0.0, std::numeric_limits<double>::infinity());
    CHECK(std::abs(best.argmax - 2.0) < 1e-10);
    CHECK(best.value == doctest::Approx(1.0));
    CHECK(best.tolerance <= 1e-11);
    // A decreasing objective has its maximum on the boundary: no interior bracket.
    CHECK_THROWS_AS(fbq::numerics::maximize_concave([](double x) { return -x; }, 0.0, 10.0), fbq::SolverError);
    CHECK_THROWS_AS(fbq::numerics::bisect([](double x) { return x * x + 1; }, -1.0, 1.0), fbq::SolverError);
}
