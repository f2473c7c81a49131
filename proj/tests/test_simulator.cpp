#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "fbq/decay_analytic.hpp"
#include "fbq/errors.hpp"
#include "fbq/queue_engine.hpp"
#include "fbq/simulator.hpp"

using namespace fbq;

namespace {

const Discipline kAll[] = {Discipline::FB, Discipline::FIFO, Discipline::LIFO_PREEMPTIVE, Discipline::PS};

QueueModel model(double lambda, const char *spec) { return QueueModel(lambda, ServiceDistribution::parse(spec)); }

double mean(const std::vector<double> &v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

// Brute-force reference for FB and PS: every customer carries its own
// attained service and the served set is recomputed at each event.
std::map<std::uint64_t, double> reference_departures(Discipline d, const std::vector<Customer> &arrivals) {
    struct Job {
        Customer c;
        double attained;
    };
    std::vector<Job> present;
    std::map<std::uint64_t, double> out;
    double clock = 0.0;
    std::size_t next = 0;
    const double eps = 1e-12;
    const auto served = [&]() {
        std::vector<std::size_t> idx;
        if (d == Discipline::PS) {
            for (std::size_t i = 0; i < present.size(); ++i) idx.push_back(i);
            return idx;
        }
        double least = INFINITY;
        for (const auto &j : present) least = std::min(least, j.attained);
        for (std::size_t i = 0; i < present.size(); ++i)
            if (present[i].attained <= least + eps) idx.push_back(i);
        return idx;
    };
    while (next < arrivals.size() || !present.empty()) {
        if (present.empty()) {
            clock = arrivals[next].arrival;
            present.push_back({arrivals[next++], 0.0});
            continue;
        }
        const auto idx = served();
        const double share = 1.0 / idx.size();
        // Time until a served job finishes, or (FB) the served set catches up.
        double dt = INFINITY;
        double least = present[idx[0]].attained;
        for (auto i : idx) dt = std::min(dt, (present[i].c.requirement - present[i].attained) / share);
        if (d == Discipline::FB) {
            for (const auto &j : present)
                if (j.attained > least + eps) dt = std::min(dt, (j.attained - least) / share);
        }
        const double t_arr = next < arrivals.size() ? arrivals[next].arrival : INFINITY;
        const bool arrival_first = t_arr - clock <= dt;
        const double step = arrival_first ? t_arr - clock : dt;
        for (auto i : idx) present[i].attained += step * share;
        clock = arrival_first ? t_arr : clock + step;
        for (std::size_t i = present.size(); i-- > 0;) {
            if (present[i].attained >= present[i].c.requirement - eps) {
                out[present[i].c.id] = clock;
                present.erase(present.begin() + static_cast<std::ptrdiff_t>(i));
            }
        }
        if (arrival_first) present.push_back({arrivals[next++], 0.0});
    }
    return out;
}

std::vector<Customer> random_arrivals(std::size_t n, double lambda, const ServiceDistribution &s, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Customer> out;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t += rng.exponential(lambda);
        out.push_back({i, t, s.sample(rng), false});
    }
    return out;
}

std::map<std::uint64_t, double> engine_departures(Discipline d, const std::vector<Customer> &arrivals) {
    auto engine = make_engine(d);
    std::map<std::uint64_t, double> out;
    std::vector<Departure> deps;
    double clock = 0.0;
    std::size_t next = 0;
    while (next < arrivals.size() || engine->size() > 0) {
        const double t_arr = next < arrivals.size() ? arrivals[next].arrival : INFINITY;
        const double dt = engine->time_to_next_event();
        if (clock + dt <= t_arr) {
            clock += dt;
            engine->fire(clock, deps);
        } else {
            engine->advance(t_arr - clock);
            clock = t_arr;
            while (engine->size() > 0 && engine->time_to_next_event() <= 0.0) engine->fire(clock, deps);
            engine->arrive(arrivals[next++]);
        }
        engine->check_invariants();
        for (const auto &dep : deps) out[dep.customer.id] = dep.time;
        deps.clear();
    }
    return out;
}

}  // namespace

TEST_CASE("disciplines parse and print") {
    for (auto d : kAll) CHECK(parse_discipline(to_string(d)) == d);
    CHECK_THROWS_AS(parse_discipline("srpt"), ConfigError);
}

TEST_CASE("FB and PS engines agree with a brute-force reference") {
    for (const char *spec : {"exp:1", "det:1", "unif:0,2", "hyper:0.4,1,0.6,3"}) {
        const auto s = ServiceDistribution::parse(spec);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto arrivals = random_arrivals(300, 0.7 / s.mean(), s, seed);
            for (auto d : {Discipline::FB, Discipline::PS}) {
                const auto expected = reference_departures(d, arrivals);
                const auto got = engine_departures(d, arrivals);
                REQUIRE(got.size() == arrivals.size());
                REQUIRE(expected.size() == arrivals.size());
                for (const auto &[id, t] : expected) CHECK(got.at(id) == doctest::Approx(t).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("FIFO and LIFO engines follow their service orders") {
    // Arrivals at 0, 0.5, 1 with requirements 2, 1, 0.25.
    const std::vector<Customer> arrivals{{0, 0.0, 2.0, false}, {1, 0.5, 1.0, false}, {2, 1.0, 0.25, false}};
    const auto fifo = engine_departures(Discipline::FIFO, arrivals);
    CHECK(fifo.at(0) == doctest::Approx(2.0));
    CHECK(fifo.at(1) == doctest::Approx(3.0));
    CHECK(fifo.at(2) == doctest::Approx(3.25));
    const auto lifo = engine_departures(Discipline::LIFO_PREEMPTIVE, arrivals);
    CHECK(lifo.at(2) == doctest::Approx(1.25));
    CHECK(lifo.at(1) == doctest::Approx(1.75));
    CHECK(lifo.at(0) == doctest::Approx(3.25));
    const auto fb = engine_departures(Discipline::FB, arrivals);
    // At 1.0: ages 0.5 / 0.5 / 0; the newcomer finishes alone at 1.25, then the
    // pair share until customer 1 completes at age 1.
    CHECK(fb.at(2) == doctest::Approx(1.25));
    CHECK(fb.at(1) == doctest::Approx(2.25));
    CHECK(fb.at(0) == doctest::Approx(3.25));
}

TEST_CASE("engine clone is independent") {
    auto engine = make_engine(Discipline::FB);
    engine->arrive({0, 0.0, 1.0, false});
    auto copy = engine->clone();
    copy->arrive({1, 0.0, 1.0, false});
    CHECK(engine->size() == 1);
    CHECK(copy->size() == 2);
    CHECK(engine->time_to_next_event() == doctest::Approx(1.0));
    CHECK(copy->time_to_next_event() == doctest::Approx(2.0));
}

TEST_CASE("run_queue rejects bad configurations") {
    const auto m = model(0.5, "exp:1");
    CHECK_THROWS_AS(run_queue(m, Discipline::FB, 0, 0, 1), ConfigError);
    CHECK_THROWS_AS(run_queue(m, Discipline::FB, 10, 11, 1), ConfigError);
    RunOptions thin;
    thin.record_every = 0;
    CHECK_THROWS_AS(run_queue(m, Discipline::FB, 10, 0, 1, thin), ConfigError);
}

TEST_CASE("instability guard aborts") {
    RunOptions guard;
    guard.max_in_system = 5;
    CHECK_THROWS_AS(run_queue(model(0.99, "exp:1"), Discipline::FIFO, 100000, 0, 3, guard), SimulationAborted);
}

TEST_CASE("lone customer has sojourn equal to its service") {
    const auto m = model(1e-9, "gamma:2,1");
    for (auto d : kAll) {
        const auto run = run_queue(m, d, 1, 0, 11);
        REQUIRE(run.sojourns.size() == 1);
        CHECK(run.sojourns[0].sojourn == doctest::Approx(run.sojourns[0].service).epsilon(1e-12));
        REQUIRE(run.busy_periods.size() == 1);
        CHECK(run.busy_periods[0] == doctest::Approx(run.sojourns[0].service).epsilon(1e-12));
    }
}

TEST_CASE("runs are reproducible from the seed") {
    const auto m = model(0.6, "hyper:0.4,1,0.6,3");
    for (auto d : kAll) {
        const auto a = run_queue(m, d, 5000, 100, 77);
        const auto b = run_queue(m, d, 5000, 100, 77);
        REQUIRE(a.sojourns.size() == b.sojourns.size());
        for (std::size_t i = 0; i < a.sojourns.size(); ++i) {
            CHECK(a.sojourns[i].sojourn == b.sojourns[i].sojourn);
            CHECK(a.sojourns[i].service == b.sojourns[i].service);
        }
        CHECK(a.busy_periods == b.busy_periods);
        const auto c = run_queue(m, d, 5000, 100, 78);
        CHECK(c.busy_periods != a.busy_periods);
    }
}

TEST_CASE("sojourn bounds and work conservation per busy period") {
    RunOptions opt;
    opt.trace = true;
    for (const char *spec : {"exp:1", "det:1", "gamma:0.5,1", "unif:0,2"}) {
        const auto m = model(0.5, spec);
        for (auto d : kAll) {
            const auto run = run_queue(m, d, 20000, 1000, 5, opt);
            CHECK(run.counters.served == run.sojourns.size());
            for (const auto &s : run.sojourns) CHECK(s.sojourn >= s.service - 1e-10);  // rounding of epochs within a busy period
            REQUIRE(run.busy_trace.size() == run.busy_periods.size());
            for (const auto &bp : run.busy_trace)
                CHECK(bp.end - bp.start == doctest::Approx(bp.work).epsilon(1e-9).scale(bp.end));
            // Every recorded customer leaves no later than its busy period ends.
            for (const auto &c : run.trace) {
                const auto &bp = run.busy_trace.at(c.busy_period);
                CHECK(c.departure <= bp.end);
                CHECK(c.arrival >= bp.start);
            }
        }
    }
}

TEST_CASE("busy-period boundaries do not depend on the discipline") {
    RunOptions opt;
    opt.trace = true;
    const auto m = model(0.7, "gamma:0.5,1");
    const auto ref = run_queue(m, Discipline::FIFO, 20000, 500, 9, opt);
    for (auto d : kAll) {
        const auto run = run_queue(m, d, 20000, 500, 9, opt);
        REQUIRE(run.busy_trace.size() == ref.busy_trace.size());
        for (std::size_t i = 0; i < ref.busy_trace.size(); ++i) {
            CHECK(run.busy_trace[i].start == ref.busy_trace[i].start);
            CHECK(run.busy_trace[i].end == doctest::Approx(ref.busy_trace[i].end).epsilon(1e-10));
            CHECK(run.busy_trace[i].customers == ref.busy_trace[i].customers);
        }
    }
}

TEST_CASE("deterministic service under FB: everyone leaves at the busy-period end") {
    RunOptions opt;
    opt.trace = true;
    const auto run = run_queue(model(0.5, "det:1"), Discipline::FB, 100000, 1000, 21, opt);
    REQUIRE(!run.trace.empty());
    std::size_t multi = 0;
    for (const auto &c : run.trace) CHECK(c.departure == run.busy_trace.at(c.busy_period).end);
    for (const auto &bp : run.busy_trace) multi += bp.customers > 1;
    CHECK(multi > 1000);
}

TEST_CASE("M/M/1 FIFO mean sojourn") {
    const auto run = run_queue(model(0.5, "exp:1"), Discipline::FIFO, 1000000, 10000, 1);
    double total = 0.0;
    for (const auto &s : run.sojourns) total += s.sojourn;
    CHECK(total / run.sojourns.size() == doctest::Approx(2.0).epsilon(0.02));
    // PASTA: the fraction of arrivals finding the server busy is rho.
    const double busy = double(run.counters.arrivals_finding_busy) / run.counters.arrivals_observed;
    CHECK(busy == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("thinning keeps every k-th recorded customer") {
    RunOptions opt;
    opt.record_every = 10;
    const auto m = model(0.5, "exp:1");
    const auto full = run_queue(m, Discipline::FIFO, 10000, 100, 4);
    const auto thin = run_queue(m, Discipline::FIFO, 10000, 100, 4, opt);
    CHECK(thin.record_start == full.record_start);
    const std::size_t recorded = 10000 - full.record_start;
    CHECK(full.sojourns.size() == recorded);
    CHECK(thin.sojourns.size() == (recorded + 9) / 10);
    CHECK(thin.time_to_empty.size() == thin.sojourns.size());
    CHECK(thin.busy_periods == full.busy_periods);
}

TEST_CASE("busy periods") {
    const auto m = model(0.5, "exp:1");
    SUBCASE("mean EB / (1 - rho)") {
        const auto l = sample_busy_periods(m, 1000000, 3);
        CHECK(mean(l) == doctest::Approx(2.0).epsilon(0.02));
    }
    SUBCASE("negligible traffic: busy period is the first service") {
        const auto tiny = model(1e-6, "exp:1");
        const auto l = sample_busy_periods(tiny, 1000, 3);
        const auto l_star = sample_busy_periods(tiny, 1000, 3, FirstService::exactly(2.5));
        std::size_t equal = 0;
        for (double x : l_star) equal += x == 2.5;
        CHECK(equal >= 995);
        CHECK(mean(l) == doctest::Approx(1.0).epsilon(0.1));
    }
    SUBCASE("first service of size tau dominates the generic busy period in the tau-queue") {
        const auto tq = m.truncated(1.0);
        auto generic = sample_busy_periods(tq, 200000, 8);
        auto starred = sample_busy_periods(tq, 200000, 9, FirstService::exactly(1.0));
        std::sort(generic.begin(), generic.end());
        std::sort(starred.begin(), starred.end());
        for (double q : {0.1, 0.25, 0.5, 0.75, 0.9, 0.99}) {
            const auto k = static_cast<std::size_t>(q * generic.size());
            CHECK(starred[k] > generic[k]);
        }
        for (double x : starred) CHECK(x >= 1.0);
    }
    SUBCASE("at_least conditions by rejection") {
        const auto l = sample_busy_periods(m, 10000, 4, FirstService::at_least(2.0));
        for (double x : l) CHECK(x >= 2.0);
        CHECK_THROWS_AS(sample_busy_periods(m, 10, 4, FirstService::at_least(20.0)), SimulationAborted);
        CHECK_THROWS_AS(sample_busy_periods(model(0.5, "det:1"), 10, 4, FirstService::at_least(2.0)),
                        PreconditionError);
    }
}

TEST_CASE("residual life") {
    SUBCASE("constant lengths give a uniform residual") {
        Rng rng(5);
        const std::vector<double> lengths(100, 3.0);
        auto r = residual_life(lengths, 200000, rng);
        for (double x : r) CHECK((x > 0.0 && x < 3.0));
        std::sort(r.begin(), r.end());
        for (double q : {0.1, 0.5, 0.9}) CHECK(r[static_cast<std::size_t>(q * r.size())] == doctest::Approx(3.0 * q).epsilon(0.02));
    }
    SUBCASE("length bias picks long periods proportionally") {
        Rng rng(6);
        const std::vector<double> lengths{1.0, 3.0};
        const auto r = residual_life(lengths, 100000, rng);
        std::size_t above = 0;
        for (double x : r) above += x > 1.0;
        // P(pick 3) = 3/4, then P(U*3 > 1) = 2/3.
        CHECK(double(above) / r.size() == doctest::Approx(0.5).epsilon(0.02));
    }
    SUBCASE("mean of the busy-period residual is E L^2 / (2 E L)") {
        const auto m = model(0.5, "exp:1");
        const auto r = sample_residual_busy(m, 100000, 12);
        const auto l = sample_busy_periods(m, 2000000, 13);
        double s1 = 0.0, s2 = 0.0;
        for (double x : l) {
            s1 += x;
            s2 += x * x;
        }
        const double target = s2 / (2.0 * s1);
        CHECK(mean(r) == doctest::Approx(target).epsilon(0.03));
        // E L^2 = E B^2 / (1 - rho)^3 = 16, E L = 2.
        CHECK(mean(r) == doctest::Approx(4.0).epsilon(0.03));
    }
    SUBCASE("bad inputs") {
        Rng rng(1);
        CHECK_THROWS_AS(residual_life(std::vector<double>{}, 3, rng), PreconditionError);
        CHECK_THROWS_AS(residual_life(std::vector<double>{0.0, 0.0}, 3, rng), PreconditionError);
    }
}

TEST_CASE("tagged FB customers") {
    const auto m = model(0.5, "exp:1");
    SUBCASE("empty system and no traffic: V(tau) = tau") {
        ProbeOptions opt;
        opt.warmup = 0;
        const auto run = conditional_sojourn_fb(model(1e-9, "exp:1"), 0.7, 20, 2, opt);
        for (double v : run.sojourns) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("fraction finding a busy tau-queue is lambda E(B ^ tau)") {
        const auto run = conditional_sojourn_fb(m, 1.0, 100000, 3);
        const double p = double(run.arrivals_finding_busy) / run.arrivals_observed;
        CHECK(p == doctest::Approx(0.5 * (1.0 - std::exp(-1.0))).epsilon(0.01));
        for (double v : run.sojourns) CHECK(v >= 1.0 - 1e-12);
    }
    SUBCASE("reproducible and bounded below by the tag size") {
        const auto a = mixed_conditional_sojourn_fb(m, 2000, 4);
        const auto b = mixed_conditional_sojourn_fb(m, 2000, 4);
        CHECK(a.sojourns == b.sojourns);
        for (std::size_t i = 0; i < a.sojourns.size(); ++i) CHECK(a.sojourns[i] >= a.sizes[i] - 1e-10);
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(conditional_sojourn_fb(model(0.5, "det:1"), 2.0, 10, 1), PreconditionError);
        CHECK_THROWS_AS(conditional_sojourn_fb(m, 0.0, 10, 1), PreconditionError);
    }
}
