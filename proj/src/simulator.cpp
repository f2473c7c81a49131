#include "fbq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fbq/errors.hpp"

namespace fbq {

namespace {

// Stream ids under a common seed, so that the samplers never share draws.
constexpr std::uint64_t kQueueStream = 0;
constexpr std::uint64_t kProbeMainStream = 1;
constexpr std::uint64_t kProbeTagStream = 2;
constexpr std::uint64_t kBusyStream = 3;
constexpr std::uint64_t kResidualStream = 4;

constexpr std::uint64_t kTagId = std::numeric_limits<std::uint64_t>::max();

// Moves one engine through time between arrivals.
class Driver {
public:
    Driver(std::unique_ptr<QueueEngine> engine, std::size_t max_in_system)
        : engine_(std::move(engine)), max_in_system_(max_in_system) {}

    // Fires every internal event up to and including time t, then moves the
    // clock to t. Departures are appended to `out`.
    void run_until(double t, std::vector<Departure> &out) {
        for (;;) {
            const double dt = engine_->time_to_next_event();
            if (!(clock_ + dt <= t)) break;
            clock_ += dt;
            engine_->fire(clock_, out);
        }
        engine_->advance(t - clock_);
        clock_ = t;
        // Rounding in advance() can land exactly on an event level.
        while (engine_->size() > 0 && engine_->time_to_next_event() <= 0.0) engine_->fire(clock_, out);
    }

    void admit(const Customer &c) {
        engine_->arrive(c);
        if (engine_->size() > max_in_system_)
            throw SimulationAborted("more than " + std::to_string(max_in_system_) + " customers in system at t = " +
                                    std::to_string(clock_) + "; the model is unstable or the guard too low");
    }

    // Restarts the local clock at zero; only valid while the system is empty.
    // Keeping times relative to the busy-period start keeps sojourns exact to
    // the rounding of that busy period, not of the whole run.
    void rebase() { clock_ = 0.0; }

    double clock() const noexcept { return clock_; }
    QueueEngine &engine() noexcept { return *engine_; }
    const QueueEngine &engine() const noexcept { return *engine_; }

    Driver clone() const {
        Driver d(engine_->clone(), max_in_system_);
        d.clock_ = clock_;
        return d;
    }

private:
    std::unique_ptr<QueueEngine> engine_;
    std::size_t max_in_system_;
    double clock_ = 0.0;
};

}  // namespace

SimulationRun run_queue(const QueueModel &model, Discipline discipline, std::size_t n_customers,
                        std::size_t warmup, std::uint64_t seed, const RunOptions &options) {
    if (n_customers == 0) throw ConfigError("run_queue: need at least one customer");
    if (warmup > n_customers) throw ConfigError("run_queue: warmup exceeds the number of customers");
    if (options.record_every == 0) throw ConfigError("run_queue: record_every must be >= 1");

    SimulationRun run;
    run.seed = seed;
    run.discipline = discipline;
    run.customers = n_customers;
    run.warmup = warmup;

    const ServiceDistribution &service = model.service();
    const double lambda = model.arrival_rate();
    Rng rng(seed, kQueueStream);
    Driver driver(make_engine(discipline), options.max_in_system);

    bool recording = false;
    bool busy_recorded = false;  // the busy period in progress started while recording
    double origin = 0.0;         // absolute start of the busy period in progress
    double busy_work = 0.0;
    std::size_t busy_customers = 0;
    std::vector<double> pending_arrivals;  // recorded arrivals in the current busy period
    std::vector<Departure> departures;

    const auto close_busy_period = [&](double end) {
        if (!busy_recorded) return;
        run.busy_periods.push_back(end);
        for (double a : pending_arrivals) run.time_to_empty.push_back(end - a);
        pending_arrivals.clear();
        if (options.trace) run.busy_trace.push_back({origin, origin + end, busy_work, busy_customers});
    };

    const auto handle_departures = [&]() {
        for (const auto &d : departures) {
            if (d.customer.tagged) {
                run.sojourns.push_back({d.customer.requirement, d.time - d.customer.arrival});
                ++run.counters.served;
                if (options.trace)
                    run.trace.push_back({d.customer.id, origin + d.customer.arrival, d.customer.requirement,
                                         origin + d.time, run.busy_trace.size()});
            }
        }
        if (!departures.empty() && driver.engine().size() == 0) close_busy_period(departures.back().time);
        departures.clear();
    };

    // Times below are relative to `origin`.
    double next_arrival = rng.exponential(lambda);
    for (std::uint64_t i = 0;; ++i) {
        // Departures are handled one event at a time so that the busy period
        // closes at the exact epoch the last customer leaves.
        for (;;) {
            const double dt = driver.engine().time_to_next_event();
            if (!(driver.clock() + dt <= next_arrival)) break;
            driver.run_until(driver.clock() + dt, departures);
            handle_departures();
        }
        driver.run_until(next_arrival, departures);
        handle_departures();

        const bool empty = driver.engine().size() == 0;
        if (i >= n_customers && empty) break;

        const double requirement = service.sample(rng);
        const bool in_window = i < n_customers;
        if (!recording && in_window && i >= warmup && empty) {
            recording = true;
            run.record_start = i;
        }
        const bool recorded = recording && in_window;
        const bool kept = recorded && (i - run.record_start) % options.record_every == 0;

        if (empty) {
            origin += next_arrival;
            next_arrival = 0.0;
            driver.rebase();
            busy_recorded = recorded;
            busy_work = 0.0;
            busy_customers = 0;
            if (busy_recorded) ++run.counters.busy_periods;
        }
        if (recorded) {
            ++run.counters.arrivals_observed;
            if (!empty) ++run.counters.arrivals_finding_busy;
        }
        if (kept) pending_arrivals.push_back(next_arrival);
        busy_work += requirement;
        ++busy_customers;

        driver.admit({i, next_arrival, requirement, kept});
        run.counters.max_backlog = std::max(run.counters.max_backlog, driver.engine().size());
        next_arrival += rng.exponential(lambda);
    }
    return run;
}

std::vector<double> sample_busy_periods(const QueueModel &model, std::size_t n, std::uint64_t seed, FirstService first) {
    const ServiceDistribution &service = model.service();
    const double lambda = model.arrival_rate();
    const double tau = first.tau();
    if (first.rule() != FirstService::Rule::Generic && !(tau > 0.0))
        throw PreconditionError("busy period with conditioned first service needs tau > 0");
    if (first.rule() == FirstService::Rule::AtLeast) {
        const double p = service.prob_at_least(tau);
        if (!(p > 0.0)) throw PreconditionError("P(B >= tau) = 0 for tau = " + std::to_string(tau));
        if (p < 1e-6)
            throw SimulationAborted("rejection sampling of B >= tau would accept with probability " + std::to_string(p));
    }

    Rng rng(seed, kBusyStream);
    const auto first_service = [&]() {
        switch (first.rule()) {
            case FirstService::Rule::Exactly: return tau;
            case FirstService::Rule::AtLeast:
                for (;;) {
                    const double b = service.sample(rng);
                    if (b >= tau) return b;
                }
            case FirstService::Rule::Generic: break;
        }
        return service.sample(rng);
    };

    std::vector<double> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        double work = first_service();
        double length = 0.0;
        for (;;) {
            const double gap = rng.exponential(lambda);
            if (gap >= work) {
                length += work;
                break;
            }
            length += gap;
            work += service.sample(rng) - gap;
        }
        out.push_back(length);
    }
    return out;
}

std::vector<double> residual_life(std::span<const double> lengths, std::size_t n, Rng &rng) {
    if (lengths.empty()) throw PreconditionError("residual_life: no lengths given");
    std::vector<double> cumulative(lengths.size());
    double total = 0.0;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        if (!(lengths[i] >= 0.0) || !std::isfinite(lengths[i]))
            throw PreconditionError("residual_life: lengths must be finite and >= 0");
        total += lengths[i];
        cumulative[i] = total;
    }
    if (!(total > 0.0)) throw PreconditionError("residual_life: all lengths are zero");

    std::vector<double> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double target = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
        if (it == cumulative.end()) --it;
        const double picked = lengths[static_cast<std::size_t>(it - cumulative.begin())];
        out.push_back(rng.uniform() * picked);
    }
    return out;
}

std::vector<double> sample_residual_busy(const QueueModel &model, std::size_t n, std::uint64_t seed) {
    const auto pool = sample_busy_periods(model, kResidualPoolFactor * std::max<std::size_t>(n, 1), seed);
    Rng rng(seed, kResidualStream);
    return residual_life(pool, n, rng);
}

namespace {

template <class SizeFn>
ProbeRun probe_fb(const QueueModel &model, std::size_t n, std::uint64_t seed, const ProbeOptions &options,
                  double counter_tau, SizeFn &&tag_size) {
    if (n == 0) throw ConfigError("need at least one tagged customer");
    if (options.spacing == 0) throw ConfigError("probe spacing must be >= 1");

    const ServiceDistribution &service = model.service();
    const double lambda = model.arrival_rate();
    Rng rng(seed, kProbeMainStream);
    Rng tag_rng(seed, kProbeTagStream);
    Driver driver(make_engine(Discipline::FB), options.max_in_system);

    ProbeRun out;
    out.sojourns.reserve(n);
    out.sizes.reserve(n);
    std::vector<Departure> departures;

    double next_arrival = rng.exponential(lambda);
    for (std::uint64_t i = 0; out.sojourns.size() < n; ++i) {
        driver.run_until(next_arrival, departures);
        departures.clear();
        if (driver.engine().size() == 0) {
            driver.rebase();
            next_arrival = 0.0;
        }

        if (i >= options.warmup) {
            const double least = driver.engine().min_attained();
            if (counter_tau > 0.0) {
                ++out.arrivals_observed;
                if (least < counter_tau) ++out.arrivals_finding_busy;
            }
            if ((i - options.warmup) % options.spacing == 0) {
                const double size = tag_size(tag_rng);
                if (least < size) ++out.probes_finding_busy;
                Driver copy = driver.clone();
                copy.admit({kTagId, next_arrival, size, true});
                double t = next_arrival + tag_rng.exponential(lambda);
                for (std::uint64_t j = 0;; ++j) {
                    copy.run_until(t, departures);
                    const auto tag = std::find_if(departures.begin(), departures.end(),
                                                  [](const Departure &d) { return d.customer.id == kTagId; });
                    if (tag != departures.end()) {
                        out.sojourns.push_back(tag->time - next_arrival);
                        out.sizes.push_back(size);
                        departures.clear();
                        break;
                    }
                    departures.clear();
                    copy.admit({j, t, service.sample(tag_rng), false});
                    t += tag_rng.exponential(lambda);
                }
            }
        }

        driver.admit({i, next_arrival, service.sample(rng), false});
        next_arrival += rng.exponential(lambda);
    }
    return out;
}

}  // namespace

ProbeRun conditional_sojourn_fb(const QueueModel &model, double tau, std::size_t n, std::uint64_t seed,
                                const ProbeOptions &options) {
    if (!(tau > 0.0) || !(model.service().prob_at_least(tau) > 0.0))
        throw PreconditionError("conditional sojourn needs tau > 0 with P(B >= tau) > 0; got tau = " +
                                std::to_string(tau));
    return probe_fb(model, n, seed, options, tau, [tau](Rng &) { return tau; });
}

ProbeRun mixed_conditional_sojourn_fb(const QueueModel &model, std::size_t n, std::uint64_t seed,
                                      const ProbeOptions &options) {
    const ServiceDistribution &service = model.service();
    return probe_fb(model, n, seed, options, 0.0, [&service](Rng &r) { return service.sample(r); });
}

}  // namespace fbq
