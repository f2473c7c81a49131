#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fbq/decay_analytic.hpp"
#include "fbq/queue_engine.hpp"
#include "fbq/random.hpp"

namespace fbq {

inline constexpr std::size_t kDefaultWarmup = 10'000;
inline constexpr std::size_t kDefaultMaxInSystem = 1'000'000;

struct SojournSample {
    double service;
    double sojourn;
};

struct RunCounters {
    std::size_t served = 0;        // recorded customers that departed
    std::size_t busy_periods = 0;  // busy periods started inside the recording window
    std::size_t max_backlog = 0;   // largest number in system over the whole run
    std::size_t arrivals_observed = 0;
    std::size_t arrivals_finding_busy = 0;
};

struct CustomerTrace {
    std::uint64_t id;
    double arrival;
    double service;
    double departure;
    std::size_t busy_period;  // index into SimulationRun::busy_trace
};

struct BusyPeriodTrace {
    double start;
    double end;
    double work;  // sum of requirements of the customers it served
    std::size_t customers;
};

struct RunOptions {
    // Keep every k-th recorded customer's sojourn and time-to-empty. Thinning by
    // arrival index keeps samples from sharing a busy period.
    std::size_t record_every = 1;
    std::size_t max_in_system = kDefaultMaxInSystem;
    bool trace = false;
};

struct SimulationRun {
    std::uint64_t seed = 0;
    Discipline discipline = Discipline::FB;
    std::size_t customers = 0;
    std::size_t warmup = 0;
    std::size_t record_start = 0;  // index of the first recorded customer

    std::vector<SojournSample> sojourns;  // in departure order
    std::vector<double> busy_periods;
    std::vector<double> time_to_empty;  // D: arrival until the system next empties
    RunCounters counters;

    std::vector<CustomerTrace> trace;  // recorded customers, only with RunOptions::trace
    std::vector<BusyPeriodTrace> busy_trace;
};

// Simulates n customers. Statistics start with the first customer of index
// >= warmup that finds the system empty; arrivals continue past the n-th
// customer until the system empties so every recorded sojourn is complete.
// Arrivals and service times come from one stream in a fixed order, so runs
// with the same seed under different disciplines share their input.
SimulationRun run_queue(const QueueModel &model, Discipline discipline, std::size_t n_customers,
                        std::size_t warmup, std::uint64_t seed, const RunOptions &options = {});

class FirstService {
public:
    enum class Rule { Generic, Exactly, AtLeast };

    static FirstService generic() { return {Rule::Generic, 0.0}; }
    static FirstService exactly(double tau) { return {Rule::Exactly, tau}; }
    static FirstService at_least(double tau) { return {Rule::AtLeast, tau}; }

    Rule rule() const noexcept { return rule_; }
    double tau() const noexcept { return tau_; }

private:
    FirstService(Rule rule, double tau) : rule_(rule), tau_(tau) {}
    Rule rule_;
    double tau_;
};

// iid busy-period lengths, each the first passage of the workload to zero.
std::vector<double> sample_busy_periods(const QueueModel &model, std::size_t n, std::uint64_t seed,
                                        FirstService first = FirstService::generic());

// n draws of U * L_sel where L_sel is picked from `lengths` with probability
// proportional to its length and U is uniform(0,1).
std::vector<double> residual_life(std::span<const double> lengths, std::size_t n, Rng &rng);

inline constexpr std::size_t kResidualPoolFactor = 50;

// Residual life of the busy period, from a pool of kResidualPoolFactor * n busy periods.
std::vector<double> sample_residual_busy(const QueueModel &model, std::size_t n, std::uint64_t seed);

struct ProbeOptions {
    std::size_t spacing = 30;  // main-run arrivals between probes
    std::size_t warmup = kDefaultWarmup;
    std::size_t max_in_system = kDefaultMaxInSystem;
};

struct ProbeRun {
    std::vector<double> sojourns;
    std::vector<double> sizes;  // the tagged customers' requirements
    // Over every main-run arrival after warmup: how often the tau-queue was busy,
    // i.e. some customer present had attained service below tau.
    std::size_t arrivals_observed = 0;
    std::size_t arrivals_finding_busy = 0;
    // Among the probes only.
    std::size_t probes_finding_busy = 0;
};

// FB sojourns of tagged customers of size tau. Tags enter a copy of the
// stationary FB queue at arrival epochs of a long run (PASTA) and are
// followed with fresh arrivals until they leave; the main run is unaffected.
ProbeRun conditional_sojourn_fb(const QueueModel &model, double tau, std::size_t n, std::uint64_t seed,
                                const ProbeOptions &options = {});

// Same, with each tag's size drawn from the service law. Only the probe
// counters are filled in.
ProbeRun mixed_conditional_sojourn_fb(const QueueModel &model, std::size_t n, std::uint64_t seed,
                                      const ProbeOptions &options = {});

}  // namespace fbq
