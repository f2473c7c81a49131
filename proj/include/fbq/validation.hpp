#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fbq/decay_analytic.hpp"
#include "fbq/queue_engine.hpp"
#include "fbq/simulator.hpp"
#include "fbq/tail_estimator.hpp"

namespace fbq {

struct KSReport {
    double statistic = 0.0;
    std::size_t n = 0;
    std::size_t m = 0;
    double threshold = 0.0;  // 5% level, 1.358 sqrt((n+m)/(nm))
    bool pass = false;
};

KSReport ks_two_sample(std::span<const double> a, std::span<const double> b);

// Child seed k of a check's seed; checks never reuse a stream between sides.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k);

// Two decay-rate estimates "agree" when their 95% intervals overlap or they
// differ by at most rel_tol relative to their mean. The OLS standard error
// ignores the dependence between survival points, so the intervals alone are
// far too narrow.
bool rates_agree(const DecayEstimate &a, const DecayEstimate &b, double rel_tol = 0.15);

inline constexpr double kRateTolerance = 0.15;
inline constexpr double kBusyFractionTolerance = 0.01;  // relative

struct DecompositionOptions {
    std::size_t spacing = 30;  // arrivals between recorded samples on the direct side
    std::size_t warmup = kDefaultWarmup;
    EstimatorOptions tail{0.90, 0.999, kBusyPeriodExponent};
};

struct DecompositionReport {
    KSReport ks;
    double busy_fraction = 0.0;  // empirical P(A = 1) over all observed arrivals
    double expected_busy_fraction = 0.0;
    std::size_t arrivals_observed = 0;
    bool busy_fraction_ok = false;
    DecayEstimate direct_tail;
    DecayEstimate composed_tail;
    bool tails_agree = false;
    bool pass = false;  // ks.pass && busy_fraction_ok
};

// D = time from an arrival until the system empties, against A L~ + L.
DecompositionReport check_D_decomposition(const QueueModel &model, std::size_t n, std::uint64_t seed,
                                          const DecompositionOptions &options = {});

// V(tau) of a size-tau FB customer, against A(tau) L~(tau) + L*(tau) in the tau-queue.
DecompositionReport check_Vtau_decomposition(const QueueModel &model, double tau, std::size_t n, std::uint64_t seed,
                                             const DecompositionOptions &options = {});

struct SumLemmaOptions {
    bool zero_x = false;   // X = 0, so X + Y = Y
    double tolerance = 0.05;  // relative, per seed
    unsigned threads = 1;
};

struct SumLemmaReport {
    double alpha = 0.0;
    std::vector<DecayEstimate> estimates;  // one per seed
    double median_rate = 0.0;
    double max_relative_error = 0.0;
    bool pass = false;
};

// X, Y iid exponential(alpha); the decay rate of X + Y is estimated with the
// Gamma(2) prefactor x^{+1} (none when zero_x).
SumLemmaReport check_sum_decay_lemma(double alpha, std::size_t n, std::span<const std::uint64_t> seeds,
                                     const SumLemmaOptions &options = {});

struct LifoOptions {
    std::size_t spacing = 30;
    std::size_t warmup = kDefaultWarmup;
};

// Preemptive-LIFO sojourns (every spacing-th customer) against independent busy periods.
KSReport check_lifo_busy_law(const QueueModel &model, std::size_t n, std::uint64_t seed,
                             const LifoOptions &options = {});

struct OrderingOptions {
    std::size_t warmup = kDefaultWarmup;
    std::size_t ks_samples = 100'000;
    LifoOptions lifo{};
    double rate_tolerance = kRateTolerance;
};

struct DisciplineRow {
    Discipline discipline;
    double analytic = 0.0;  // NaN where no analytic rate is computed (PS)
    DecayEstimate estimate;
    bool near_analytic = true;
    bool above_busy_bound = false;  // estimate >= c (1 - tolerance)
};

struct OrderingReport {
    double c = 0.0;
    double theta0 = 0.0;
    double dr_b = 0.0;
    std::vector<DisciplineRow> rows;  // FB, FIFO, LIFO, PS
    DecayEstimate busy_estimate;
    bool fb_matches_busy = false;
    bool fb_below_fifo = false;
    KSReport lifo_vs_busy;
    bool pass = false;
};

// Estimator settings per discipline used by the ordering check.
EstimatorOptions sojourn_estimator(Discipline d);

// All four disciplines on common input, n customers each.
OrderingReport check_discipline_ordering(const QueueModel &model, std::size_t n, std::uint64_t seed,
                                         const OrderingOptions &options = {});

struct MixtureOptions {
    std::size_t spacing = 30;
    std::size_t warmup = kDefaultWarmup;
};

// Tagged FB sojourns with B-distributed sizes against plain FB sojourns.
KSReport check_pise_mixture(const QueueModel &model, std::size_t n, std::uint64_t seed,
                            const MixtureOptions &options = {});

struct SeedSweep {
    std::size_t passed = 0;
    std::size_t total = 0;
    std::vector<std::uint64_t> failed_seeds;
};

// Runs check(seed) for seeds base, base+1, ..., and counts passes.
SeedSweep sweep_seeds(std::size_t count, std::uint64_t base_seed, unsigned threads,
                      const std::function<bool(std::uint64_t)> &check);

}  // namespace fbq
