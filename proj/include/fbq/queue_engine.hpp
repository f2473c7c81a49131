#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

namespace fbq {

enum class Discipline { FB, FIFO, LIFO_PREEMPTIVE, PS };

std::string_view to_string(Discipline d);
// Accepts fb, fifo, lifo, ps. Throws ConfigError otherwise.
Discipline parse_discipline(std::string_view name);

struct Customer {
    std::uint64_t id = 0;
    double arrival = 0.0;
    double requirement = 0.0;
    bool tagged = false;
};

struct Departure {
    Customer customer;
    double time;
};

// Server state of a single work-conserving queue, advanced in event time.
//
// Contract with the driver: time_to_next_event() is the time until the next
// internal event (a departure, or for FB a cohort merge) assuming no
// arrivals; advance(dt) is only called with dt < time_to_next_event();
// fire() jumps exactly to that event. Event epochs are assigned from the
// engine's exact targets, never from integrated rates, so customers that
// finish together depart at bit-identical times.
class QueueEngine {
public:
    virtual ~QueueEngine() = default;

    virtual void arrive(const Customer &c) = 0;
    virtual double time_to_next_event() const = 0;
    virtual void advance(double dt) = 0;
    virtual void fire(double now, std::vector<Departure> &out) = 0;

    virtual std::size_t size() const = 0;
    // Least attained service among present customers; +inf when empty.
    virtual double min_attained() const = 0;
    virtual std::unique_ptr<QueueEngine> clone() const = 0;

    // Throws std::logic_error if the internal state is inconsistent.
    virtual void check_invariants() const {}

    virtual Discipline discipline() const = 0;
};

std::unique_ptr<QueueEngine> make_engine(Discipline d);

}  // namespace fbq
