#include "fbq/queue_engine.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

#include "fbq/errors.hpp"

namespace fbq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ByRequirement {
    bool operator()(const Customer &a, const Customer &b) const { return a.requirement > b.requirement; }
};

void heap_push(std::vector<Customer> &heap, const Customer &c) {
    heap.push_back(c);
    std::push_heap(heap.begin(), heap.end(), ByRequirement{});
}

Customer heap_pop(std::vector<Customer> &heap) {
    std::pop_heap(heap.begin(), heap.end(), ByRequirement{});
    Customer c = heap.back();
    heap.pop_back();
    return c;
}

void check(bool ok, const char *what) {
    if (!ok) throw std::logic_error(what);
}

// Foreground-background. Customers with equal attained service form a
// cohort sharing one age value; only the youngest cohort (back of the
// stack) is served, each member at rate 1/n. When it catches up with the
// next cohort the two merge and adopt that cohort's stored age, so equal
// ages are exact by construction.
class FbEngine final : public QueueEngine {
public:
    void arrive(const Customer &c) override {
        if (!cohorts_.empty() && cohorts_.back().age == 0.0) {
            heap_push(cohorts_.back().members, c);
        } else {
            cohorts_.push_back(Cohort{0.0, {c}});
        }
        ++size_;
    }

    double time_to_next_event() const override {
        if (cohorts_.empty()) return kInf;
        const Cohort &top = cohorts_.back();
        return static_cast<double>(top.members.size()) * (target() - top.age);
    }

    void advance(double dt) override {
        if (cohorts_.empty() || dt <= 0.0) return;
        Cohort &top = cohorts_.back();
        top.age = std::min(top.age + dt / static_cast<double>(top.members.size()), target());
    }

    void fire(double now, std::vector<Departure> &out) override {
        if (cohorts_.empty()) return;
        const double level = target();
        cohorts_.back().age = level;
        if (cohorts_.size() >= 2 && level >= cohorts_[cohorts_.size() - 2].age) {
            Cohort top = std::move(cohorts_.back());
            cohorts_.pop_back();
            Cohort &older = cohorts_.back();
            if (top.members.size() > older.members.size()) std::swap(top.members, older.members);
            for (const auto &c : top.members) heap_push(older.members, c);
        }
        Cohort &top = cohorts_.back();
        while (!top.members.empty() && top.members.front().requirement <= top.age) {
            out.push_back({heap_pop(top.members), now});
            --size_;
        }
        if (top.members.empty()) cohorts_.pop_back();
    }

    std::size_t size() const override { return size_; }
    double min_attained() const override { return cohorts_.empty() ? kInf : cohorts_.back().age; }
    std::unique_ptr<QueueEngine> clone() const override { return std::make_unique<FbEngine>(*this); }
    Discipline discipline() const override { return Discipline::FB; }

    void check_invariants() const override {
        std::size_t count = 0;
        for (std::size_t i = 0; i < cohorts_.size(); ++i) {
            const Cohort &c = cohorts_[i];
            check(!c.members.empty(), "FB: empty cohort on the stack");
            check(c.age >= 0.0, "FB: negative age");
            if (i > 0) check(c.age < cohorts_[i - 1].age, "FB: cohort ages not strictly decreasing towards the top");
            check(std::is_heap(c.members.begin(), c.members.end(), ByRequirement{}), "FB: heap order broken");
            for (const auto &m : c.members) check(m.requirement > c.age, "FB: finished customer still present");
            count += c.members.size();
        }
        check(count == size_, "FB: size mismatch");
    }

private:
    struct Cohort {
        double age;
        std::vector<Customer> members;  // min-heap on requirement
    };

    double target() const {
        const Cohort &top = cohorts_.back();
        double level = top.members.front().requirement;
        if (cohorts_.size() >= 2) level = std::min(level, cohorts_[cohorts_.size() - 2].age);
        return level;
    }

    std::vector<Cohort> cohorts_;
    std::size_t size_ = 0;
};

// Processor sharing via virtual time: the virtual clock advances at 1/n and
// a customer leaves when it reaches (virtual arrival + requirement).
class PsEngine final : public QueueEngine {
public:
    void arrive(const Customer &c) override {
        if (jobs_.empty()) virtual_time_ = 0.0;
        jobs_.push_back({virtual_time_ + c.requirement, virtual_time_, c});
        std::push_heap(jobs_.begin(), jobs_.end(), ByFinish{});
    }

    double time_to_next_event() const override {
        if (jobs_.empty()) return kInf;
        return static_cast<double>(jobs_.size()) * (jobs_.front().finish - virtual_time_);
    }

    void advance(double dt) override {
        if (jobs_.empty() || dt <= 0.0) return;
        virtual_time_ = std::min(virtual_time_ + dt / static_cast<double>(jobs_.size()), jobs_.front().finish);
    }

    void fire(double now, std::vector<Departure> &out) override {
        if (jobs_.empty()) return;
        virtual_time_ = jobs_.front().finish;
        while (!jobs_.empty() && jobs_.front().finish <= virtual_time_) {
            std::pop_heap(jobs_.begin(), jobs_.end(), ByFinish{});
            out.push_back({jobs_.back().customer, now});
            jobs_.pop_back();
        }
    }

    std::size_t size() const override { return jobs_.size(); }
    double min_attained() const override {
        if (jobs_.empty()) return kInf;
        double newest = 0.0;
        for (const auto &j : jobs_) newest = std::max(newest, j.start);
        return virtual_time_ - newest;
    }
    std::unique_ptr<QueueEngine> clone() const override { return std::make_unique<PsEngine>(*this); }
    Discipline discipline() const override { return Discipline::PS; }

    void check_invariants() const override {
        check(std::is_heap(jobs_.begin(), jobs_.end(), ByFinish{}), "PS: heap order broken");
        for (const auto &j : jobs_) check(j.finish > virtual_time_, "PS: finished customer still present");
    }

private:
    struct Job {
        double finish;
        double start;
        Customer customer;
    };
    struct ByFinish {
        bool operator()(const Job &a, const Job &b) const { return a.finish > b.finish; }
    };

    std::vector<Job> jobs_;
    double virtual_time_ = 0.0;
};

// Non-preemptive first-come first-served.
class FifoEngine final : public QueueEngine {
public:
    void arrive(const Customer &c) override {
        if (line_.empty()) remaining_ = c.requirement;
        line_.push_back(c);
    }

    double time_to_next_event() const override { return line_.empty() ? kInf : remaining_; }

    void advance(double dt) override {
        if (!line_.empty() && dt > 0.0) remaining_ = std::max(0.0, remaining_ - dt);
    }

    void fire(double now, std::vector<Departure> &out) override {
        if (line_.empty()) return;
        out.push_back({line_.front(), now});
        line_.pop_front();
        remaining_ = line_.empty() ? 0.0 : line_.front().requirement;
    }

    std::size_t size() const override { return line_.size(); }
    double min_attained() const override {
        if (line_.empty()) return kInf;
        return line_.size() > 1 ? 0.0 : line_.front().requirement - remaining_;
    }
    std::unique_ptr<QueueEngine> clone() const override { return std::make_unique<FifoEngine>(*this); }
    Discipline discipline() const override { return Discipline::FIFO; }

    void check_invariants() const override {
        if (!line_.empty()) check(remaining_ >= 0.0 && remaining_ <= line_.front().requirement, "FIFO: bad remaining");
    }

private:
    std::deque<Customer> line_;
    double remaining_ = 0.0;
};

// Preemptive-resume LIFO: the most recent arrival is always in service.
class LifoEngine final : public QueueEngine {
public:
    void arrive(const Customer &c) override { stack_.push_back({c, c.requirement}); }

    double time_to_next_event() const override { return stack_.empty() ? kInf : stack_.back().remaining; }

    void advance(double dt) override {
        if (!stack_.empty() && dt > 0.0) stack_.back().remaining = std::max(0.0, stack_.back().remaining - dt);
    }

    void fire(double now, std::vector<Departure> &out) override {
        if (stack_.empty()) return;
        out.push_back({stack_.back().customer, now});
        stack_.pop_back();
    }

    std::size_t size() const override { return stack_.size(); }
    double min_attained() const override {
        double least = kInf;
        for (const auto &e : stack_) least = std::min(least, e.customer.requirement - e.remaining);
        return least;
    }
    std::unique_ptr<QueueEngine> clone() const override { return std::make_unique<LifoEngine>(*this); }
    Discipline discipline() const override { return Discipline::LIFO_PREEMPTIVE; }

    void check_invariants() const override {
        for (const auto &e : stack_)
            check(e.remaining >= 0.0 && e.remaining <= e.customer.requirement, "LIFO: bad remaining");
    }

private:
    struct Entry {
        Customer customer;
        double remaining;
    };
    std::vector<Entry> stack_;
};

}  // namespace

std::string_view to_string(Discipline d) {
    switch (d) {
        case Discipline::FB: return "fb";
        case Discipline::FIFO: return "fifo";
        case Discipline::LIFO_PREEMPTIVE: return "lifo";
        case Discipline::PS: return "ps";
    }
    return "?";
}

Discipline parse_discipline(std::string_view name) {
    if (name == "fb") return Discipline::FB;
    if (name == "fifo") return Discipline::FIFO;
    if (name == "lifo") return Discipline::LIFO_PREEMPTIVE;
    if (name == "ps") return Discipline::PS;
    throw ConfigError("unknown discipline '" + std::string(name) + "' (expected fb|fifo|lifo|ps)");
}

std::unique_ptr<QueueEngine> make_engine(Discipline d) {
    switch (d) {
        case Discipline::FB: return std::make_unique<FbEngine>();
        case Discipline::FIFO: return std::make_unique<FifoEngine>();
        case Discipline::LIFO_PREEMPTIVE: return std::make_unique<LifoEngine>();
        case Discipline::PS: return std::make_unique<PsEngine>();
    }
    throw ConfigError("unknown discipline");
}

}  // namespace fbq
