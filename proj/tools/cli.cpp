#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fbq/decay_analytic.hpp"
#include "fbq/errors.hpp"
#include "fbq/parallel.hpp"
#include "fbq/simulator.hpp"
#include "fbq/tail_estimator.hpp"
#include "fbq/validation.hpp"
#include "json_emit.hpp"

namespace fbq::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char *kOutputDirEnv = "FBQ_OUTPUT_DIR";

fs::path default_output(const std::string &name) {
    const char *dir = std::getenv(kOutputDirEnv);
    return fs::path(dir && *dir ? dir : ".") / name;
}

std::ofstream open_output(const fs::path &path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

// Timestamps live in a sidecar so the primary file is byte-stable.
void write_sidecar(const fs::path &primary, const std::string &command_line) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    Json meta;
    meta["primary"] = primary.string();
    meta["created"] = stamp;
    meta["command"] = command_line;
    auto f = open_output(primary.string() + ".meta.json");
    f << to_text(meta);
}

std::string csv_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Json estimate_json(const DecayEstimate &e) {
    Json j;
    j["rate"] = e.rate;
    j["stderr"] = e.std_error;
    j["window"] = Json::array({e.x_lo, e.x_hi});
    j["points"] = e.points;
    j["r2"] = e.r2;
    j["poly_exponent"] = e.poly_exponent;
    return j;
}

Json ks_json(const KSReport &r) {
    Json j;
    j["statistic"] = r.statistic;
    j["n"] = r.n;
    j["m"] = r.m;
    j["threshold"] = r.threshold;
    j["pass"] = r.pass;
    return j;
}

struct ModelArgs {
    double lambda = 0.0;
    std::string service;

    QueueModel build() const { return QueueModel(lambda, ServiceDistribution::parse(service)); }
};

void add_model(CLI::App *cmd, ModelArgs &m, bool required) {
    auto *l = cmd->add_option("--lambda", m.lambda, "Poisson arrival rate");
    auto *s = cmd->add_option("--service", m.service, "service law, e.g. exp:1.0, det:1, gamma:0.5,1, trunc(exp:1,2)");
    if (required) {
        l->required();
        s->required();
    } else {
        l->capture_default_str();
        s->capture_default_str();
    }
}

struct EstimatorArgs {
    double q_lo = 0.90;
    double q_hi = 0.999;
    bool poly_correct = false;
    double poly_exponent = 0.0;
    bool exponent_given = false;

    EstimatorOptions build() const {
        EstimatorOptions o;
        o.q_lo = q_lo;
        o.q_hi = q_hi;
        o.poly_exponent = exponent_given ? poly_exponent : (poly_correct ? kBusyPeriodExponent : 0.0);
        return o;
    }
};

void add_estimator(CLI::App *cmd, EstimatorArgs &e) {
    cmd->add_option("--qlo", e.q_lo, "lower quantile of the fit window")->capture_default_str();
    cmd->add_option("--qhi", e.q_hi, "upper quantile of the fit window")->capture_default_str();
    cmd->add_flag("--poly-correct", e.poly_correct, "fit log P + (3/2) log x instead of log P");
    cmd->add_option_function<double>(
        "--poly-exponent",
        [&e](double k) {
            e.poly_exponent = k;
            e.exponent_given = true;
        },
        "general prefactor exponent k in P ~ x^k e^{-rate x}");
}

// ---------------------------------------------------------------- analytic

struct AnalyticArgs {
    ModelArgs model;
    std::vector<double> taus;
};

int cmd_analytic(const AnalyticArgs &a, std::ostream &out) {
    const QueueModel model = a.model.build();
    const auto rates = analytic_rates(model, a.taus);
    Json j;
    j["lambda"] = model.arrival_rate();
    j["service"] = model.service().spec();
    j["rho"] = model.load();
    j["c"] = rates.c;
    j["theta_star"] = rates.theta_star;
    j["theta0"] = rates.theta0;
    j["drB"] = rates.dr_b;
    Json curve = Json::array();
    for (const auto &p : rates.c_tau) curve.push_back(Json::array({p.tau, p.rate}));
    j["c_tau"] = curve;
    j["theta_tolerance"] = rates.theta_tolerance;
    j["derivative_residual"] = rates.derivative_residual;
    out << to_text(j);
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    ModelArgs model;
    std::string discipline = "fb";
    std::size_t customers = 100000;
    std::size_t warmup = kDefaultWarmup;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::size_t replications = 1;
    std::size_t record_every = 1;
    std::size_t max_in_system = kDefaultMaxInSystem;
    std::string mode = "sojourn";
    std::string first = "generic";
    double tau = 0.0;
    std::string out_path;
    EstimatorArgs estimator;
};

FirstService parse_first(const std::string &rule, double tau) {
    if (rule == "generic") return FirstService::generic();
    if (rule == "exactly") return FirstService::exactly(tau);
    if (rule == "at-least") return FirstService::at_least(tau);
    throw ConfigError("unknown --first rule '" + rule + "' (expected generic|exactly|at-least)");
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t r, std::size_t replications) {
    return replications == 1 ? seed : derive_seed(seed, r);
}

int cmd_simulate(const SimulateArgs &a, const std::string &command_line, std::ostream &out) {
    const QueueModel model = a.model.build();
    const Discipline discipline = parse_discipline(a.discipline);
    if (a.customers == 0) throw ConfigError("--customers must be >= 1");
    if (a.replications == 0) throw ConfigError("--replications must be >= 1");
    if (a.mode != "sojourn" && a.mode != "busy") throw ConfigError("--mode must be sojourn or busy");
    const bool busy_mode = a.mode == "busy";
    const FirstService first = parse_first(a.first, a.tau);
    const bool tagged = a.replications > 1;

    const fs::path path = a.out_path.empty() ? default_output(busy_mode ? "busy_periods.csv" : "sojourns.csv")
                                             : fs::path(a.out_path);

    Json summary;
    summary["command"] = "simulate";
    summary["lambda"] = model.arrival_rate();
    summary["service"] = model.service().spec();
    summary["rho"] = model.load();
    summary["mode"] = a.mode;
    summary["seed"] = a.seed;
    summary["replications"] = a.replications;
    summary["output"] = path.string();

    std::vector<double> column;
    std::ostringstream csv;
    if (busy_mode) {
        const auto parts = parallel_map(a.replications, a.threads, [&](std::size_t r) {
            return sample_busy_periods(model, a.customers, replication_seed(a.seed, r, a.replications), first);
        });
        csv << (tagged ? "replication,length\n" : "length\n");
        for (std::size_t r = 0; r < parts.size(); ++r) {
            for (double x : parts[r]) {
                if (tagged) csv << r << ',';
                csv << csv_number(x) << '\n';
                column.push_back(x);
            }
        }
        summary["first_service"] = a.first;
        if (first.rule() != FirstService::Rule::Generic) summary["tau"] = a.tau;
        summary["busy_periods"] = column.size();
    } else {
        if (a.warmup > a.customers) throw ConfigError("--warmup exceeds --customers");
        RunOptions options;
        options.record_every = a.record_every;
        options.max_in_system = a.max_in_system;
        const auto runs = parallel_map(a.replications, a.threads, [&](std::size_t r) {
            return run_queue(model, discipline, a.customers, a.warmup, replication_seed(a.seed, r, a.replications),
                             options);
        });
        csv << (tagged ? "replication,service_time,sojourn\n" : "service_time,sojourn\n");
        RunCounters total;
        std::size_t busy_count = 0;
        double busy_sum = 0.0;
        for (std::size_t r = 0; r < runs.size(); ++r) {
            for (const auto &s : runs[r].sojourns) {
                if (tagged) csv << r << ',';
                csv << csv_number(s.service) << ',' << csv_number(s.sojourn) << '\n';
                column.push_back(s.sojourn);
            }
            const auto &c = runs[r].counters;
            total.served += c.served;
            total.busy_periods += c.busy_periods;
            total.max_backlog = std::max(total.max_backlog, c.max_backlog);
            total.arrivals_observed += c.arrivals_observed;
            total.arrivals_finding_busy += c.arrivals_finding_busy;
            for (double l : runs[r].busy_periods) busy_sum += l;
            busy_count += runs[r].busy_periods.size();
        }
        summary["discipline"] = std::string(to_string(discipline));
        summary["customers"] = a.customers;
        summary["warmup"] = a.warmup;
        summary["record_every"] = a.record_every;
        Json counters;
        counters["served"] = total.served;
        counters["busy_periods"] = total.busy_periods;
        counters["max_backlog"] = total.max_backlog;
        counters["arrivals_observed"] = total.arrivals_observed;
        counters["arrivals_finding_busy"] = total.arrivals_finding_busy;
        summary["counters"] = counters;
        if (total.arrivals_observed > 0)
            summary["busy_fraction"] =
                static_cast<double>(total.arrivals_finding_busy) / static_cast<double>(total.arrivals_observed);
        if (busy_count > 0) summary["mean_busy_period"] = busy_sum / static_cast<double>(busy_count);
    }

    double sum = 0.0;
    for (double x : column) sum += x;
    summary["rows"] = column.size();
    if (!column.empty()) summary["mean"] = sum / static_cast<double>(column.size());
    if (column.size() >= kMinEstimatorSamples) {
        try {
            summary["estimate"] = estimate_json(estimate_decay(column, a.estimator.build()));
        } catch (const PreconditionError &e) {
            summary["estimate"] = Json(std::string("unavailable: ") + e.what());
        }
    }

    {
        auto f = open_output(path);
        f << csv.str();
    }
    write_sidecar(path, command_line);
    out << to_text(summary);
    return 0;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
    std::string input;
    std::string column;
    std::string out_path;
    EstimatorArgs estimator;
};

std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::vector<double> read_column(const std::string &path, std::string &column) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read " + path);
    std::string line;
    if (!std::getline(f, line)) throw ConfigError(path + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv(line);
    std::size_t index = header.size();
    if (column.empty()) {
        for (const char *preferred : {"sojourn", "length"})
            for (std::size_t i = 0; i < header.size() && index == header.size(); ++i)
                if (header[i] == preferred) index = i;
        if (index == header.size()) index = header.size() - 1;
        column = header[index];
    } else {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == column) index = i;
        if (index == header.size()) throw ConfigError("no column '" + column + "' in " + path);
    }

    std::vector<double> values;
    std::size_t row = 1;
    while (std::getline(f, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw ConfigError(path + ":" + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                              " fields");
        const std::string &cell = cells[index];
        char *end = nullptr;
        const double x = std::strtod(cell.c_str(), &end);
        if (cell.empty() || end != cell.c_str() + cell.size())
            throw ConfigError(path + ":" + std::to_string(row) + ": not a number: '" + cell + "'");
        values.push_back(x);
    }
    return values;
}

int cmd_estimate(EstimateArgs a, const std::string &command_line, std::ostream &out) {
    const auto samples = read_column(a.input, a.column);
    const auto e = estimate_decay(samples, a.estimator.build());
    Json j = estimate_json(e);
    j["samples"] = samples.size();
    j["column"] = a.column;
    j["input"] = a.input;
    const std::string text = to_text(j);
    if (!a.out_path.empty()) {
        {
            auto f = open_output(a.out_path);
            f << text;
        }
        write_sidecar(a.out_path, command_line);
    }
    out << text;
    return 0;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
    ModelArgs model;
    std::size_t customers = 1000000;
    std::size_t warmup = kDefaultWarmup;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out_path;
    std::string hcurve_path;
    std::size_t hcurve_points = 400;
};

void write_hcurve(const fs::path &path, const QueueModel &model, const AnalyticRates &rates, std::size_t points) {
    // Up to the radius when it is finite, otherwise well past theta0.
    const double right = std::isfinite(rates.dr_b) ? rates.dr_b : std::max(2.0 * rates.theta0, rates.theta0 + 1.0);
    auto f = open_output(path);
    f << "# h(theta) = theta - lambda (E exp(theta B) - 1)\n";
    f << "# lambda = " << csv_number(model.arrival_rate()) << ", service = " << model.service().spec() << "\n";
    f << "# c_FB = " << csv_number(rates.c) << " at theta* = " << csv_number(rates.theta_star) << "\n";
    f << "# c_FIFO = theta0 = " << csv_number(rates.theta0) << "\n";
    f << "# drB = " << csv_number(rates.dr_b) << "\n";
    f << "# theta h\n";
    points = std::max<std::size_t>(points, 2);
    for (std::size_t i = 0; i < points; ++i) {
        const double theta = right * static_cast<double>(i) / static_cast<double>(points);
        const double value = h(model, theta);
        if (!std::isfinite(value)) break;
        f << csv_number(theta) << ' ' << csv_number(value) << '\n';
    }
    // Second data block: marker points (theta, h) for index 1 in gnuplot.
    f << "\n\n# markers: theta* c_FB, theta0 0\n";
    f << csv_number(rates.theta_star) << ' ' << csv_number(rates.c) << '\n';
    f << csv_number(rates.theta0) << ' ' << csv_number(0.0) << '\n';
    if (std::isfinite(rates.dr_b)) f << "# drB marker at theta = " << csv_number(rates.dr_b) << '\n';
}

int cmd_compare(const CompareArgs &a, const std::string &command_line, std::ostream &out) {
    const QueueModel model = a.model.build();
    if (a.customers == 0) throw ConfigError("--customers must be >= 1");
    if (a.warmup > a.customers) throw ConfigError("--warmup exceeds --customers");
    const auto rates = analytic_rates(model);
    const std::vector<Discipline> order{Discipline::FB, Discipline::LIFO_PREEMPTIVE, Discipline::FIFO, Discipline::PS};

    const auto estimates = parallel_map(order.size(), a.threads, [&](std::size_t k) {
        const auto run = run_queue(model, order[k], a.customers, a.warmup, a.seed);
        std::vector<double> v;
        v.reserve(run.sojourns.size());
        for (const auto &s : run.sojourns) v.push_back(s.sojourn);
        return estimate_decay(v, sojourn_estimator(order[k]));
    });

    const fs::path path = a.out_path.empty() ? default_output("compare.csv") : fs::path(a.out_path);
    std::ostringstream csv;
    csv << "discipline,analytic_rate,estimated_rate,ci_low,ci_high\n";
    Json rows = Json::array();
    for (std::size_t k = 0; k < order.size(); ++k) {
        double analytic = std::numeric_limits<double>::quiet_NaN();
        if (order[k] == Discipline::FB || order[k] == Discipline::LIFO_PREEMPTIVE) analytic = rates.c;
        if (order[k] == Discipline::FIFO) analytic = rates.theta0;
        const auto &e = estimates[k];
        csv << to_string(order[k]) << ',' << (std::isnan(analytic) ? std::string() : csv_number(analytic)) << ','
            << csv_number(e.rate) << ',' << csv_number(e.ci_low()) << ',' << csv_number(e.ci_high()) << '\n';
        Json row;
        row["discipline"] = std::string(to_string(order[k]));
        row["analytic_rate"] = analytic;
        row["estimate"] = estimate_json(e);
        rows.push_back(row);
    }
    {
        auto f = open_output(path);
        f << csv.str();
    }
    write_sidecar(path, command_line);

    Json j;
    j["command"] = "compare";
    j["lambda"] = model.arrival_rate();
    j["service"] = model.service().spec();
    j["customers"] = a.customers;
    j["seed"] = a.seed;
    j["c"] = rates.c;
    j["theta0"] = rates.theta0;
    j["drB"] = rates.dr_b;
    j["rows"] = rows;
    j["output"] = path.string();
    if (!a.hcurve_path.empty()) {
        write_hcurve(a.hcurve_path, model, rates, a.hcurve_points);
        write_sidecar(a.hcurve_path, command_line);
        j["hcurve"] = a.hcurve_path;
    }
    out << to_text(j);
    return 0;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
    std::string check;
    ModelArgs model{0.5, "exp:1.0"};
    std::size_t samples = 100000;
    std::size_t customers = 1000000;
    std::size_t warmup = kDefaultWarmup;
    std::size_t spacing = 30;
    double tau = 1.0;
    double alpha = 1.0;
    bool zero_x = false;
    double tolerance = 0.05;
    std::size_t seeds = 1;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    double required_fraction = 0.9;
};

Json decomposition_json(const DecompositionReport &r) {
    Json j;
    j["ks"] = ks_json(r.ks);
    j["busy_fraction"] = r.busy_fraction;
    j["expected_busy_fraction"] = r.expected_busy_fraction;
    j["arrivals_observed"] = r.arrivals_observed;
    j["busy_fraction_ok"] = r.busy_fraction_ok;
    j["direct_tail"] = estimate_json(r.direct_tail);
    j["composed_tail"] = estimate_json(r.composed_tail);
    j["tails_agree"] = r.tails_agree;
    j["pass"] = r.pass;
    return j;
}

Json ordering_json(const OrderingReport &r) {
    Json j;
    j["c"] = r.c;
    j["theta0"] = r.theta0;
    j["drB"] = r.dr_b;
    Json rows = Json::array();
    for (const auto &row : r.rows) {
        Json x;
        x["discipline"] = std::string(to_string(row.discipline));
        x["analytic_rate"] = row.analytic;
        x["estimate"] = estimate_json(row.estimate);
        x["near_analytic"] = row.near_analytic;
        x["above_busy_bound"] = row.above_busy_bound;
        rows.push_back(x);
    }
    j["rows"] = rows;
    j["busy_estimate"] = estimate_json(r.busy_estimate);
    j["fb_matches_busy"] = r.fb_matches_busy;
    j["fb_below_fifo"] = r.fb_below_fifo;
    j["lifo_vs_busy"] = ks_json(r.lifo_vs_busy);
    j["pass"] = r.pass;
    return j;
}

int cmd_validate(const ValidateArgs &a, std::ostream &out) {
    if (a.seeds == 0) throw ConfigError("--seeds must be >= 1");
    Json verdict;
    verdict["check"] = a.check;
    verdict["seeds"] = a.seeds;
    verdict["base_seed"] = a.seed;

    bool pass = false;
    if (a.check == "sum-lemma") {
        std::vector<std::uint64_t> seeds;
        for (std::size_t k = 0; k < a.seeds; ++k) seeds.push_back(a.seed + k);
        SumLemmaOptions options;
        options.zero_x = a.zero_x;
        options.tolerance = a.tolerance;
        options.threads = a.threads;
        const auto r = check_sum_decay_lemma(a.alpha, a.samples, seeds, options);
        verdict["alpha"] = a.alpha;
        verdict["samples"] = a.samples;
        verdict["zero_x"] = a.zero_x;
        verdict["tolerance"] = a.tolerance;
        Json estimates = Json::array();
        for (const auto &e : r.estimates) estimates.push_back(estimate_json(e));
        verdict["estimates"] = estimates;
        verdict["median_rate"] = r.median_rate;
        verdict["max_relative_error"] = r.max_relative_error;
        pass = r.pass;
    } else {
        const QueueModel model = a.model.build();
        verdict["lambda"] = model.arrival_rate();
        verdict["service"] = model.service().spec();

        std::function<Json(std::uint64_t)> one;
        if (a.check == "d-decomp") {
            one = [&](std::uint64_t s) {
                DecompositionOptions o;
                o.spacing = a.spacing;
                o.warmup = a.warmup;
                return decomposition_json(check_D_decomposition(model, a.samples, s, o));
            };
        } else if (a.check == "vtau-decomp") {
            verdict["tau"] = a.tau;
            one = [&](std::uint64_t s) {
                DecompositionOptions o;
                o.spacing = a.spacing;
                o.warmup = a.warmup;
                return decomposition_json(check_Vtau_decomposition(model, a.tau, a.samples, s, o));
            };
        } else if (a.check == "ordering") {
            verdict["customers"] = a.customers;
            one = [&](std::uint64_t s) {
                OrderingOptions o;
                o.warmup = a.warmup;
                o.ks_samples = a.samples;
                o.lifo.spacing = a.spacing;
                o.lifo.warmup = a.warmup;
                return ordering_json(check_discipline_ordering(model, a.customers, s, o));
            };
        } else if (a.check == "pise-mixture") {
            one = [&](std::uint64_t s) {
                MixtureOptions o;
                o.spacing = a.spacing;
                o.warmup = a.warmup;
                Json j;
                j["ks"] = ks_json(check_pise_mixture(model, a.samples, s, o));
                j["pass"] = j["ks"]["pass"];
                return j;
            };
        } else {
            throw ConfigError("unknown check '" + a.check +
                              "' (expected d-decomp|vtau-decomp|sum-lemma|ordering|pise-mixture)");
        }
        if (a.check != "ordering") verdict["samples"] = a.samples;

        const auto runs = parallel_map(a.seeds, a.threads, [&](std::size_t k) {
            Json j = one(a.seed + k);
            Json tagged;
            tagged["seed"] = a.seed + k;
            for (auto it = j.begin(); it != j.end(); ++it) tagged[it.key()] = it.value();
            return tagged;
        });
        std::size_t passed = 0;
        for (const auto &r : runs) passed += r["pass"].get<bool>() ? 1 : 0;
        const auto required = static_cast<std::size_t>(std::ceil(a.required_fraction * static_cast<double>(a.seeds) - 1e-9));
        verdict["passed"] = passed;
        verdict["required"] = required;
        verdict["runs"] = runs;
        pass = passed >= required;
    }
    verdict["pass"] = pass;
    out << to_text(verdict);
    return pass ? 0 : 1;
}

std::string join_args(int argc, const char *const *argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"M/G/1 decay rates under FB, FIFO, LIFO and PS: analytic values, simulation, estimation"};
    app.name("fbq");
    app.set_config("--config", "", "read options from an INI/TOML style file; flags override it");
    app.require_subcommand(1);

    AnalyticArgs analytic;
    auto *c_analytic = app.add_subcommand("analytic", "decay rates c, theta0, drB and the c(tau) curve as JSON");
    add_model(c_analytic, analytic.model, true);
    c_analytic->add_option("--tau", analytic.taus, "truncation points for c(tau)")->delimiter(',');
    c_analytic->add_option("--seed", "accepted for uniformity; analytic results are deterministic");

    SimulateArgs sim;
    auto *c_sim = app.add_subcommand("simulate", "simulate the queue and write samples as CSV");
    add_model(c_sim, sim.model, true);
    c_sim->add_option("--discipline", sim.discipline, "fb|fifo|lifo|ps")->capture_default_str();
    c_sim->add_option("--customers", sim.customers, "customers per replication (busy periods in busy mode)")
        ->capture_default_str();
    c_sim->add_option("--warmup", sim.warmup, "customers discarded before recording")->capture_default_str();
    c_sim->add_option("--seed", sim.seed)->capture_default_str();
    c_sim->add_option("--threads", sim.threads, "replication parallelism")->capture_default_str();
    c_sim->add_option("--replications", sim.replications)->capture_default_str();
    c_sim->add_option("--record-every", sim.record_every, "keep every k-th recorded customer")->capture_default_str();
    c_sim->add_option("--max-in-system", sim.max_in_system, "instability guard")->capture_default_str();
    c_sim->add_option("--mode", sim.mode, "sojourn|busy")->capture_default_str();
    c_sim->add_option("--first", sim.first, "busy mode: generic|exactly|at-least first service")->capture_default_str();
    c_sim->add_option("--tau", sim.tau, "busy mode: tau for --first exactly/at-least");
    c_sim->add_option("--out", sim.out_path, "CSV path (default $FBQ_OUTPUT_DIR/sojourns.csv)");
    add_estimator(c_sim, sim.estimator);

    EstimateArgs est;
    auto *c_est = app.add_subcommand("estimate", "estimate a decay rate from a CSV column");
    c_est->add_option("input", est.input, "CSV file with a header row")->required();
    c_est->add_option("--column", est.column, "column name (default sojourn, then length, then the last)");
    c_est->add_option("--out", est.out_path, "also write the JSON here");
    c_est->add_option("--seed", "accepted for uniformity; estimation is deterministic");
    add_estimator(c_est, est.estimator);

    CompareArgs cmp;
    auto *c_cmp = app.add_subcommand("compare", "analytic against estimated sojourn decay rates per discipline");
    add_model(c_cmp, cmp.model, true);
    c_cmp->add_option("--customers", cmp.customers)->capture_default_str();
    c_cmp->add_option("--warmup", cmp.warmup)->capture_default_str();
    c_cmp->add_option("--seed", cmp.seed)->capture_default_str();
    c_cmp->add_option("--threads", cmp.threads)->capture_default_str();
    c_cmp->add_option("--out", cmp.out_path, "CSV path (default $FBQ_OUTPUT_DIR/compare.csv)");
    c_cmp->add_option("--hcurve", cmp.hcurve_path, "also write h(theta) as a gnuplot data file");
    c_cmp->add_option("--hcurve-points", cmp.hcurve_points)->capture_default_str();

    ValidateArgs val;
    auto *c_val = app.add_subcommand("validate", "run a named check and print a JSON verdict");
    c_val->add_option("check", val.check, "d-decomp|vtau-decomp|sum-lemma|ordering|pise-mixture")->required();
    add_model(c_val, val.model, false);
    c_val->add_option("--samples", val.samples, "samples per side")->capture_default_str();
    c_val->add_option("--customers", val.customers, "ordering: customers per discipline")->capture_default_str();
    c_val->add_option("--warmup", val.warmup)->capture_default_str();
    c_val->add_option("--spacing", val.spacing, "arrivals between recorded samples")->capture_default_str();
    c_val->add_option("--tau", val.tau)->capture_default_str();
    c_val->add_option("--alpha", val.alpha)->capture_default_str();
    c_val->add_flag("--zero-x", val.zero_x, "sum-lemma with X = 0");
    c_val->add_option("--tolerance", val.tolerance, "sum-lemma relative tolerance")->capture_default_str();
    c_val->add_option("--seeds", val.seeds, "number of seeds")->capture_default_str();
    c_val->add_option("--seed", val.seed, "first seed")->capture_default_str();
    c_val->add_option("--threads", val.threads)->capture_default_str();
    c_val->add_option("--required-fraction", val.required_fraction, "share of seeds that must pass")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            if (!app.get_subcommands().empty()) out << app.get_subcommands().front()->help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 2;
    }

    const std::string command_line = join_args(argc, argv);
    CLI::App *chosen = app.get_subcommands().front();
    err << "# resolved config: " << chosen->get_name() << "\n" << chosen->config_to_str(true, false);

    try {
        if (c_analytic->parsed()) return cmd_analytic(analytic, out);
        if (c_sim->parsed()) return cmd_simulate(sim, command_line, out);
        if (c_est->parsed()) return cmd_estimate(est, command_line, out);
        if (c_cmp->parsed()) return cmd_compare(cmp, command_line, out);
        if (c_val->parsed()) return cmd_validate(val, out);
    } catch (const ConfigError &e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        err << "failed: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace fbq::cli
