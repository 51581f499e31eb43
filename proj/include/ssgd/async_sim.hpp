#pragma once

// Deterministic logical-time simulation of the master-worker asynchronous
// method: heterogeneous worker speeds, staleness-annotated event schedules,
// trial-averaged error traces per master update and per unit interval, and
// comparison of the empirical unit-interval rate against the theory bound.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ssgd/rate_theory.hpp"
#include "ssgd/rng.hpp"
#include "ssgd/sketch.hpp"
#include "ssgd/solvers.hpp"

namespace ssgd {

enum class ScheduleKind { RoundRobinWeighted, SeededRandomWeighted };

struct ScheduleEvent {
    std::size_t worker = 0;
    std::size_t staleness = 0;  // the event consumes the snapshot x_{t - staleness}
};

struct Schedule {
    std::size_t tau = 0;
    double c = 1.0;
    std::size_t delay_max = 0;                   // delta_a = round(c tau)
    std::vector<std::size_t> updates_per_worker; // S_i, sum = delta_a, min = 1
    std::vector<ScheduleEvent> events;           // delta_max events per interval
};

namespace detail {

// Worker speeds: the slowest worker performs exactly one update per interval;
// the remaining delta_a - 1 updates are dealt round-robin to the others.
inline std::vector<std::size_t> allocate_speeds(std::size_t tau, std::size_t delay_max) {
    std::vector<std::size_t> s(tau, 0);
    s[0] = 1;
    for (std::size_t j = 0; j + 1 < delay_max; ++j) s[1 + j % (tau - 1)] += 1;
    return s;
}

// Deterministic interleaving: worker i's j-th update completes at fraction
// (j+1)/S_i of the interval; events are ordered by completion time, ties by
// worker id.
inline std::vector<std::size_t> round_robin_order(const std::vector<std::size_t>& speeds,
                                                  std::size_t delay_max) {
    std::vector<std::pair<double, std::size_t>> timed;
    timed.reserve(delay_max);
    for (std::size_t w = 0; w < speeds.size(); ++w)
        for (std::size_t j = 0; j < speeds[w]; ++j)
            timed.emplace_back(static_cast<double>(j + 1) / static_cast<double>(speeds[w]), w);
    std::stable_sort(timed.begin(), timed.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
    std::vector<std::size_t> order(delay_max);
    for (std::size_t i = 0; i < delay_max; ++i) order[i] = timed[i].second;
    return order;
}

inline std::vector<std::size_t> shuffled_order(const std::vector<std::size_t>& speeds,
                                               std::size_t delay_max, Rng& rng) {
    std::vector<std::size_t> order;
    order.reserve(delay_max);
    for (std::size_t w = 0; w < speeds.size(); ++w)
        for (std::size_t j = 0; j < speeds[w]; ++j) order.push_back(w);
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

} // namespace detail

// Build `intervals` unit intervals of master events. Each event's staleness
// is the number of master updates since the master last served that worker,
// capped at delta_a; the slowest worker realizes staleness delta_a exactly in
// steady state, which is what equates delta_a with the maximum delay.
inline Schedule build_schedule(std::size_t tau, double c, ScheduleKind kind, std::uint64_t seed,
                               std::size_t intervals = 1) {
    if (tau < 2) throw validation_error("build_schedule: tau must be >= 2");
    if (c < 1.0) throw validation_error("build_schedule: c must be >= 1");
    if (intervals < 1) throw validation_error("build_schedule: intervals must be >= 1");
    const auto delay_max =
        static_cast<std::size_t>(std::llround(c * static_cast<double>(tau)));
    if (delay_max < tau)
        throw validation_error("build_schedule: infeasible speed allocation, round(c tau) < tau");

    Schedule out;
    out.tau = tau;
    out.c = c;
    out.delay_max = delay_max;
    out.updates_per_worker = detail::allocate_speeds(tau, delay_max);
    out.events.reserve(intervals * delay_max);

    Rng rng = Rng::derive(seed, 0);
    const std::vector<std::size_t> fixed_order =
        detail::round_robin_order(out.updates_per_worker, delay_max);

    std::vector<std::size_t> last_served(tau, 0);
    std::size_t t = 0;
    for (std::size_t interval = 0; interval < intervals; ++interval) {
        const std::vector<std::size_t> local =
            kind == ScheduleKind::RoundRobinWeighted
                ? fixed_order
                : detail::shuffled_order(out.updates_per_worker, delay_max, rng);
        for (std::size_t w : local) {
            const std::size_t raw = t - last_served[w];
            out.events.push_back({w, std::min(raw, delay_max)});
            last_served[w] = t;
            ++t;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// simulation

struct EventRecord {
    std::size_t t = 0;  // master update count after applying the event
    std::size_t worker = 0;
    std::size_t staleness = 0;
    double mean_error = 0.0;  // trial mean of ||x_t - x_star||_B^2
    double se = 0.0;          // standard error of the mean
};

struct IntervalRecord {
    std::size_t interval = 0;
    double mean_error = 0.0;
    double se = 0.0;
    double bound = std::numeric_limits<double>::quiet_NaN();
};

// Eventwise statistic for the recursion residual
// d_t = e_{t+1} - K1 e_t - K2 e_{t-delta}, negative in expectation.
struct RecursionCheck {
    std::size_t t = 0;
    double mean = 0.0;
    double se = 0.0;
};

struct ConvergenceReport {
    std::vector<EventRecord> events;       // t = 1 .. intervals * delta_a
    std::vector<IntervalRecord> intervals; // index 0 holds the initial error
    std::vector<RecursionCheck> recursion; // filled when a profile was supplied
    std::vector<Vector> mean_iterates;     // filled on request (weak-recursion diagnostics)
    double initial_error = 0.0;
    double damping = 0.0;
    double stepsize = 0.0;
    double c = 1.0;
    std::size_t tau = 0;
    std::size_t delay_max = 0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    bool bound_feasible = false;
    double rate_bound = std::numeric_limits<double>::quiet_NaN();  // rho_a upper bound
    double k1 = std::numeric_limits<double>::quiet_NaN();
    double k2 = std::numeric_limits<double>::quiet_NaN();
};

struct SimulationOptions {
    Vector x0;  // empty: zero vector (lies in Im(B^{-1} A^T))
    ScheduleKind kind = ScheduleKind::RoundRobinWeighted;
    std::optional<Schedule> schedule_override;   // must cover all intervals
    std::optional<SpectralProfile> profile;      // computed for discrete dists when absent
    bool record_mean_iterates = false;
};

// Trial-averaged asynchronous run. Each trial is single-threaded and fully
// deterministic: per-worker sketch streams are split from the trial seed, the
// master applies events in schedule order, and each event's worker step uses
// the iterate snapshot x_{t - staleness} from the history ring buffer (warm
// start: the whole buffer holds x0).
inline ConvergenceReport simulate(const LinearSystem& sys, const SketchDistribution& dist,
                                  std::size_t tau, double c, double damping, double stepsize,
                                  std::size_t intervals, std::size_t trials, std::uint64_t seed,
                                  const SimulationOptions& opts = {}) {
    if (damping < 0.0 || damping > 1.0)
        throw validation_error("simulate: damping must lie in [0, 1]");
    if (stepsize < 0.0) throw validation_error("simulate: stepsize must be nonnegative");
    if (intervals < 1 || trials < 1)
        throw validation_error("simulate: intervals and trials must be >= 1");

    const Vector x0 = opts.x0.empty() ? Vector(sys.cols(), 0.0) : opts.x0;
    if (x0.size() != sys.cols())
        throw validation_error("simulate: x0 dimension disagrees with system");
    const Vector x_star = project_onto_solutions(x0, sys);
    const double e0 = b_norm_sq(x0 - x_star, sys.geometry());

    bool have_profile = false;
    SpectralProfile profile;
    if (opts.profile) {
        profile = *opts.profile;
        have_profile = true;
    } else if (dist.is_discrete()) {
        profile = spectral_profile(sys, dist);
        have_profile = true;
    }

    const Schedule base_schedule =
        opts.schedule_override
            ? *opts.schedule_override
            : build_schedule(tau, c, ScheduleKind::RoundRobinWeighted, seed, intervals);
    const std::size_t delay_max = base_schedule.delay_max;
    const std::size_t total_steps = intervals * delay_max;
    if (base_schedule.events.size() < total_steps)
        throw validation_error("simulate: schedule does not cover the requested intervals");

    ConvergenceReport report;
    report.initial_error = e0;
    report.damping = damping;
    report.stepsize = stepsize;
    report.c = c;
    report.tau = tau;
    report.delay_max = delay_max;
    report.trials = trials;
    report.seed = seed;
    if (have_profile) {
        const RateCoefficients coeffs = recurrence_coeffs(damping, stepsize, profile);
        report.k1 = coeffs.k1;
        report.k2 = coeffs.k2;
        report.bound_feasible = coeffs.k1 + coeffs.k2 < 1.0;
        if (report.bound_feasible)
            report.rate_bound = rho_a_bound_from_coeffs(coeffs.k1, coeffs.k2, delay_max);
    }

    std::vector<double> err_sum(total_steps + 1, 0.0), err_sumsq(total_steps + 1, 0.0);
    std::vector<double> rec_sum(total_steps, 0.0), rec_sumsq(total_steps, 0.0);
    std::vector<Vector> iter_sum;
    if (opts.record_mean_iterates)
        iter_sum.assign(total_steps + 1, Vector(sys.cols(), 0.0));

    const bool random_schedule = !opts.schedule_override && opts.kind == ScheduleKind::SeededRandomWeighted;
    std::vector<ScheduleEvent> trial0_events;

    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::uint64_t trial_seed = splitmix64(seed ^ splitmix64(trial));
        const Schedule& schedule = random_schedule
            ? build_schedule(tau, c, ScheduleKind::SeededRandomWeighted, trial_seed, intervals)
            : base_schedule;
        if (trial == 0)
            trial0_events.assign(schedule.events.begin(), schedule.events.begin() + total_steps);

        std::vector<Rng> worker_rng;
        worker_rng.reserve(tau);
        for (std::size_t w = 0; w < tau; ++w) worker_rng.push_back(Rng::derive(trial_seed, 1 + w));

        std::vector<Vector> history(delay_max + 1, x0);  // ring: history[t % (delay_max+1)] = x_t
        std::vector<double> errors(total_steps + 1, 0.0);
        errors[0] = e0;
        Vector x = x0;

        if (opts.record_mean_iterates)
            for (std::size_t i = 0; i < x0.size(); ++i) iter_sum[0][i] += x0[i];

        for (std::size_t t = 0; t < total_steps; ++t) {
            const ScheduleEvent& ev = schedule.events[t];
            const std::size_t snap_t = t >= ev.staleness ? t - ev.staleness : 0;
            const Vector& snapshot = history[snap_t % (delay_max + 1)];
            const DenseMatrix s = dist.draw(worker_rng[ev.worker]);
            const Vector y = basic_step(snapshot, sys, s, stepsize);
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] = (1.0 - damping) * x[i] + damping * y[i];
            history[(t + 1) % (delay_max + 1)] = x;

            const double e = b_norm_sq(x - x_star, sys.geometry());
            errors[t + 1] = e;
            err_sum[t + 1] += e;
            err_sumsq[t + 1] += e * e;
            if (have_profile) {
                const double d = e - report.k1 * errors[t] - report.k2 * errors[snap_t];
                rec_sum[t] += d;
                rec_sumsq[t] += d * d;
            }
            if (opts.record_mean_iterates)
                for (std::size_t i = 0; i < x.size(); ++i) iter_sum[t + 1][i] += x[i];
        }
    }

    const double nt = static_cast<double>(trials);
    auto se_of = [&](double sum, double sumsq) {
        if (trials < 2) return 0.0;
        const double mean = sum / nt;
        const double var = std::max(0.0, (sumsq - nt * mean * mean) / (nt - 1.0));
        return std::sqrt(var / nt);
    };

    report.events.reserve(total_steps);
    for (std::size_t t = 1; t <= total_steps; ++t) {
        EventRecord rec;
        rec.t = t;
        rec.worker = trial0_events[t - 1].worker;
        rec.staleness = trial0_events[t - 1].staleness;
        rec.mean_error = err_sum[t] / nt;
        rec.se = se_of(err_sum[t], err_sumsq[t]);
        report.events.push_back(rec);
    }

    report.intervals.reserve(intervals + 1);
    report.intervals.push_back({0, e0, 0.0, e0});
    for (std::size_t j = 1; j <= intervals; ++j) {
        const std::size_t t = j * delay_max;
        IntervalRecord rec;
        rec.interval = j;
        rec.mean_error = err_sum[t] / nt;
        rec.se = se_of(err_sum[t], err_sumsq[t]);
        rec.bound = report.bound_feasible
                        ? std::pow(report.rate_bound, static_cast<double>(j)) * e0
                        : std::numeric_limits<double>::quiet_NaN();
        report.intervals.push_back(rec);
    }

    if (have_profile) {
        report.recursion.reserve(total_steps);
        for (std::size_t t = 0; t < total_steps; ++t)
            report.recursion.push_back({t, rec_sum[t] / nt, se_of(rec_sum[t], rec_sumsq[t])});
    }
    if (opts.record_mean_iterates) {
        report.mean_iterates.resize(total_steps + 1);
        for (std::size_t t = 0; t <= total_steps; ++t) {
            report.mean_iterates[t] = iter_sum[t];
            for (double& v : report.mean_iterates[t]) v /= nt;
        }
    }
    return report;
}

// Geometric mean of successive interval error ratios over the trial-averaged
// trace; exact-convergence tails are excluded.
inline double empirical_unit_rate(const ConvergenceReport& report) {
    const auto& iv = report.intervals;
    if (iv.size() < 2) throw validation_error("empirical_unit_rate: need at least one interval");
    std::size_t last = 0;
    while (last + 1 < iv.size() && iv[last + 1].mean_error > 0.0) ++last;
    if (last == 0 || iv[0].mean_error <= 0.0)
        throw validation_error("empirical_unit_rate: need >= 2 intervals with nonzero errors");
    return std::pow(iv[last].mean_error / iv[0].mean_error, 1.0 / static_cast<double>(last));
}

enum class BoundVerdict { Pass, Fail, NoGuarantee };

inline const char* to_string(BoundVerdict v) {
    switch (v) {
        case BoundVerdict::Pass: return "pass";
        case BoundVerdict::Fail: return "fail";
        default: return "no theoretical guarantee";
    }
}

struct BoundComparison {
    double empirical_rate = std::numeric_limits<double>::quiet_NaN();
    double empirical_se = 0.0;
    double bound = std::numeric_limits<double>::quiet_NaN();
    double k1 = 0.0;
    double k2 = 0.0;
    bool feasible = false;
    BoundVerdict verdict = BoundVerdict::NoGuarantee;
    std::vector<std::pair<std::size_t, double>> per_delay_roots;  // realized delay -> Perron root
};

// Empirical unit rate vs the rho_a bound, with Perron roots for every
// realized staleness. The pass test allows 3 standard errors of slack.
inline BoundComparison compare_to_bound(const ConvergenceReport& report,
                                        const SpectralProfile& profile) {
    const RateCoefficients coeffs =
        recurrence_coeffs(report.damping, report.stepsize, profile);
    BoundComparison out;
    out.k1 = coeffs.k1;
    out.k2 = coeffs.k2;
    out.feasible = coeffs.k1 + coeffs.k2 < 1.0;

    out.empirical_rate = empirical_unit_rate(report);
    // delta-method standard error of (m_L / m_0)^{1/L}; m_0 is deterministic
    const auto& iv = report.intervals;
    std::size_t last = 0;
    while (last + 1 < iv.size() && iv[last + 1].mean_error > 0.0) ++last;
    if (last > 0 && iv[last].mean_error > 0.0)
        out.empirical_se = out.empirical_rate * iv[last].se /
                           (iv[last].mean_error * static_cast<double>(last));

    std::vector<std::size_t> delays;
    for (const auto& ev : report.events) delays.push_back(ev.staleness);
    std::sort(delays.begin(), delays.end());
    delays.erase(std::unique(delays.begin(), delays.end()), delays.end());
    for (std::size_t d : delays)
        out.per_delay_roots.emplace_back(
            d, characteristic_perron_root(coeffs.k1, coeffs.k2, d).value);

    if (!out.feasible) {
        out.verdict = BoundVerdict::NoGuarantee;
        return out;
    }
    out.bound = rho_a_bound_from_coeffs(coeffs.k1, coeffs.k2, report.delay_max);
    out.verdict = out.empirical_rate <= out.bound + 3.0 * out.empirical_se
                      ? BoundVerdict::Pass
                      : BoundVerdict::Fail;
    return out;
}

} // namespace ssgd
