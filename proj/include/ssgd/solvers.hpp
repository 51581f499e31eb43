#pragma once

// Iterative update kernels: the basic sketched step, synchronous parallel
// averaging, and the two asynchronous primitives (worker SGD step at a stale
// iterate, master convex combination), plus seeded run loops that produce
// B-norm error traces with theoretical bound annotations.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssgd/rate_theory.hpp"
#include "ssgd/rng.hpp"
#include "ssgd/sketch.hpp"

namespace ssgd {

// x - omega B^{-1} A^T S (S^T A B^{-1} A^T S)^dagger S^T (A x - b)
inline Vector basic_step(const Vector& x, const LinearSystem& sys, const DenseMatrix& s,
                         double stepsize) {
    if (stepsize < 0.0) throw validation_error("basic_step: stepsize must be nonnegative");
    if (stepsize == 0.0) return x;
    const Vector g = stoch_grad(sys, s, x);
    Vector out(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= stepsize * g[i];
    return out;
}

// Average of one basic step per sample; summation order is fixed
// left-to-right so runs are bitwise reproducible.
inline Vector parallel_step(const Vector& x, const LinearSystem& sys,
                            std::span<const DenseMatrix> samples, double stepsize) {
    if (samples.empty()) throw validation_error("parallel_step: empty sample list");
    Vector acc(x.size(), 0.0);
    for (const DenseMatrix& s : samples) {
        const Vector step = basic_step(x, sys, s, stepsize);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += step[i];
    }
    const double inv = 1.0 / static_cast<double>(samples.size());
    for (double& v : acc) v *= inv;
    return acc;
}

// Worker-side update: the basic step evaluated at the stale iterate it holds.
inline Vector async_worker_compute(const Vector& x_delayed, const LinearSystem& sys,
                                   const DenseMatrix& s, double stepsize) {
    return basic_step(x_delayed, sys, s, stepsize);
}

// Master-side update: x <- (1-theta) x + theta y.
inline Vector async_master_update(const Vector& x_current, const Vector& y, double damping) {
    if (damping < 0.0 || damping > 1.0)
        throw validation_error("async_master_update: damping must lie in [0, 1]");
    if (x_current.size() != y.size())
        throw validation_error("async_master_update: dimensions disagree");
    Vector out(x_current.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - damping) * x_current[i] + damping * y[i];
    return out;
}

// ---------------------------------------------------------------------------
// run loops

struct TraceRecord {
    std::size_t step = 0;
    double error_bsq = 0.0;  // ||x - x_star||_B^2
    double bound = std::numeric_limits<double>::quiet_NaN();
};

struct RunTrace {
    std::vector<TraceRecord> records;  // strictly increasing step index
    std::string solver;
    double stepsize = 0.0;
    double damping = std::numeric_limits<double>::quiet_NaN();
    std::size_t tau = 1;
    std::uint64_t seed = 0;
    double lambda_min_plus = std::numeric_limits<double>::quiet_NaN();
    double lambda_max = std::numeric_limits<double>::quiet_NaN();
};

struct RunOptions {
    Vector x0;                               // empty: zero vector
    std::size_t stride = 1;                  // record every stride-th step
    std::optional<SpectralProfile> profile;  // for bound annotation; computed
                                             // for discrete distributions when absent
};

namespace detail {

inline SpectralProfile resolve_profile(const LinearSystem& sys, const SketchDistribution& dist,
                                       const RunOptions& opts, bool* have) {
    if (opts.profile) {
        *have = true;
        return *opts.profile;
    }
    if (dist.is_discrete()) {
        *have = true;
        return spectral_profile(sys, dist);
    }
    *have = false;
    return SpectralProfile{};
}

} // namespace detail

// Sequential basic method: bound annotation rho_s(omega,1)^k (lmax/2) e0.
// tau > 1 gives the synchronous parallel method with the matching bound.
// Samples are drawn from a single per-run stream, tau per step in order.
inline RunTrace run_parallel(const LinearSystem& sys, const SketchDistribution& dist,
                             double stepsize, std::size_t tau, std::size_t steps,
                             std::uint64_t seed, const RunOptions& opts = {}) {
    if (tau < 1) throw validation_error("run_parallel: tau must be >= 1");
    if (opts.stride < 1) throw validation_error("run_parallel: stride must be >= 1");

    Vector x = opts.x0.empty() ? Vector(sys.cols(), 0.0) : opts.x0;
    if (x.size() != sys.cols())
        throw validation_error("run_parallel: x0 dimension disagrees with system");
    const Vector x_star = project_onto_solutions(x, sys);

    bool have_profile = false;
    const SpectralProfile profile = detail::resolve_profile(sys, dist, opts, &have_profile);
    const double rho = have_profile ? rho_s(stepsize, tau, profile)
                                    : std::numeric_limits<double>::quiet_NaN();
    const double e0 = b_norm_sq(x - x_star, sys.geometry());
    const double bound_scale = have_profile ? 0.5 * profile.lambda_max * e0
                                            : std::numeric_limits<double>::quiet_NaN();

    RunTrace trace;
    trace.solver = tau == 1 ? "basic" : "parallel";
    trace.stepsize = stepsize;
    trace.tau = tau;
    trace.seed = seed;
    if (have_profile) {
        trace.lambda_min_plus = profile.lambda_min_plus;
        trace.lambda_max = profile.lambda_max;
    }
    trace.records.push_back({0, e0, bound_scale});

    Rng rng = Rng::derive(seed, 0);
    std::vector<DenseMatrix> samples(tau);
    for (std::size_t k = 1; k <= steps; ++k) {
        for (std::size_t i = 0; i < tau; ++i) samples[i] = dist.draw(rng);
        x = parallel_step(x, sys, samples, stepsize);
        if (k % opts.stride == 0 || k == steps) {
            const double bound = have_profile && rho < 1.0
                                     ? std::pow(rho, static_cast<double>(k)) * bound_scale
                                     : std::numeric_limits<double>::quiet_NaN();
            trace.records.push_back({k, b_norm_sq(x - x_star, sys.geometry()), bound});
        }
    }
    return trace;
}

inline RunTrace run_basic(const LinearSystem& sys, const SketchDistribution& dist,
                          double stepsize, std::size_t steps, std::uint64_t seed,
                          const RunOptions& opts = {}) {
    return run_parallel(sys, dist, stepsize, 1, steps, seed, opts);
}

} // namespace ssgd
