#pragma once

// Closed-form convergence-rate machinery: synchronous parallel rates,
// delayed-recurrence coefficients, Perron roots of the characteristic
// polynomial, complexity bounds, tuned parameters for the three boundary
// stepsizes, minimum-processor search and asymptotic comparison.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ssgd/dense.hpp"
#include "ssgd/sketch.hpp"

namespace ssgd {

// ---------------------------------------------------------------------------
// synchronous parallel method

// xi_s(tau) = 1/tau + (1 - 1/tau) lambda_max
inline double xi_s(std::size_t tau, const SpectralProfile& profile) {
    if (tau < 1) throw validation_error("xi_s: tau must be >= 1");
    const double inv = 1.0 / static_cast<double>(tau);
    return inv + (1.0 - inv) * profile.lambda_max;
}

// rho_s(omega, tau) = 1 - omega (2 - omega xi_s(tau)) lambda_min^+
// Values >= 1 are returned as-is; they signal a non-contractive stepsize.
inline double rho_s(double stepsize, std::size_t tau, const SpectralProfile& profile) {
    return 1.0 - stepsize * (2.0 - stepsize * xi_s(tau, profile)) * profile.lambda_min_plus;
}

// minimizer of rho_s over the stepsize
inline double optimal_sync_stepsize(std::size_t tau, const SpectralProfile& profile) {
    return 1.0 / xi_s(tau, profile);
}

inline double rho_s_opt(std::size_t tau, const SpectralProfile& profile) {
    return 1.0 - profile.lambda_min_plus / xi_s(tau, profile);
}

enum class ComplexityKind { SyncExact, AsyncUpperBound, Asymptotic };

struct ComplexityBound {
    double value = std::numeric_limits<double>::infinity();
    double damping = std::numeric_limits<double>::quiet_NaN();  // theta (NaN for sync)
    double stepsize = std::numeric_limits<double>::quiet_NaN(); // omega
    double delay_or_tau = 0.0;  // delta_a = c tau (async, possibly fractional) or tau (sync)
    ComplexityKind kind = ComplexityKind::SyncExact;
};

// Best unit-time iteration complexity of the synchronous parallel method,
// xi_s(tau) / lambda_min^+, attained at omega = 1/xi_s(tau).
inline ComplexityBound chi_s_opt(std::size_t tau, const SpectralProfile& profile) {
    ComplexityBound out;
    out.value = xi_s(tau, profile) / profile.lambda_min_plus;
    out.stepsize = optimal_sync_stepsize(tau, profile);
    out.delay_or_tau = static_cast<double>(tau);
    out.kind = ComplexityKind::SyncExact;
    return out;
}

// ---------------------------------------------------------------------------
// recurrence coefficients for the asynchronous method

// alpha(omega) = max over positive eigenvalues of |1 - omega lambda_i|;
// piecewise: 1 - omega lambda_min^+ below omega*, omega lambda_max - 1 above.
inline double alpha(double stepsize, const SpectralProfile& profile) {
    if (stepsize < 0.0) throw validation_error("alpha: stepsize must be nonnegative");
    if (stepsize <= profile.omega_star) return 1.0 - stepsize * profile.lambda_min_plus;
    return stepsize * profile.lambda_max - 1.0;
}

// Which sub-case of the recurrence estimate applied. The letter is the
// position of omega: A below the first breakpoint, B between, C above.
enum class Regime { Case1A, Case1B, Case1C, Case2A, Case2B, Case2C };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::Case1A: return "case1(i)";
        case Regime::Case1B: return "case1(ii)";
        case Regime::Case1C: return "case1(iii)";
        case Regime::Case2A: return "case2(i)";
        case Regime::Case2B: return "case2(ii)";
        default: return "case2(iii)";
    }
}

struct RateCoefficients {
    double k1 = 0.0;
    double k2 = 0.0;
    double alpha = 0.0;
    Regime regime = Regime::Case1A;
};

// K1 = (1-theta)(1-theta + theta alpha(omega)) in every regime;
// K2 = theta (theta q(omega) + (1-theta) alpha(omega)) where q is
// s(omega) = 1 - omega(2-omega) lambda_min^+ or
// t(omega) = 1 - omega(2-omega) lambda_max, selected by the regime.
// Ties at the breakpoints resolve to the lower interval; the coefficients
// are continuous there. Boundary profiles (k = 1) use the Case-1 split.
inline RateCoefficients recurrence_coeffs(double damping, double stepsize,
                                          const SpectralProfile& profile) {
    if (damping < 0.0 || damping > 1.0)
        throw validation_error("recurrence_coeffs: damping must lie in [0, 1]");
    if (stepsize < 0.0)
        throw validation_error("recurrence_coeffs: stepsize must be nonnegative");

    const double lmin = profile.lambda_min_plus;
    const double lmax = profile.lambda_max;
    const double ws = profile.omega_star;
    const double s = 1.0 - stepsize * (2.0 - stepsize) * lmin;
    const double t = 1.0 - stepsize * (2.0 - stepsize) * lmax;
    const double a_low = 1.0 - stepsize * lmin;
    const double a_high = stepsize * lmax - 1.0;

    RateCoefficients out;
    if (profile.case_tag != CaseTag::Case2) {  // Case 1 and Boundary: omega* <= 2
        if (stepsize <= ws) {
            out.regime = Regime::Case1A;
            out.alpha = a_low;
            out.k2 = damping * (damping * s + (1.0 - damping) * out.alpha);
        } else if (stepsize <= 2.0) {
            out.regime = Regime::Case1B;
            out.alpha = a_high;
            out.k2 = damping * (damping * s + (1.0 - damping) * out.alpha);
        } else {
            out.regime = Regime::Case1C;
            out.alpha = a_high;
            out.k2 = damping * (damping * t + (1.0 - damping) * out.alpha);
        }
    } else {  // Case 2: omega* >= 2
        if (stepsize <= 2.0) {
            out.regime = Regime::Case2A;
            out.alpha = a_low;
            out.k2 = damping * (damping * s + (1.0 - damping) * out.alpha);
        } else if (stepsize <= ws) {
            out.regime = Regime::Case2B;
            out.alpha = a_low;
            out.k2 = damping * (damping * t + (1.0 - damping) * out.alpha);
        } else {
            out.regime = Regime::Case2C;
            out.alpha = a_high;
            out.k2 = damping * (damping * t + (1.0 - damping) * out.alpha);
        }
    }
    out.k1 = (1.0 - damping) * (1.0 - damping + damping * out.alpha);
    return out;
}

// ---------------------------------------------------------------------------
// characteristic polynomial of the delayed recurrence

// (delay+1) x (delay+1) companion form: top row [K1, 0, ..., 0, K2],
// identity sub-diagonal. delay = 0 collapses to the 1x1 matrix [K1+K2].
inline DenseMatrix state_transition_matrix(double k1, double k2, std::size_t delay) {
    if (k1 < 0.0 || k2 < 0.0)
        throw validation_error("state_transition_matrix: coefficients must be nonnegative");
    if (delay == 0) return DenseMatrix{{k1 + k2}};
    DenseMatrix m(delay + 1, delay + 1);
    m(0, 0) = k1;
    m(0, delay) = k2;
    for (std::size_t i = 1; i <= delay; ++i) m(i, i - 1) = 1.0;
    return m;
}

struct PerronRoot {
    double value = 0.0;
    bool degenerate = false;  // K1 = K2 = 0: no positive root, 0 returned
};

// p_delta(g) = g^{delta+1} - K1 g^delta - K2
inline double characteristic_poly(double k1, double k2, std::size_t delay, double g) {
    return std::pow(g, static_cast<double>(delay)) * (g - k1) - k2;
}

// Unique positive root of p_delta by safeguarded bisection. The root is the
// spectral radius of the companion matrix and is < 1 exactly when K1+K2 < 1.
inline PerronRoot characteristic_perron_root(double k1, double k2, std::size_t delay,
                                             double tol = 1e-12) {
    if (k1 < 0.0 || k2 < 0.0)
        throw validation_error("characteristic_perron_root: coefficients must be nonnegative");
    if (k1 == 0.0 && k2 == 0.0) return PerronRoot{0.0, true};
    if (k2 == 0.0) return PerronRoot{k1, false};
    if (delay == 0) return PerronRoot{k1 + k2, false};

    double lo = std::max(k1, std::pow(k2, 1.0 / static_cast<double>(delay + 1)));
    double hi = k1 + k2;
    if (characteristic_poly(k1, k2, delay, hi) < 0.0) hi = 1.0 + k1 + k2;  // K1+K2 < 1 bracket

    for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (characteristic_poly(k1, k2, delay, mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return PerronRoot{0.5 * (lo + hi), false};
}

// Root of the bounding polynomial g_delta, an upper bound for the Perron root
// whenever K1 + K2 <= 1:  u = ((K2 + 1/delta) / (1 - K1 + 1/delta))^{1/delta}.
inline double bounding_root_u(double k1, double k2, std::size_t delay) {
    if (delay == 0)
        throw validation_error("bounding_root_u: undefined for delay 0");
    const double inv = 1.0 / static_cast<double>(delay);
    const double denom = 1.0 - k1 + inv;
    if (denom <= 0.0)
        throw infeasible_error("bounding_root_u: 1 - K1 + 1/delta must be positive");
    return std::pow((k2 + inv) / denom, inv);
}

// Unit-time-interval rate bound rho_a <= u^{delta_a} = (K2+1/d)/(1-K1+1/d).
inline double rho_a_bound_from_coeffs(double k1, double k2, std::size_t delay_max) {
    if (delay_max == 0)
        throw validation_error("rho_a_bound: delay_max must be >= 1");
    const double inv = 1.0 / static_cast<double>(delay_max);
    const double denom = 1.0 - k1 + inv;
    if (denom <= 0.0)
        throw infeasible_error("rho_a_bound: 1 - K1 + 1/delta must be positive");
    return (k2 + inv) / denom;
}

inline double rho_a_bound(double damping, double stepsize, std::size_t delay_max,
                          const SpectralProfile& profile) {
    const RateCoefficients c = recurrence_coeffs(damping, stepsize, profile);
    return rho_a_bound_from_coeffs(c.k1, c.k2, delay_max);
}

// Iteration-complexity bound U(theta, omega) = (1 - K1 + 1/delta_a)/(1 - K1 - K2),
// feasible only when K1 + K2 < 1.
inline double upper_u_from_coeffs(double k1, double k2, std::size_t delay_max) {
    if (delay_max == 0)
        throw validation_error("upper_u: delay_max must be >= 1");
    if (k1 + k2 >= 1.0)
        throw infeasible_error("upper_u: bound infeasible, K1 + K2 >= 1");
    const double inv = 1.0 / static_cast<double>(delay_max);
    return (1.0 - k1 + inv) / (1.0 - k1 - k2);
}

inline double upper_u(double damping, double stepsize, std::size_t delay_max,
                      const SpectralProfile& profile) {
    const RateCoefficients c = recurrence_coeffs(damping, stepsize, profile);
    return upper_u_from_coeffs(c.k1, c.k2, delay_max);
}

// ---------------------------------------------------------------------------
// tuned damping at the three boundary stepsizes

// argmin over theta of U(theta, 1):
// theta_1 = (sqrt(1 + 2 d (1-lmin)) - 1) / (d (1-lmin)), extended to 1 at lmin = 1.
// The delay may be fractional (delta_a = c tau with non-integer c).
inline double theta_opt_at_omega1(double delay_max, const SpectralProfile& profile) {
    if (delay_max < 1.0) throw validation_error("theta_opt_at_omega1: delay_max must be >= 1");
    const double gap = 1.0 - profile.lambda_min_plus;
    if (gap < 1e-12) return 1.0;
    return (std::sqrt(1.0 + 2.0 * delay_max * gap) - 1.0) / (delay_max * gap);
}

// argmin over theta of U(theta, 2): theta_2 = (sqrt(d+1) - 1)/d.
inline double theta_opt_at_omega2(double delay_max) {
    if (delay_max < 1.0) throw validation_error("theta_opt_at_omega2: delay_max must be >= 1");
    return (std::sqrt(delay_max + 1.0) - 1.0) / delay_max;
}

// argmin over theta of U(theta, omega*):
// theta = k (sqrt(1 + d(2-k)) - 1) / (d (2-k)), extended to 1 at k = 2.
inline double theta_opt_at_omegastar(double delay_max, const SpectralProfile& profile) {
    if (delay_max < 1.0)
        throw validation_error("theta_opt_at_omegastar: delay_max must be >= 1");
    const double gap = 2.0 - profile.k;
    if (gap < 1e-12) return 1.0;
    return profile.k * (std::sqrt(1.0 + delay_max * gap) - 1.0) / (delay_max * gap);
}

// ---------------------------------------------------------------------------
// published complexity expressions for the tuned parameter pairs.
// These are the xi_a(omega, tau)/lambda_min^+ forms the comparison tables are
// built from; chi_a_opt_bound, min_processors and the rates report use them.

// xi_a(1, .)/lmin = [3/4 + (1 + sqrt(1 + 2 d (1-lmin)))/(4d)] / lmin
inline double complexity_at_theta1(double delay_max, const SpectralProfile& profile) {
    if (delay_max < 1.0) throw validation_error("complexity_at_theta1: delay_max must be >= 1");
    const double d = delay_max;
    const double lmin = profile.lambda_min_plus;
    const double root = std::sqrt(1.0 + 2.0 * d * (1.0 - lmin));
    return (0.75 + (1.0 + root) / (4.0 * d)) / lmin;
}

// xi_a(omega*, .)/lmin with k = lmin + lmax:
// [(3 lmin + lmax)/4 + (sqrt(1+d(2-k)) + 2(d + 1 + d(1-k) lmin)) / (2 d sqrt(1+d(2-k)))] / lmin
inline double complexity_at_thetastar(double delay_max, const SpectralProfile& profile) {
    if (delay_max < 1.0)
        throw validation_error("complexity_at_thetastar: delay_max must be >= 1");
    const double d = delay_max;
    const double lmin = profile.lambda_min_plus;
    const double lmax = profile.lambda_max;
    const double k = profile.k;
    const double root = std::sqrt(1.0 + d * (2.0 - k));
    const double head = (3.0 * lmin + lmax) / 4.0;
    const double tail = (root + 2.0 * (d + 1.0 + d * (1.0 - k) * lmin)) / (2.0 * d * root);
    return (head + tail) / lmin;
}

// xi_a(2, .)/lmin = [1/4 + lmin/2 + (1 + sqrt(d+1))/(2d)] / lmin
inline double complexity_at_theta2(double delay_max, const SpectralProfile& profile) {
    if (delay_max < 1.0) throw validation_error("complexity_at_theta2: delay_max must be >= 1");
    const double d = delay_max;
    const double lmin = profile.lambda_min_plus;
    return (0.25 + 0.5 * lmin + (1.0 + std::sqrt(d + 1.0)) / (2.0 * d)) / lmin;
}

// Best available complexity bound for the asynchronous method at a given
// maximum delay. Case 1 (and the k = 1 boundary, where both candidates
// coincide): min of the omega = 1 and omega = omega* boundary values.
// Case 2: min of the omega = 2 and omega = 1 values; the omega = 1 term is
// kept because the ordering lemma only applies from delta_a >= 4.
inline ComplexityBound chi_a_opt_bound(double delay_max, const SpectralProfile& profile) {
    if (delay_max < 1.0) throw validation_error("chi_a_opt_bound: delay_max must be >= 1");
    ComplexityBound out;
    out.kind = ComplexityKind::AsyncUpperBound;
    out.delay_or_tau = delay_max;

    const double at1 = complexity_at_theta1(delay_max, profile);
    if (profile.case_tag != CaseTag::Case2) {
        const double atstar = complexity_at_thetastar(delay_max, profile);
        if (atstar <= at1) {
            out.value = atstar;
            out.damping = theta_opt_at_omegastar(delay_max, profile);
            out.stepsize = profile.omega_star;
        } else {
            out.value = at1;
            out.damping = theta_opt_at_omega1(delay_max, profile);
            out.stepsize = 1.0;
        }
    } else {
        const double at2 = complexity_at_theta2(delay_max, profile);
        if (at2 <= at1) {
            out.value = at2;
            out.damping = theta_opt_at_omega2(delay_max);
            out.stepsize = 2.0;
        } else {
            out.value = at1;
            out.damping = theta_opt_at_omega1(delay_max, profile);
            out.stepsize = 1.0;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// synchronous vs asynchronous comparison

// Smallest tau in [2, tau_max] for which the asynchronous bound beats the
// synchronous optimum. The complexity formulas take delta_a = c tau exactly,
// fractional values included; only the event schedule of the simulator needs
// an integer delay.
inline std::optional<std::size_t> min_processors(const SpectralProfile& profile, double c,
                                                 std::size_t tau_max) {
    if (c < 1.0) throw validation_error("min_processors: c must be >= 1");
    if (tau_max < 2) throw validation_error("min_processors: tau_max must be >= 2");
    for (std::size_t tau = 2; tau <= tau_max; ++tau) {
        const double delay = c * static_cast<double>(tau);
        if (chi_a_opt_bound(delay, profile).value < chi_s_opt(tau, profile).value)
            return tau;
    }
    return std::nullopt;
}

struct AsymptoticComparison {
    double sync_limit = 0.0;   // lambda_max / lambda_min^+
    double async_limit = 0.0;  // case-dependent closed form
    bool async_better = false;
};

// tau -> infinity limits: sync complexity tends to lambda_max/lambda_min^+;
// async tends to (3 lmin + lmax)/(4 lmin) in Case 1 and
// (1/4 + lmin/2)/lmin in Case 2.
inline AsymptoticComparison asymptotic_limits(const SpectralProfile& profile) {
    AsymptoticComparison out;
    out.sync_limit = profile.lambda_max / profile.lambda_min_plus;
    const double lmin = profile.lambda_min_plus;
    if (profile.case_tag != CaseTag::Case2)
        out.async_limit = (0.75 * lmin + 0.25 * profile.lambda_max) / lmin;
    else
        out.async_limit = (0.25 + 0.5 * lmin) / lmin;
    out.async_better = out.async_limit < out.sync_limit;
    return out;
}

// ---------------------------------------------------------------------------
// recurrence diagnostics

// q_{t+1} = K1 q_t + K2 q_{t-delta}, seeded with delta+1 initial values;
// the returned sequence contains the initial values followed by `steps` terms.
inline std::vector<double> iterate_recurrence(double k1, double k2, std::size_t delay,
                                              std::span<const double> initial,
                                              std::size_t steps) {
    if (initial.size() != delay + 1)
        throw validation_error("iterate_recurrence: need delay+1 initial values");
    if (steps < 1) throw validation_error("iterate_recurrence: steps must be >= 1");
    std::vector<double> q(initial.begin(), initial.end());
    q.reserve(initial.size() + steps);
    for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t last = q.size() - 1;
        q.push_back(k1 * q[last] + k2 * q[last - delay]);
    }
    return q;
}

// coordinatewise P_{t+1}^i = (1-theta) P_t^i + theta (1 - omega lambda_i) P_{t-delta}^i
inline Vector weak_recursion_step(std::span<const double> p_now, std::span<const double> p_delayed,
                                  double damping, double stepsize,
                                  std::span<const double> eigenvalues) {
    if (damping < 0.0 || damping > 1.0)
        throw validation_error("weak_recursion_step: damping must lie in [0, 1]");
    if (p_now.size() != p_delayed.size() || p_now.size() != eigenvalues.size())
        throw validation_error("weak_recursion_step: length mismatch");
    Vector out(p_now.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - damping) * p_now[i] +
                 damping * (1.0 - stepsize * eigenvalues[i]) * p_delayed[i];
    return out;
}

// ---------------------------------------------------------------------------
// grid search over U(theta, omega)

struct GridCell {
    double damping = 0.0;
    double stepsize = 0.0;
    double u = std::numeric_limits<double>::infinity();  // +inf marks infeasible cells
};

struct GridSearchResult {
    double damping = 0.0;
    double stepsize = 0.0;
    double u = std::numeric_limits<double>::infinity();
    std::size_t damping_index = 0;
    std::size_t stepsize_index = 0;
    std::vector<GridCell> surface;  // damping-major order
};

// Exhaustive evaluation of U over the grid; infeasible cells (K1+K2 >= 1 or
// theta = 0) are recorded as +inf. Argmin ties keep the smallest damping
// index, then the smallest stepsize index.
inline GridSearchResult grid_search_u(std::size_t delay_max, const SpectralProfile& profile,
                                      std::span<const double> damping_grid,
                                      std::span<const double> stepsize_grid) {
    if (damping_grid.empty() || stepsize_grid.empty())
        throw validation_error("grid_search_u: empty grid");
    GridSearchResult out;
    out.surface.reserve(damping_grid.size() * stepsize_grid.size());
    bool found = false;
    for (std::size_t ti = 0; ti < damping_grid.size(); ++ti) {
        for (std::size_t wi = 0; wi < stepsize_grid.size(); ++wi) {
            GridCell cell;
            cell.damping = damping_grid[ti];
            cell.stepsize = stepsize_grid[wi];
            try {
                cell.u = upper_u(cell.damping, cell.stepsize, delay_max, profile);
            } catch (const infeasible_error&) {
                cell.u = std::numeric_limits<double>::infinity();
            }
            if (cell.u < out.u) {
                out.u = cell.u;
                out.damping = cell.damping;
                out.stepsize = cell.stepsize;
                out.damping_index = ti;
                out.stepsize_index = wi;
                found = true;
            }
            out.surface.push_back(cell);
        }
    }
    if (!found)
        throw infeasible_error("grid_search_u: no feasible grid cell");
    return out;
}

} // namespace ssgd
