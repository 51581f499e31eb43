#pragma once

// Shared test fixtures: seeded random systems/profiles and the independent
// oracles (power iteration, finite differences, companion eigensolve) the
// closed-form implementations are checked against.

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "ssgd/dense.hpp"
#include "ssgd/rate_theory.hpp"
#include "ssgd/rng.hpp"
#include "ssgd/sketch.hpp"

namespace testutil {

using ssgd::DenseMatrix;
using ssgd::Rng;
using ssgd::Vector;

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

inline DenseMatrix random_symmetric(std::size_t n, Rng& rng) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = rng.normal();
            m(i, j) = v;
            m(j, i) = v;
        }
    return m;
}

inline DenseMatrix random_rank_deficient(std::size_t rows, std::size_t cols, std::size_t rank,
                                         Rng& rng) {
    if (rank == 0) return DenseMatrix(rows, cols);
    return random_matrix(rows, rank, rng) * random_matrix(rank, cols, rng);
}

inline ssgd::SpdMatrix random_spd(std::size_t n, Rng& rng) {
    const DenseMatrix g = random_matrix(n, n, rng);
    DenseMatrix b = g.transpose() * g;
    for (std::size_t i = 0; i < n; ++i) b(i, i) += 1.0;
    return ssgd::SpdMatrix(std::move(b));
}

inline Vector random_vector(std::size_t n, Rng& rng) {
    Vector v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

// Consistent system: b = A x_true, optionally rank-deficient A, optional
// non-identity SPD geometry.
inline ssgd::LinearSystem random_consistent_system(std::size_t rows, std::size_t cols,
                                                   std::uint64_t seed, bool general_geometry = true,
                                                   std::size_t rank = 0) {
    Rng rng(seed);
    DenseMatrix a = rank == 0 ? random_matrix(rows, cols, rng)
                              : random_rank_deficient(rows, cols, rank, rng);
    const Vector x_true = random_vector(cols, rng);
    Vector b = a * x_true;
    ssgd::SpdMatrix geom =
        general_geometry ? random_spd(cols, rng) : ssgd::SpdMatrix::identity(cols);
    return ssgd::LinearSystem(std::move(a), std::move(b), std::move(geom));
}

inline ssgd::LinearSystem identity_system(std::size_t n = 2) {
    return ssgd::LinearSystem(DenseMatrix::identity(n), Vector(n, 0.0),
                              ssgd::SpdMatrix::identity(n));
}

inline ssgd::SpectralProfile random_profile(ssgd::CaseTag tag, Rng& rng) {
    for (;;) {
        double lmax, lmin;
        if (tag == ssgd::CaseTag::Case1) {
            lmax = 0.55 + 0.45 * rng.uniform();
            lmin = std::min(lmax, (1.0 - lmax) + (2.0 * lmax - 1.0) * rng.uniform() + 1e-3);
        } else {
            lmax = 0.1 + 0.55 * rng.uniform();
            lmin = std::min(0.999 * lmax, (1.0 - lmax) * rng.uniform());
        }
        if (lmin <= 1e-6 || lmin > lmax || lmax > 1.0) continue;
        const double k = lmin + lmax;
        if (tag == ssgd::CaseTag::Case1 && k <= 1.0 + 1e-9) continue;
        if (tag == ssgd::CaseTag::Case2 && k >= 1.0 - 1e-9) continue;
        return ssgd::profile_from_extremes(lmin, lmax);
    }
}

// ---------------------------------------------------------------------------
// oracles

// Dominant eigenvalue of the nonnegative companion matrix by power iteration.
// Iterates on M + I: the roots of the characteristic polynomial can share a
// modulus (K1 -> 0 puts them on a circle), but after the shift the Perron
// root is strictly dominant, so the iteration always converges. Stops on the
// eigenvector residual ||(M+I)v - mu v|| <= tol * mu.
inline double power_iteration_root(double k1, double k2, std::size_t delay,
                                   std::size_t max_iters = 400000, double tol = 1e-11) {
    const std::size_t n = delay + 1;
    Vector v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    Vector w(n, 0.0);
    for (std::size_t it = 0; it < max_iters; ++it) {
        w[0] = k1 * v[0] + k2 * v[n - 1] + v[0];
        for (std::size_t i = 1; i < n; ++i) w[i] = v[i - 1] + v[i];
        double mu = 0.0;  // Rayleigh quotient of the shifted matrix
        for (std::size_t i = 0; i < n; ++i) mu += v[i] * w[i];
        double resid = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = w[i] - mu * v[i];
            resid += r * r;
        }
        if (std::sqrt(resid) <= tol * std::abs(mu)) return mu - 1.0;
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    }
    return -1.0;  // did not converge; let the caller's comparison fail loudly
}

// All roots of g^{delta+1} - K1 g^delta - K2 via Durand-Kerner on the
// companion polynomial; used to check modulus dominance of the Perron root.
inline std::vector<std::complex<double>> all_poly_roots(double k1, double k2, std::size_t delay,
                                                        std::size_t iters = 2000) {
    const std::size_t deg = delay + 1;
    // coefficients of monic p(z) = z^deg - k1 z^{deg-1} - k2
    std::vector<std::complex<double>> coeff(deg + 1, 0.0);
    coeff[deg] = 1.0;
    coeff[deg - 1] = -k1;
    coeff[0] = -k2;
    auto eval = [&](std::complex<double> z) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = deg + 1; i-- > 0;) acc = acc * z + coeff[i];
        return acc;
    };
    std::vector<std::complex<double>> roots(deg);
    std::complex<double> seed(0.4, 0.9);
    std::complex<double> p = 1.0;
    for (std::size_t i = 0; i < deg; ++i) {
        p *= seed;
        roots[i] = p;
    }
    for (std::size_t it = 0; it < iters; ++it) {
        double move = 0.0;
        for (std::size_t i = 0; i < deg; ++i) {
            std::complex<double> denom = 1.0;
            for (std::size_t j = 0; j < deg; ++j)
                if (j != i) denom *= roots[i] - roots[j];
            const std::complex<double> delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            move = std::max(move, std::abs(delta));
        }
        if (move < 1e-13) break;
    }
    return roots;
}

// Central finite difference of a scalar function along coordinate i.
template <typename F>
double central_difference(F&& f, const Vector& x, std::size_t i, double h = 1e-6) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    return (f(xp) - f(xm)) / (2.0 * h);
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    return (a - b).max_abs();
}

} // namespace testutil
