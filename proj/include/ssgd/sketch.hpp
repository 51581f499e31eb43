#pragma once

// Stochastic reformulation of a consistent linear system A x = b under an
// SPD geometry matrix B: the sketch distribution D, the per-sketch objects
// f_S / grad f_S / Z_S, the exact or Monte-Carlo expectation E[Z], and the
// spectral profile of B^{-1/2} E[Z] B^{-1/2} that drives all rate formulas.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ssgd/dense.hpp"
#include "ssgd/rng.hpp"

namespace ssgd {

class LinearSystem {
public:
    LinearSystem(DenseMatrix a, Vector b, SpdMatrix geometry, double consistency_tol = 1e-8)
        : a_(std::move(a)), b_(std::move(b)), geometry_(std::move(geometry)) {
        if (a_.rows() == 0 || a_.cols() == 0)
            throw validation_error("LinearSystem: A is empty");
        if (a_.rows() != b_.size())
            throw validation_error("LinearSystem: A and b row counts disagree");
        if (geometry_.size() != a_.cols())
            throw validation_error("LinearSystem: B dimension disagrees with A columns");
        if (!a_.is_finite() || !is_finite(b_))
            throw validation_error("LinearSystem: non-finite entries");
        if (a_.max_abs() == 0.0)
            throw validation_error("LinearSystem: A must be nonzero");
        const Vector least_squares = pseudoinverse(a_) * b_;
        consistency_residual_ = norm2(a_ * least_squares - b_);
        if (consistency_residual_ > consistency_tol)
            throw infeasible_error("LinearSystem: inconsistent system, least-squares residual " +
                                   std::to_string(consistency_residual_));
    }

    const DenseMatrix& a() const { return a_; }
    const Vector& rhs() const { return b_; }
    const SpdMatrix& geometry() const { return geometry_; }
    std::size_t rows() const { return a_.rows(); }
    std::size_t cols() const { return a_.cols(); }
    double consistency_residual() const { return consistency_residual_; }

    Vector residual(const Vector& x) const { return a_ * x - b_; }

private:
    DenseMatrix a_;
    Vector b_;
    SpdMatrix geometry_;
    double consistency_residual_ = 0.0;
};

inline Vector project_onto_solutions(const Vector& x0, const LinearSystem& sys,
                                     double tol = 1e-8) {
    return project_onto_solutions(x0, sys.a(), sys.rhs(), sys.geometry(), tol);
}

// ---------------------------------------------------------------------------
// sketch distributions

class SketchDistribution {
public:
    enum class Variant { Coordinate, RowBlock, Gaussian };

    static SketchDistribution coordinate(Vector weights) {
        SketchDistribution d;
        d.variant_ = Variant::Coordinate;
        d.num_rows_ = weights.size();
        d.weights_ = std::move(weights);
        d.validate_weights();
        return d;
    }

    static SketchDistribution coordinate_uniform(std::size_t m) {
        if (m == 0) throw validation_error("SketchDistribution: m must be positive");
        return coordinate(Vector(m, 1.0 / static_cast<double>(m)));
    }

    // The natural Kaczmarz weighting: p_i proportional to ||a_i||^2.
    static SketchDistribution coordinate_row_norm(const LinearSystem& sys) {
        Vector w(sys.rows(), 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < sys.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < sys.cols(); ++j) s += sys.a()(i, j) * sys.a()(i, j);
            w[i] = s;
            total += s;
        }
        for (double& x : w) x /= total;
        return coordinate(std::move(w));
    }

    // blocks must partition {0, ..., m-1}; empty weights means uniform.
    static SketchDistribution row_block(std::size_t m, std::vector<std::vector<std::size_t>> blocks,
                                        Vector weights = {}) {
        if (blocks.empty()) throw validation_error("SketchDistribution: no blocks given");
        if (weights.empty())
            weights.assign(blocks.size(), 1.0 / static_cast<double>(blocks.size()));
        if (weights.size() != blocks.size())
            throw validation_error("SketchDistribution: one weight per block required");
        std::vector<bool> seen(m, false);
        for (const auto& blk : blocks) {
            if (blk.empty()) throw validation_error("SketchDistribution: empty block");
            for (std::size_t idx : blk) {
                if (idx >= m) throw validation_error("SketchDistribution: block index out of range");
                if (seen[idx]) throw validation_error("SketchDistribution: blocks overlap");
                seen[idx] = true;
            }
        }
        for (std::size_t i = 0; i < m; ++i)
            if (!seen[i]) throw validation_error("SketchDistribution: blocks do not cover every row");
        SketchDistribution d;
        d.variant_ = Variant::RowBlock;
        d.num_rows_ = m;
        d.blocks_ = std::move(blocks);
        d.weights_ = std::move(weights);
        d.validate_weights();
        return d;
    }

    static SketchDistribution gaussian(std::size_t m, std::size_t width) {
        if (m == 0) throw validation_error("SketchDistribution: m must be positive");
        if (width < 1) throw validation_error("SketchDistribution: gaussian width must be >= 1");
        SketchDistribution d;
        d.variant_ = Variant::Gaussian;
        d.num_rows_ = m;
        d.gaussian_width_ = width;
        return d;
    }

    Variant variant() const { return variant_; }
    std::size_t num_rows() const { return num_rows_; }
    const Vector& weights() const { return weights_; }
    const std::vector<std::vector<std::size_t>>& blocks() const { return blocks_; }
    std::size_t gaussian_width() const { return gaussian_width_; }
    bool is_discrete() const { return variant_ != Variant::Gaussian; }

    // number of distinct sketches for discrete variants
    std::size_t support_size() const {
        switch (variant_) {
            case Variant::Coordinate: return num_rows_;
            case Variant::RowBlock: return blocks_.size();
            default: return 0;
        }
    }

    DenseMatrix atom(std::size_t index) const {
        switch (variant_) {
            case Variant::Coordinate: {
                DenseMatrix s(num_rows_, 1);
                s(index, 0) = 1.0;
                return s;
            }
            case Variant::RowBlock: {
                const auto& blk = blocks_[index];
                DenseMatrix s(num_rows_, blk.size());
                for (std::size_t j = 0; j < blk.size(); ++j) s(blk[j], j) = 1.0;
                return s;
            }
            default:
                throw validation_error("SketchDistribution: gaussian variant has no atoms");
        }
    }

    double atom_weight(std::size_t index) const { return weights_[index]; }

    DenseMatrix draw(Rng& rng) const {
        switch (variant_) {
            case Variant::Coordinate:
            case Variant::RowBlock:
                return atom(rng.categorical(weights_));
            case Variant::Gaussian: {
                DenseMatrix s(num_rows_, gaussian_width_);
                for (std::size_t i = 0; i < num_rows_; ++i)
                    for (std::size_t j = 0; j < gaussian_width_; ++j) s(i, j) = rng.normal();
                return s;
            }
        }
        throw validation_error("SketchDistribution: unknown variant");
    }

private:
    void validate_weights() const {
        double total = 0.0;
        for (double w : weights_) {
            if (!(w >= 0.0)) throw validation_error("SketchDistribution: negative weight");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw validation_error("SketchDistribution: weights must sum to 1");
    }

    Variant variant_ = Variant::Coordinate;
    std::size_t num_rows_ = 0;
    Vector weights_;
    std::vector<std::vector<std::size_t>> blocks_;
    std::size_t gaussian_width_ = 0;
};

inline DenseMatrix draw_sketch(const SketchDistribution& dist, Rng& rng) {
    return dist.draw(rng);
}

// ---------------------------------------------------------------------------
// stochastic objects

// Z_S = A^T S (S^T A B^{-1} A^T S)^dagger S^T A
inline DenseMatrix stoch_matrix_z(const LinearSystem& sys, const DenseMatrix& s,
                                  double tol = 1e-10) {
    if (s.rows() != sys.rows())
        throw validation_error("stoch_matrix_z: sketch must have one row per system row");
    const DenseMatrix at_s = sys.a().transpose() * s;          // n x q
    DenseMatrix binv_at_s(at_s.rows(), at_s.cols());           // B^{-1} A^T S
    for (std::size_t j = 0; j < at_s.cols(); ++j) {
        Vector col(at_s.rows());
        for (std::size_t i = 0; i < at_s.rows(); ++i) col[i] = at_s(i, j);
        const Vector sol = sys.geometry().solve(col);
        for (std::size_t i = 0; i < at_s.rows(); ++i) binv_at_s(i, j) = sol[i];
    }
    const DenseMatrix gram = at_s.transpose() * binv_at_s;     // S^T A B^{-1} A^T S
    const DenseMatrix gram_pinv = pseudoinverse(gram, tol);
    return at_s * gram_pinv * at_s.transpose();
}

// f_S(x) = 1/2 ||A x - b||_H^2 with H = S (S^T A B^{-1} A^T S)^dagger S^T
inline double stoch_loss(const LinearSystem& sys, const DenseMatrix& s, const Vector& x) {
    const Vector r = sys.residual(x);
    const Vector sr = s.transpose_times(r);                    // S^T r
    const DenseMatrix at_s = sys.a().transpose() * s;
    DenseMatrix binv_at_s(at_s.rows(), at_s.cols());
    for (std::size_t j = 0; j < at_s.cols(); ++j) {
        Vector col(at_s.rows());
        for (std::size_t i = 0; i < at_s.rows(); ++i) col[i] = at_s(i, j);
        const Vector sol = sys.geometry().solve(col);
        for (std::size_t i = 0; i < at_s.rows(); ++i) binv_at_s(i, j) = sol[i];
    }
    const DenseMatrix gram = at_s.transpose() * binv_at_s;
    const Vector g = pseudoinverse(gram) * sr;
    return 0.5 * dot(sr, g);
}

// grad f_S(x) = B^{-1} A^T S (S^T A B^{-1} A^T S)^dagger S^T (A x - b)
inline Vector stoch_grad(const LinearSystem& sys, const DenseMatrix& s, const Vector& x) {
    const Vector r = sys.residual(x);
    const Vector sr = s.transpose_times(r);
    const DenseMatrix at_s = sys.a().transpose() * s;
    DenseMatrix binv_at_s(at_s.rows(), at_s.cols());
    for (std::size_t j = 0; j < at_s.cols(); ++j) {
        Vector col(at_s.rows());
        for (std::size_t i = 0; i < at_s.rows(); ++i) col[i] = at_s(i, j);
        const Vector sol = sys.geometry().solve(col);
        for (std::size_t i = 0; i < at_s.rows(); ++i) binv_at_s(i, j) = sol[i];
    }
    const DenseMatrix gram = at_s.transpose() * binv_at_s;
    const Vector g = pseudoinverse(gram) * sr;
    return binv_at_s * g;
}

struct ExpectedZ {
    DenseMatrix matrix;
    double standard_error = 0.0;  // max entrywise standard error (0 for exact sums)
};

// Exact weighted sum for discrete variants; Monte Carlo (mc_samples >= 1000)
// for the gaussian variant.
inline ExpectedZ expected_z(const LinearSystem& sys, const SketchDistribution& dist,
                            std::size_t mc_samples = 0, std::uint64_t seed = 0) {
    const std::size_t n = sys.cols();
    if (dist.num_rows() != sys.rows())
        throw validation_error("expected_z: distribution row count disagrees with system");

    if (dist.is_discrete()) {
        DenseMatrix acc(n, n);
        for (std::size_t k = 0; k < dist.support_size(); ++k) {
            const double w = dist.atom_weight(k);
            if (w == 0.0) continue;
            acc.add_scaled(stoch_matrix_z(sys, dist.atom(k)), w);
        }
        return ExpectedZ{std::move(acc), 0.0};
    }

    if (mc_samples < 1000)
        throw validation_error("expected_z: gaussian variant needs mc_samples >= 1000");
    Rng rng = Rng::derive(seed, 0);
    DenseMatrix mean(n, n);
    DenseMatrix m2(n, n);
    for (std::size_t k = 0; k < mc_samples; ++k) {
        const DenseMatrix z = stoch_matrix_z(sys, dist.draw(rng));
        const double inv = 1.0 / static_cast<double>(k + 1);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double delta = z(i, j) - mean(i, j);
                mean(i, j) += delta * inv;
                m2(i, j) += delta * (z(i, j) - mean(i, j));
            }
    }
    double max_se = 0.0;
    const double denom = static_cast<double>(mc_samples) * static_cast<double>(mc_samples - 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            max_se = std::max(max_se, std::sqrt(m2(i, j) / denom));
    return ExpectedZ{std::move(mean), max_se};
}

// ---------------------------------------------------------------------------
// spectral profile

enum class CaseTag { Case1, Case2, Boundary };

inline const char* to_string(CaseTag tag) {
    switch (tag) {
        case CaseTag::Case1: return "Case1";
        case CaseTag::Case2: return "Case2";
        default: return "Boundary";
    }
}

// Eigen-data of W = B^{-1/2} E[Z] B^{-1/2}; the single source of truth for
// every rate formula downstream.
struct SpectralProfile {
    Vector eigenvalues;       // non-increasing, inside [0, 1]
    double lambda_max = 0.0;
    double lambda_min_plus = 0.0;
    double k = 0.0;           // lambda_min_plus + lambda_max
    double omega_star = 0.0;  // 2 / k
    double kappa = 0.0;       // lambda_max / lambda_min_plus
    CaseTag case_tag = CaseTag::Case1;
    double expectation_standard_error = 0.0;  // nonzero when E[Z] was Monte Carlo
};

inline CaseTag classify_case(double k) {
    if (std::abs(k - 1.0) < 1e-12) return CaseTag::Boundary;
    return k > 1.0 ? CaseTag::Case1 : CaseTag::Case2;
}

// Build a profile from an eigenvalue list; values within 1e-9 of [0,1] are
// clipped, values beyond that are rejected.
inline SpectralProfile profile_from_eigenvalues(Vector eigenvalues, double tol = 1e-9) {
    if (eigenvalues.empty())
        throw validation_error("profile_from_eigenvalues: empty spectrum");
    std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<double>());
    for (double& l : eigenvalues) {
        if (l < -1e-9 || l > 1.0 + 1e-9)
            throw infeasible_error(
                "spectral profile: eigenvalue outside [0,1]; distribution and geometry "
                "are inconsistent");
        l = std::min(std::max(l, 0.0), 1.0);
    }
    SpectralProfile p;
    p.eigenvalues = std::move(eigenvalues);
    p.lambda_max = p.eigenvalues.front();
    const double cut = tol * p.lambda_max;
    double lmin = 0.0;
    for (auto it = p.eigenvalues.rbegin(); it != p.eigenvalues.rend(); ++it) {
        if (*it > cut) {
            lmin = *it;
            break;
        }
    }
    if (lmin == 0.0)
        throw infeasible_error("spectral profile: all eigenvalues are zero (degenerate distribution)");
    p.lambda_min_plus = lmin;
    p.k = p.lambda_min_plus + p.lambda_max;
    p.omega_star = 2.0 / p.k;
    p.kappa = p.lambda_max / p.lambda_min_plus;
    p.case_tag = classify_case(p.k);
    return p;
}

// Direct entry from the two spectral extremes, for table reproduction.
inline SpectralProfile profile_from_extremes(double lambda_min_plus, double lambda_max) {
    if (!(lambda_min_plus > 0.0) || lambda_min_plus > lambda_max || lambda_max > 1.0 + 1e-12)
        throw validation_error("profile_from_extremes: need 0 < lambda_min_plus <= lambda_max <= 1");
    return profile_from_eigenvalues(Vector{lambda_max, lambda_min_plus});
}

inline SpectralProfile spectral_profile(const LinearSystem& sys, const SketchDistribution& dist,
                                        double tol = 1e-9, std::size_t mc_samples = 0,
                                        std::uint64_t seed = 0) {
    const ExpectedZ ez = expected_z(sys, dist, mc_samples, seed);
    const DenseMatrix half = sys.geometry().inv_sqrt();
    const DenseMatrix w = half * ez.matrix * half;
    EigenDecomposition eig = sym_eig(w);
    SpectralProfile p = profile_from_eigenvalues(std::move(eig.values), tol);
    p.expectation_standard_error = ez.standard_error;
    return p;
}

} // namespace ssgd
