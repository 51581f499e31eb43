#pragma once

// Small dense real matrix/vector kernel: symmetric eigendecomposition
// (cyclic Jacobi), one-sided Jacobi SVD, Moore-Penrose pseudoinverse,
// SPD factorizations, B-norms and B-projections. Sized for desk-scale
// problems (a few hundred rows); everything is dense and O(n^3).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssgd/errors.hpp"

namespace ssgd {

using Vector = std::vector<double>;

class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    DenseMatrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ == 0 ? 0 : init.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_)
                throw validation_error("DenseMatrix: ragged initializer list");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static DenseMatrix column(const Vector& v) {
        DenseMatrix m(v.size(), 1);
        std::copy(v.begin(), v.end(), m.data_.begin());
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }

    bool is_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](double x) { return std::isfinite(x); });
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : data_) m = std::max(m, std::abs(x));
        return m;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double x : data_) s += x * x;
        return std::sqrt(s);
    }

    DenseMatrix transpose() const {
        DenseMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    DenseMatrix operator*(const DenseMatrix& rhs) const {
        if (cols_ != rhs.rows_)
            throw validation_error("matrix product: inner dimensions disagree");
        DenseMatrix out(rows_, rhs.cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = 0; k < cols_; ++k) {
                const double a = (*this)(i, k);
                if (a == 0.0) continue;
                for (std::size_t j = 0; j < rhs.cols_; ++j)
                    out(i, j) += a * rhs(k, j);
            }
        return out;
    }

    Vector operator*(const Vector& v) const {
        if (cols_ != v.size())
            throw validation_error("matrix-vector product: dimensions disagree");
        Vector out(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * v[j];
            out[i] = s;
        }
        return out;
    }

    DenseMatrix operator+(const DenseMatrix& rhs) const {
        check_same_shape(rhs, "sum");
        DenseMatrix out = *this;
        for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] += rhs.data_[i];
        return out;
    }

    DenseMatrix operator-(const DenseMatrix& rhs) const {
        check_same_shape(rhs, "difference");
        DenseMatrix out = *this;
        for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] -= rhs.data_[i];
        return out;
    }

    DenseMatrix scaled(double a) const {
        DenseMatrix out = *this;
        for (double& x : out.data_) x *= a;
        return out;
    }

    void add_scaled(const DenseMatrix& rhs, double a) {
        check_same_shape(rhs, "add_scaled");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * rhs.data_[i];
    }

    // y = A^T x
    Vector transpose_times(const Vector& v) const {
        if (rows_ != v.size())
            throw validation_error("transposed matrix-vector product: dimensions disagree");
        Vector out(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            const double a = v[i];
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < cols_; ++j) out[j] += (*this)(i, j) * a;
        }
        return out;
    }

private:
    void check_same_shape(const DenseMatrix& rhs, const char* op) const {
        if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
            throw validation_error(std::string("matrix ") + op + ": shapes disagree");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// vector helpers

inline Vector operator-(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw validation_error("vector difference: sizes disagree");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline Vector operator+(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw validation_error("vector sum: sizes disagree");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline Vector scaled(const Vector& a, double s) {
    Vector out(a);
    for (double& x : out) x *= s;
    return out;
}

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw validation_error("dot product: sizes disagree");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline bool is_finite(const Vector& a) {
    return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

// ---------------------------------------------------------------------------
// symmetric eigendecomposition

struct EigenDecomposition {
    Vector values;        // non-increasing
    DenseMatrix vectors;  // orthonormal columns, vectors.col(i) <-> values[i]
};

inline bool is_symmetric(const DenseMatrix& m, double rel_tol = 1e-12) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.max_abs());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) return false;
    return true;
}

// Cyclic Jacobi rotations on a symmetrized copy of m.
inline EigenDecomposition sym_eig(const DenseMatrix& m, double sym_tol = 1e-12) {
    if (m.rows() != m.cols())
        throw validation_error("sym_eig: matrix is not square");
    if (!m.is_finite())
        throw validation_error("sym_eig: matrix has non-finite entries");
    if (!is_symmetric(m, sym_tol))
        throw validation_error("sym_eig: matrix is not symmetric within tolerance");

    const std::size_t n = m.rows();
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
    DenseMatrix v = DenseMatrix::identity(n);

    const double stop = 1e-15 * std::max(1.0, a.frobenius_norm());
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(2.0 * off) <= stop) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double zeta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// SVD (one-sided Jacobi / Hestenes) and pseudoinverse

struct Svd {
    DenseMatrix u;  // rows(m) x k, columns for sigma > 0 orthonormal, zero otherwise
    Vector sigma;   // non-increasing, k = min(rows, cols)
    DenseMatrix v;  // cols(m) x k, orthonormal columns
};

inline Svd svd(const DenseMatrix& m) {
    if (m.rows() < m.cols()) {
        Svd t = svd(m.transpose());
        return Svd{std::move(t.v), std::move(t.sigma), std::move(t.u)};
    }
    const std::size_t rows = m.rows(), cols = m.cols();
    DenseMatrix a = m;
    DenseMatrix v = DenseMatrix::identity(cols);

    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < cols; ++p) {
            for (std::size_t q = p + 1; q < cols; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < rows; ++i) {
                    app += a(i, p) * a(i, p);
                    aqq += a(i, q) * a(i, q);
                    apq += a(i, p) * a(i, q);
                }
                if (app == 0.0 || aqq == 0.0) continue;
                if (std::abs(apq) <= 1e-15 * std::sqrt(app * aqq)) continue;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < cols; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
                rotated = true;
            }
        }
        if (!rotated) break;
    }

    Vector sigma(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += a(i, j) * a(i, j);
        sigma[j] = std::sqrt(s);
    }

    std::vector<std::size_t> order(cols);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    Svd out;
    out.sigma.resize(cols);
    out.u = DenseMatrix(rows, cols);
    out.v = DenseMatrix(cols, cols);
    for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t src = order[j];
        out.sigma[j] = sigma[src];
        if (sigma[src] > 0.0)
            for (std::size_t i = 0; i < rows; ++i) out.u(i, j) = a(i, src) / sigma[src];
        for (std::size_t i = 0; i < cols; ++i) out.v(i, j) = v(i, src);
    }
    return out;
}

// Singular values below tol * sigma_max are treated as zero.
inline DenseMatrix pseudoinverse(const DenseMatrix& m, double tol = 1e-10) {
    if (tol <= 0.0 || tol >= 1.0)
        throw validation_error("pseudoinverse: tol must lie in (0, 1)");
    if (m.rows() == 0 || m.cols() == 0) return m.transpose();
    const Svd f = svd(m);
    const double cutoff = tol * (f.sigma.empty() ? 0.0 : f.sigma.front());
    DenseMatrix out(m.cols(), m.rows());
    for (std::size_t j = 0; j < f.sigma.size(); ++j) {
        if (f.sigma[j] <= cutoff || f.sigma[j] == 0.0) continue;
        const double inv = 1.0 / f.sigma[j];
        for (std::size_t r = 0; r < m.cols(); ++r) {
            const double vr = f.v(r, j) * inv;
            if (vr == 0.0) continue;
            for (std::size_t c = 0; c < m.rows(); ++c) out(r, c) += vr * f.u(c, j);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// SPD matrices

// Symmetric positive definite matrix with its eigendecomposition computed
// eagerly at construction, so all queries are const and thread-safe.
class SpdMatrix {
public:
    explicit SpdMatrix(DenseMatrix base, double sym_tol = 1e-12)
        : base_(std::move(base)) {
        if (base_.rows() != base_.cols())
            throw validation_error("SpdMatrix: matrix is not square");
        if (!base_.is_finite())
            throw validation_error("SpdMatrix: matrix has non-finite entries");
        if (!is_symmetric(base_, sym_tol))
            throw validation_error("SpdMatrix: matrix is not symmetric within tolerance");
        eig_ = sym_eig(base_, sym_tol);
        if (eig_.values.back() <= 0.0)
            throw validation_error("SpdMatrix: matrix is not positive definite");
    }

    static SpdMatrix identity(std::size_t n) { return SpdMatrix(DenseMatrix::identity(n)); }

    std::size_t size() const { return base_.rows(); }
    const DenseMatrix& matrix() const { return base_; }
    const EigenDecomposition& eigen() const { return eig_; }
    double min_eigenvalue() const { return eig_.values.back(); }

    // U f(lambda) U^T x
    Vector apply_spectral(const Vector& x, double (*f)(double)) const {
        const std::size_t n = size();
        if (x.size() != n) throw validation_error("SpdMatrix: vector dimension disagrees");
        Vector proj(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += eig_.vectors(i, j) * x[i];
            proj[j] = f(eig_.values[j]) * s;
        }
        Vector out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += eig_.vectors(i, j) * proj[j];
            out[i] = s;
        }
        return out;
    }

    Vector solve(const Vector& x) const {
        return apply_spectral(x, [](double l) { return 1.0 / l; });
    }

    DenseMatrix spectral_map(double (*f)(double)) const {
        const std::size_t n = size();
        DenseMatrix out(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    s += eig_.vectors(i, k) * f(eig_.values[k]) * eig_.vectors(j, k);
                out(i, j) = s;
            }
        return out;
    }

    DenseMatrix inverse() const {
        return spectral_map([](double l) { return 1.0 / l; });
    }
    DenseMatrix sqrt() const {
        return spectral_map([](double l) { return std::sqrt(l); });
    }
    DenseMatrix inv_sqrt() const {
        return spectral_map([](double l) { return 1.0 / std::sqrt(l); });
    }

private:
    DenseMatrix base_;
    EigenDecomposition eig_;
};

inline DenseMatrix spd_inv_sqrt(const SpdMatrix& b) { return b.inv_sqrt(); }

inline double b_norm_sq(const Vector& x, const SpdMatrix& b) {
    if (x.size() != b.size())
        throw validation_error("b_norm_sq: vector dimension disagrees with B");
    return dot(x, b.matrix() * x);
}

// x_star = x0 - B^{-1} A^T (A B^{-1} A^T)^dagger (A x0 - b); throws when the
// system has no solution within tol.
inline Vector project_onto_solutions(const Vector& x0, const DenseMatrix& a, const Vector& b,
                                     const SpdMatrix& bmat, double tol = 1e-8) {
    if (a.cols() != x0.size() || a.rows() != b.size() || bmat.size() != a.cols())
        throw validation_error("project_onto_solutions: dimensions disagree");

    const DenseMatrix a_pinv = pseudoinverse(a);
    const Vector least_squares = a_pinv * b;
    if (norm2(a * least_squares - b) > tol)
        throw infeasible_error("project_onto_solutions: system is inconsistent");

    const DenseMatrix binv_at = [&] {
        DenseMatrix at = a.transpose();
        DenseMatrix out(at.rows(), at.cols());
        for (std::size_t j = 0; j < at.cols(); ++j) {
            Vector col(at.rows());
            for (std::size_t i = 0; i < at.rows(); ++i) col[i] = at(i, j);
            Vector sol = bmat.solve(col);
            for (std::size_t i = 0; i < at.rows(); ++i) out(i, j) = sol[i];
        }
        return out;
    }();

    const DenseMatrix gram = a * binv_at;             // A B^{-1} A^T
    const DenseMatrix gram_pinv = pseudoinverse(gram);
    const Vector residual = a * x0 - b;
    const Vector correction = binv_at * (gram_pinv * residual);
    return x0 - correction;
}

} // namespace ssgd
