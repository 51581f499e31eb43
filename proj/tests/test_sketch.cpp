#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "ssgd/sketch.hpp"

using namespace ssgd;
using testutil::identity_system;
using testutil::random_consistent_system;
using testutil::random_vector;

TEST_CASE("linear system validation", "[sketch]") {
    REQUIRE_THROWS_AS(LinearSystem(DenseMatrix(2, 2), {0, 0}, SpdMatrix::identity(2)),
                      validation_error);  // A = 0
    REQUIRE_THROWS_AS(
        LinearSystem(DenseMatrix{{1, 0}, {1, 0}}, {1, 2}, SpdMatrix::identity(2)),
        infeasible_error);  // inconsistent
    REQUIRE_NOTHROW(LinearSystem(DenseMatrix{{1, 0}, {1, 0}}, {1, 1}, SpdMatrix::identity(2)));
}

TEST_CASE("sketch distribution validation and draws", "[sketch]") {
    REQUIRE_THROWS_AS(SketchDistribution::coordinate({0.5, 0.4}), validation_error);
    REQUIRE_THROWS_AS(SketchDistribution::coordinate({1.5, -0.5}), validation_error);
    REQUIRE_THROWS_AS(SketchDistribution::gaussian(3, 0), validation_error);
    REQUIRE_THROWS_AS(SketchDistribution::row_block(3, {{0, 1}}), validation_error);
    REQUIRE_THROWS_AS(SketchDistribution::row_block(3, {{0, 1}, {1, 2}}), validation_error);

    // degenerate point mass always draws e1
    const auto point = SketchDistribution::coordinate({1.0, 0.0});
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const DenseMatrix s = draw_sketch(point, rng);
        REQUIRE(s.rows() == 2);
        REQUIRE(s.cols() == 1);
        REQUIRE(s(0, 0) == 1.0);
        REQUIRE(s(1, 0) == 0.0);
    }

    // uniform over 4 rows: empirical frequencies within 3 sigma of 1/4
    const auto uniform = SketchDistribution::coordinate_uniform(4);
    Rng rng2(11);
    const int draws = 100000;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < draws; ++i) {
        const DenseMatrix s = draw_sketch(uniform, rng2);
        for (std::size_t r = 0; r < 4; ++r)
            if (s(r, 0) == 1.0) ++counts[r];
    }
    const double sigma = std::sqrt(draws * 0.25 * 0.75);
    for (int c : counts) REQUIRE(std::abs(c - draws * 0.25) <= 3.0 * sigma);

    // gaussian: shape and seed determinism
    const auto gauss = SketchDistribution::gaussian(5, 3);
    Rng g1(42), g2(42);
    const DenseMatrix s1 = draw_sketch(gauss, g1);
    const DenseMatrix s2 = draw_sketch(gauss, g2);
    REQUIRE(s1.rows() == 5);
    REQUIRE(s1.cols() == 3);
    REQUIRE((s1 - s2).max_abs() == 0.0);
}

TEST_CASE("stochastic matrix Z on hand inputs", "[sketch]") {
    const auto sys = identity_system(2);
    DenseMatrix e1(2, 1);
    e1(0, 0) = 1.0;
    const DenseMatrix z = stoch_matrix_z(sys, e1);
    REQUIRE(z(0, 0) == Catch::Approx(1.0));
    REQUIRE(std::abs(z(0, 1)) + std::abs(z(1, 0)) + std::abs(z(1, 1)) < 1e-12);

    // sketch annihilating A gives Z = 0
    const LinearSystem row_sys(DenseMatrix{{1, 1}}, {2}, SpdMatrix::identity(2));
    DenseMatrix zero_sketch(1, 1);  // S = 0 so S^T A = 0
    REQUIRE(stoch_matrix_z(row_sys, zero_sketch).max_abs() == 0.0);

    // A = [1 1], S = 1: gram = 2, Z = 0.5 * ones
    DenseMatrix one(1, 1);
    one(0, 0) = 1.0;
    const DenseMatrix z2 = stoch_matrix_z(row_sys, one);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) REQUIRE(z2(i, j) == Catch::Approx(0.5));
}

TEST_CASE("Z is PSD and B^{-1} Z idempotent on random draws", "[sketch]") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto sys = random_consistent_system(6, 4, 100 + seed);
        Rng rng(seed);
        const auto variants = {SketchDistribution::coordinate_uniform(6),
                               SketchDistribution::gaussian(6, 2)};
        for (const auto& dist : variants) {
            for (int draw = 0; draw < 10; ++draw) {
                const DenseMatrix s = draw_sketch(dist, rng);
                const DenseMatrix z = stoch_matrix_z(sys, s);
                REQUIRE((z - z.transpose()).max_abs() < 1e-9 * std::max(1.0, z.max_abs()));
                const auto eig = sym_eig(z.scaled(1.0 / std::max(1.0, z.max_abs())));
                REQUIRE(eig.values.back() >= -1e-10);

                // projector in the B geometry
                DenseMatrix proj(4, 4);
                for (std::size_t j = 0; j < 4; ++j) {
                    Vector col(4);
                    for (std::size_t i = 0; i < 4; ++i) col[i] = z(i, j);
                    const Vector sol = sys.geometry().solve(col);
                    for (std::size_t i = 0; i < 4; ++i) proj(i, j) = sol[i];
                }
                REQUIRE((proj * proj - proj).max_abs() < 1e-9 * std::max(1.0, proj.max_abs()));
            }
        }
    }
}

TEST_CASE("stochastic loss and gradient on hand inputs", "[sketch]") {
    const auto sys = identity_system(2);
    DenseMatrix e1(2, 1);
    e1(0, 0) = 1.0;
    REQUIRE(stoch_loss(sys, e1, {2, 3}) == Catch::Approx(2.0));
    const Vector g = stoch_grad(sys, e1, {2, 3});
    REQUIRE(g[0] == Catch::Approx(2.0));
    REQUIRE(g[1] == Catch::Approx(0.0).margin(1e-12));

    const LinearSystem row_sys(DenseMatrix{{1, 1}}, {2}, SpdMatrix::identity(2));
    DenseMatrix one(1, 1);
    one(0, 0) = 1.0;
    REQUIRE(stoch_loss(row_sys, one, {0, 0}) == Catch::Approx(1.0));

    // zero at any solution
    REQUIRE(stoch_loss(row_sys, one, {0.5, 1.5}) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(norm2(stoch_grad(row_sys, one, {0.5, 1.5})) < 1e-12);
}

TEST_CASE("stochastic gradient matches finite differences of the loss", "[sketch]") {
    const auto sys = random_consistent_system(5, 3, 77);
    Rng rng(5);
    const auto dist = SketchDistribution::coordinate_uniform(5);
    for (int trial = 0; trial < 20; ++trial) {
        const DenseMatrix s = draw_sketch(dist, rng);
        const Vector x = random_vector(3, rng);
        const Vector g = stoch_grad(sys, s, x);
        // grad under the B-inner product: finite differences give the Euclidean
        // gradient, i.e. B * g
        const Vector bg = sys.geometry().matrix() * g;
        for (std::size_t i = 0; i < 3; ++i) {
            const double fd = testutil::central_difference(
                [&](const Vector& v) { return stoch_loss(sys, s, v); }, x, i);
            REQUIRE(fd == Catch::Approx(bg[i]).margin(1e-6));
        }
    }
}

TEST_CASE("expected Z: exact discrete sums", "[sketch]") {
    const auto sys = identity_system(2);
    const auto ez = expected_z(sys, SketchDistribution::coordinate_uniform(2));
    REQUIRE(ez.standard_error == 0.0);
    REQUIRE(ez.matrix(0, 0) == Catch::Approx(0.5));
    REQUIRE(ez.matrix(1, 1) == Catch::Approx(0.5));
    REQUIRE(std::abs(ez.matrix(0, 1)) < 1e-14);

    // point mass equals the single atom's Z
    const auto point = SketchDistribution::coordinate({1.0, 0.0});
    const auto ezp = expected_z(sys, point);
    DenseMatrix e1(2, 1);
    e1(0, 0) = 1.0;
    REQUIRE((ezp.matrix - stoch_matrix_z(sys, e1)).max_abs() < 1e-14);

    // Kaczmarz: B = I, unit rows, uniform: E[Z] = (1/m) sum a_i a_i^T / ||a_i||^2
    Rng rng(19);
    DenseMatrix a(4, 3);
    for (std::size_t i = 0; i < 4; ++i) {
        Vector row = random_vector(3, rng);
        const double n = norm2(row);
        for (std::size_t j = 0; j < 3; ++j) a(i, j) = row[j] / n;
    }
    Vector b = a * Vector{1.0, -2.0, 0.5};
    const LinearSystem kacz(a, b, SpdMatrix::identity(3));
    const auto ezk = expected_z(kacz, SketchDistribution::coordinate_uniform(4));
    DenseMatrix manual(3, 3);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c) manual(r, c) += 0.25 * a(i, r) * a(i, c);
    REQUIRE((ezk.matrix - manual).max_abs() < 1e-10);
}

TEST_CASE("expected Z: gaussian Monte Carlo agrees with a long fresh average", "[sketch]") {
    const auto sys = random_consistent_system(4, 3, 55);
    const auto dist = SketchDistribution::gaussian(4, 2);
    REQUIRE_THROWS_AS(expected_z(sys, dist, 10), validation_error);
    const auto ez = expected_z(sys, dist, 4000, 9);
    REQUIRE(ez.standard_error > 0.0);

    Rng rng(123456);
    DenseMatrix fresh(3, 3);
    const int n = 4000;
    for (int i = 0; i < n; ++i)
        fresh.add_scaled(stoch_matrix_z(sys, dist.draw(rng)), 1.0 / n);
    REQUIRE((ez.matrix - fresh).max_abs() < 8.0 * ez.standard_error);
}

TEST_CASE("spectral profile on the identity system", "[sketch]") {
    const auto sys = identity_system(2);
    const auto p = spectral_profile(sys, SketchDistribution::coordinate_uniform(2));
    REQUIRE(p.lambda_max == Catch::Approx(0.5));
    REQUIRE(p.lambda_min_plus == Catch::Approx(0.5));
    REQUIRE(p.k == Catch::Approx(1.0));
    REQUIRE(p.omega_star == Catch::Approx(2.0));
    REQUIRE(p.kappa == Catch::Approx(1.0));
    REQUIRE(p.case_tag == CaseTag::Boundary);
}

TEST_CASE("spectral profile: full-rank point mass gives unit eigenvalues", "[sketch]") {
    const auto sys = random_consistent_system(3, 3, 31, false);
    // single block containing every row: S = I, S^T A invertible almost surely
    const auto dist = SketchDistribution::row_block(3, {{0, 1, 2}});
    const auto p = spectral_profile(sys, dist);
    REQUIRE(p.lambda_max == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(p.lambda_min_plus == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(p.kappa == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("spectral profile: eigenvalues stay in [0,1] on a large random system", "[sketch]") {
    const auto sys = random_consistent_system(50, 20, 2024, false);
    const auto p = spectral_profile(sys, SketchDistribution::coordinate_uniform(50));
    REQUIRE(p.lambda_min_plus > 0.0);
    for (double l : p.eigenvalues) {
        REQUIRE(l >= 0.0);
        REQUIRE(l <= 1.0);
    }
}

TEST_CASE("profile_from_extremes and case classification", "[sketch]") {
    REQUIRE(profile_from_extremes(0.1, 0.9).case_tag == CaseTag::Boundary);
    REQUIRE(profile_from_extremes(0.2, 0.9).case_tag == CaseTag::Case1);
    REQUIRE(profile_from_extremes(0.01, 0.4).case_tag == CaseTag::Case2);
    REQUIRE(profile_from_extremes(0.1, 0.9).omega_star == Catch::Approx(2.0));
    REQUIRE_THROWS_AS(profile_from_extremes(0.0, 0.5), validation_error);
    REQUIRE_THROWS_AS(profile_from_eigenvalues({0.0, 0.0}), infeasible_error);
    REQUIRE_THROWS_AS(profile_from_eigenvalues({1.5}), infeasible_error);
}

// Lemma suite ---------------------------------------------------------------

TEST_CASE("norm identity for a single sketch step", "[sketch][lemmas]") {
    // ||x - x_star - w grad f_S(x)||_B^2 = ||x - x_star||_B^2 - 2 w (2-w) f_S(x)
    const auto sys = random_consistent_system(6, 4, 321);
    const Vector x_star_any = project_onto_solutions(Vector(4, 0.0), sys);
    Rng rng(8);
    const auto dist = SketchDistribution::coordinate_uniform(6);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector x = random_vector(4, rng);
        const DenseMatrix s = draw_sketch(dist, rng);
        const double fx = stoch_loss(sys, s, x);
        const double base = b_norm_sq(x - x_star_any, sys.geometry());
        for (double w : {0.5, 1.0, 1.7, 2.5}) {
            const Vector g = stoch_grad(sys, s, x);
            Vector moved = x;
            for (std::size_t i = 0; i < 4; ++i) moved[i] -= w * g[i];
            const double lhs = b_norm_sq(moved - x_star_any, sys.geometry());
            const double rhs = base - 2.0 * w * (2.0 - w) * fx;
            REQUIRE(lhs == Catch::Approx(rhs).margin(1e-9 * std::max(1.0, base)));
        }
    }
}

TEST_CASE("expected loss is sandwiched by the spectral extremes", "[sketch][lemmas]") {
    // (lmin/2)||x-x_star||_B^2 <= f(x) <= (lmax/2)||x-x_star||_B^2
    const auto sys = random_consistent_system(6, 4, 4242);
    const auto dist = SketchDistribution::coordinate_uniform(6);
    const auto ez = expected_z(sys, dist);
    const auto p = spectral_profile(sys, dist);
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector x = random_vector(4, rng);
        const Vector x_star = project_onto_solutions(x, sys);
        const Vector d = x - x_star;
        const double f = 0.5 * dot(d, ez.matrix * d);
        const double e = b_norm_sq(d, sys.geometry());
        REQUIRE(f >= 0.5 * p.lambda_min_plus * e - 1e-9 * std::max(1.0, e));
        REQUIRE(f <= 0.5 * p.lambda_max * e + 1e-9 * std::max(1.0, e));
    }
}

TEST_CASE("null eigenvectors of W are orthogonal to the projected residual", "[sketch][lemmas]") {
    // rank-deficient system so W has null directions
    const auto sys = random_consistent_system(5, 5, 99, true, 3);
    const auto dist = SketchDistribution::coordinate_uniform(5);
    const auto ez = expected_z(sys, dist);
    const DenseMatrix half_inv = sys.geometry().inv_sqrt();
    const DenseMatrix w = half_inv * ez.matrix * half_inv;
    const auto eig = sym_eig(w);
    const DenseMatrix half = sys.geometry().sqrt();

    bool any_null = false;
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector x = random_vector(5, rng);
        const Vector x_star = project_onto_solutions(x, sys);
        const Vector r = half * (x - x_star);
        for (std::size_t i = 0; i < 5; ++i) {
            if (eig.values[i] > 1e-9 * eig.values.front()) continue;
            any_null = true;
            double ip = 0.0;
            for (std::size_t j = 0; j < 5; ++j) ip += eig.vectors(j, i) * r[j];
            REQUIRE(std::abs(ip) < 1e-8 * std::max(1.0, norm2(r)));
        }
    }
    REQUIRE(any_null);
}

TEST_CASE("exactness: minimizers of the reformulation solve the system", "[sketch][lemmas]") {
    // Null(E[Z]) must lie inside Null(A) for every covering variant.
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto sys = random_consistent_system(6, 4, 500 + seed, true, 3);
        const std::vector<SketchDistribution> variants = {
            SketchDistribution::coordinate_uniform(6),
            SketchDistribution::coordinate_row_norm(sys),
            SketchDistribution::row_block(6, {{0, 1}, {2, 3}, {4, 5}}),
        };
        for (const auto& dist : variants) {
            const auto ez = expected_z(sys, dist);
            const auto eig = sym_eig(ez.matrix);
            const double top = std::max(eig.values.front(), 1e-30);
            for (std::size_t i = 0; i < 4; ++i) {
                if (eig.values[i] > 1e-9 * top) continue;
                Vector v(4);
                for (std::size_t j = 0; j < 4; ++j) v[j] = eig.vectors(j, i);
                REQUIRE(norm2(sys.a() * v) < 1e-8 * std::max(1.0, sys.a().max_abs()));
            }
        }
    }
}
