#include <catch2/catch_amalgamated.hpp>

#include "ncvx/numlin.hpp"
#include "ncvx/rng.hpp"

#include "oracles.hpp"

using namespace ncvx;

namespace {

Mat random_symmetric(int n, RngSeed seed) {
    Rng rng(seed);
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = rng.gaussian();
    return Mat(0.5 * (A + A.transpose()));
}

}  // namespace

// ---------------------------------------------------------------------------
// top_eigs_sym
// ---------------------------------------------------------------------------

TEST_CASE("top_eigs_sym on diag(3,2,1)") {
    Mat M = Vec::LinSpaced(3, 3.0, 1.0).asDiagonal();
    const auto eig = top_eigs_sym(M, 2);
    REQUIRE(eig.values[0] == Catch::Approx(3.0).margin(1e-12));
    REQUIRE(eig.values[1] == Catch::Approx(2.0).margin(1e-12));
    REQUIRE((eig.vectors.col(0) - Vec::Unit(3, 0)).norm() < 1e-12);
    REQUIRE((eig.vectors.col(1) - Vec::Unit(3, 1)).norm() < 1e-12);
}

TEST_CASE("top_eigs_sym on the phase-retrieval population matrix I + 2 x x^T") {
    Rng rng(RngSeed{31, 0});
    const Vec xstar = rng.unit_sphere(12);
    const Mat M = Mat::Identity(12, 12) + 2.0 * xstar * xstar.transpose();
    const auto eig = top_eigs_sym(M, 1);
    REQUIRE(eig.values[0] == Catch::Approx(3.0).margin(1e-10));
    const double overlap = std::abs(eig.vectors.col(0).dot(xstar));
    REQUIRE(overlap == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("top_eigs_sym residuals and orthonormality on random matrices") {
    for (uint64_t s = 0; s < 5; ++s) {
        const Mat M = random_symmetric(8, RngSeed{40, s});
        const auto eig = top_eigs_sym(M, 8);
        const double scale = M.norm();
        for (int i = 0; i < 8; ++i) {
            const double resid = (M * eig.vectors.col(i) - eig.values[i] * eig.vectors.col(i)).norm();
            REQUIRE(resid <= 1e-8 * std::max(scale, 1.0));
        }
        REQUIRE((eig.vectors.transpose() * eig.vectors - Mat::Identity(8, 8))
                    .cwiseAbs()
                    .maxCoeff() < 1e-10);
        for (int i = 0; i + 1 < 8; ++i) REQUIRE(eig.values[i] >= eig.values[i + 1]);
    }
}

TEST_CASE("top_eigs_sym sign convention is deterministic") {
    const Mat M = random_symmetric(6, RngSeed{41, 0});
    const auto a = top_eigs_sym(M, 3);
    const auto b = top_eigs_sym(M, 3);
    REQUIRE(a.vectors == b.vectors);
    for (int i = 0; i < 3; ++i) {
        Eigen::Index argmax;
        a.vectors.col(i).cwiseAbs().maxCoeff(&argmax);
        REQUIRE(a.vectors(argmax, i) > 0.0);
    }
}

TEST_CASE("top_eigs_sym rejects asymmetric input") {
    Mat M(2, 2);
    M << 1.0, 2.0, 0.0, 1.0;
    REQUIRE_THROWS_AS(top_eigs_sym(M, 1), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// top_singular_triplet
// ---------------------------------------------------------------------------

TEST_CASE("top_singular_triplet on a rank-1 matrix") {
    Rng rng(RngSeed{50, 0});
    const CVec h = rng.complex_gaussian_vector(5);
    const CVec x = rng.complex_gaussian_vector(5);
    const CMat M = h * x.adjoint();
    const auto t = top_singular_triplet(M);
    REQUIRE(t.converged);
    REQUIRE(t.sigma1 == Catch::Approx(h.norm() * x.norm()).epsilon(1e-10));
    REQUIRE(std::abs(std::abs(t.left.dot(h)) - h.norm()) < 1e-10);
    REQUIRE(std::abs(std::abs(t.right.dot(x)) - x.norm()) < 1e-10);
    // Reconstruction is phase-free.
    REQUIRE((t.sigma1 * t.left * t.right.adjoint() - M).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("top_singular_triplet zero matrix is flagged degenerate") {
    const auto t = top_singular_triplet(CMat::Zero(4, 4));
    REQUIRE(t.sigma1 == 0.0);
    REQUIRE_FALSE(t.converged);
    REQUIRE(t.left.norm() == Catch::Approx(1.0));
}

TEST_CASE("top_singular_triplet matches dense M^H M oracle") {
    for (uint64_t s = 0; s < 5; ++s) {
        Rng rng(RngSeed{51, s});
        CMat M(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) M(i, j) = rng.complex_gaussian();
        const auto t = top_singular_triplet(M);
        Eigen::SelfAdjointEigenSolver<CMat> es(M.adjoint() * M);
        const double oracle = std::sqrt(es.eigenvalues()(5));
        REQUIRE(std::abs(t.sigma1 - oracle) <= 1e-8);
        REQUIRE((M * t.right - t.sigma1 * t.left).norm() <= 1e-8 * M.norm());
        // Phase convention: pivot entry of the left vector is positive real.
        Eigen::Index argmax;
        t.left.cwiseAbs().maxCoeff(&argmax);
        REQUIRE(t.left[argmax].imag() == Catch::Approx(0.0).margin(1e-12));
        REQUIRE(t.left[argmax].real() > 0.0);
    }
}

// ---------------------------------------------------------------------------
// procrustes_align
// ---------------------------------------------------------------------------

TEST_CASE("procrustes_align of a matrix with itself is the identity") {
    Rng rng(RngSeed{60, 0});
    Mat X(7, 3);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 3; ++j) X(i, j) = rng.gaussian();
    const auto res = procrustes_align(X, X);
    REQUIRE((res.rotation - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(res.residual < 1e-12);
}

TEST_CASE("procrustes_align reduces to the sign for r=1") {
    Rng rng(RngSeed{61, 0});
    Mat x(5, 1), y(5, 1);
    for (int i = 0; i < 5; ++i) {
        x(i, 0) = rng.gaussian();
        y(i, 0) = rng.gaussian();
    }
    const auto res = procrustes_align(x, y);
    const double expect = x.col(0).dot(y.col(0)) >= 0.0 ? 1.0 : -1.0;
    REQUIRE(res.rotation(0, 0) == Catch::Approx(expect));
    const auto res2 = procrustes_align(x, Mat(-y));
    REQUIRE(res2.rotation(0, 0) == Catch::Approx(-expect));
}

TEST_CASE("procrustes_align matches a rotation/reflection grid oracle") {
    Rng rng(RngSeed{62, 0});
    Mat X(5, 2), Y(5, 2);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 2; ++j) {
            X(i, j) = rng.gaussian();
            Y(i, j) = rng.gaussian();
        }
    const auto res = procrustes_align(X, Y);

    // Every 2x2 orthonormal matrix is a rotation or a reflection; sweep both
    // branches on a 0.001-radian grid.
    double best = std::numeric_limits<double>::infinity();
    for (double th = 0.0; th < 2.0 * M_PI; th += 0.001) {
        Mat R(2, 2);
        R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        best = std::min(best, (X * R - Y).norm());
        Mat F(2, 2);
        F << std::cos(th), std::sin(th), std::sin(th), -std::cos(th);
        best = std::min(best, (X * F - Y).norm());
    }
    REQUIRE(res.residual <= best + 1e-12);
    REQUIRE(std::abs(res.residual - best) < 1e-5);
}

TEST_CASE("procrustes_align certificate: R^T X^T X* symmetric PSD") {
    for (uint64_t s = 0; s < 8; ++s) {
        Rng rng(RngSeed{63, s});
        Mat X(6, 3), Y(6, 3);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 3; ++j) {
                X(i, j) = rng.gaussian();
                Y(i, j) = rng.gaussian();
            }
        const auto res = procrustes_align(X, Y);
        REQUIRE((res.rotation.transpose() * res.rotation - Mat::Identity(3, 3))
                    .cwiseAbs()
                    .maxCoeff() < 1e-10);
        const Mat S = res.rotation.transpose() * (X.transpose() * Y);
        REQUIRE((S - S.transpose()).cwiseAbs().maxCoeff() < 1e-8);
        Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (S + S.transpose())));
        REQUIRE(es.eigenvalues().minCoeff() > -1e-8);
    }
}

TEST_CASE("procrustes_align flags rank deficiency") {
    Mat X = Mat::Zero(4, 2);
    X.col(0) = Vec::Unit(4, 0);
    Mat Y = Mat::Zero(4, 2);
    Y.col(1) = Vec::Unit(4, 1);
    const auto res = procrustes_align(X, Y);  // X^T Y = 0, fully degenerate
    REQUIRE(res.degenerate);
    REQUIRE((res.rotation.transpose() * res.rotation - Mat::Identity(2, 2))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
}

// ---------------------------------------------------------------------------
// scalar_align
// ---------------------------------------------------------------------------

TEST_CASE("scalar_align at the truth returns alpha = 1") {
    Rng rng(RngSeed{70, 0});
    const CVec h = rng.complex_unit_sphere(6);
    const CVec x = rng.complex_unit_sphere(6);
    const auto sol = scalar_align(h, x, h, x);
    REQUIRE(sol.converged);
    REQUIRE(std::abs(sol.alpha - Complex(1.0, 0.0)) < 1e-8);
    REQUIRE(sol.objective < 1e-15);
}

TEST_CASE("scalar_align resolves the exact scaling ambiguity") {
    Rng rng(RngSeed{71, 0});
    const CVec hstar = rng.complex_unit_sphere(5);
    const CVec xstar = rng.complex_unit_sphere(5);
    for (Complex alpha0 : {Complex(2.0, 0.0), Complex(0.4, 0.3), Complex(-1.1, 0.8)}) {
        const CVec h = std::conj(alpha0) * hstar;
        const CVec x = xstar / alpha0;
        const auto sol = scalar_align(h, x, hstar, xstar);
        REQUIRE(sol.objective < 1e-12);
        REQUIRE(std::abs(sol.alpha - alpha0) < 1e-6);
    }
}

TEST_CASE("scalar_align matches the two-stage grid oracle") {
    for (uint64_t s = 0; s < 6; ++s) {
        Rng rng(RngSeed{72, s});
        const CVec hstar = rng.complex_unit_sphere(10);
        const CVec xstar = rng.complex_unit_sphere(10);
        const CVec h = hstar + 0.15 * rng.complex_gaussian_vector(10);
        const CVec x = xstar + 0.15 * rng.complex_gaussian_vector(10);
        const auto sol = scalar_align(h, x, hstar, xstar);
        REQUIRE(sol.converged);
        const Complex oracle = ncvx::testing::grid_align_oracle(h, x, hstar, xstar);
        REQUIRE(std::abs(sol.alpha - oracle) <= 1e-4);
        REQUIRE(sol.objective <= alignment_objective(Complex(1, 0), h, x, hstar, xstar) + 1e-15);
    }
}

TEST_CASE("scalar_align rejects zero inputs") {
    const CVec z = CVec::Zero(3);
    const CVec u = CVec::Unit(3, 0);
    REQUIRE_THROWS_AS(scalar_align(z, u, u, u), std::invalid_argument);
    REQUIRE_THROWS_AS(scalar_align(u, z, u, u), std::invalid_argument);
}

TEST_CASE("alignment Wirtinger gradient and Hessian match finite differences") {
    Rng rng(RngSeed{73, 0});
    const CVec hstar = rng.complex_unit_sphere(4);
    const CVec xstar = rng.complex_unit_sphere(4);
    const CVec h = hstar + 0.2 * rng.complex_gaussian_vector(4);
    const CVec x = xstar + 0.2 * rng.complex_gaussian_vector(4);
    const Complex alpha(0.9, 0.25);

    auto g = [&](double u, double v) {
        return alignment_objective(Complex(u, v), h, x, hstar, xstar);
    };
    const double u0 = alpha.real(), v0 = alpha.imag(), e = 1e-6;

    // Real gradient is 2(Re w, Im w) for w = dg/d(conj alpha).
    const Complex w = alignment_wirtinger_gradient(alpha, h, x, hstar, xstar);
    const double fd_u = (g(u0 + e, v0) - g(u0 - e, v0)) / (2 * e);
    const double fd_v = (g(u0, v0 + e) - g(u0, v0 - e)) / (2 * e);
    REQUIRE(2.0 * w.real() == Catch::Approx(fd_u).margin(1e-6));
    REQUIRE(2.0 * w.imag() == Catch::Approx(fd_v).margin(1e-6));

    // Real Hessian entries from (a, b).
    const auto H = alignment_wirtinger_hessian(alpha, h, x, hstar, xstar);
    const double fd_uu = (g(u0 + e, v0) - 2 * g(u0, v0) + g(u0 - e, v0)) / (e * e);
    const double fd_vv = (g(u0, v0 + e) - 2 * g(u0, v0) + g(u0, v0 - e)) / (e * e);
    const double fd_uv = (g(u0 + e, v0 + e) - g(u0 + e, v0 - e) - g(u0 - e, v0 + e) +
                          g(u0 - e, v0 - e)) /
                         (4 * e * e);
    REQUIRE(2.0 * H.a + 2.0 * H.b.real() == Catch::Approx(fd_uu).margin(1e-3));
    REQUIRE(2.0 * H.a - 2.0 * H.b.real() == Catch::Approx(fd_vv).margin(1e-3));
    REQUIRE(2.0 * H.b.imag() == Catch::Approx(fd_uv).margin(1e-3));
}

TEST_CASE("first-order optimality identity at the aligned point") {
    // At the minimizer, with (x2, h2) = (x*, h*):
    //   ||x~ - x*||^2 + x*^H (x~ - x*) = ||h~ - h*||^2 + (h~ - h*)^H h*.
    for (uint64_t s = 0; s < 6; ++s) {
        Rng rng(RngSeed{74, s});
        const CVec hstar = rng.complex_unit_sphere(8);
        const CVec xstar = rng.complex_unit_sphere(8);
        const CVec h = hstar + 0.3 * rng.complex_gaussian_vector(8);
        const CVec x = xstar + 0.3 * rng.complex_gaussian_vector(8);
        const auto sol = scalar_align(h, x, hstar, xstar);
        REQUIRE(sol.converged);
        const CVec ht = h / std::conj(sol.alpha);
        const CVec xt = sol.alpha * x;
        const Complex lhs = (xt - xstar).squaredNorm() + xstar.dot(xt - xstar);
        const Complex rhs = (ht - hstar).squaredNorm() + (ht - hstar).dot(hstar);
        REQUIRE(std::abs(lhs - rhs) < 1e-8);
    }
}

TEST_CASE("alignment objective is locally strongly convex near the truth") {
    // Local strong convexity needs delta small enough that the 18*delta disc
    // around 1 stays inside the convexity basin; delta = 0.01 satisfies that
    // (delta = 0.05 provably does not: |alpha| can reach ~0.1 where the
    // Hessian is indefinite).
    const double delta = 0.01;
    Rng rng(RngSeed{75, 0});
    const CVec hstar = rng.complex_unit_sphere(6);
    const CVec xstar = rng.complex_unit_sphere(6);
    for (int probe = 0; probe < 100; ++probe) {
        CVec dh = rng.complex_gaussian_vector(6);
        CVec dx = rng.complex_gaussian_vector(6);
        const CVec h = hstar + delta * dh / std::max(dh.norm(), 1.0);
        const CVec x = xstar + delta * dx / std::max(dx.norm(), 1.0);
        const double rad = 18.0 * delta * rng.uniform01();
        const double phi = 2.0 * M_PI * rng.uniform01();
        const Complex alpha = Complex(1.0, 0.0) + rad * Complex(std::cos(phi), std::sin(phi));
        const auto H = alignment_wirtinger_hessian(alpha, h, x, hstar, xstar);
        const Complex u = rng.complex_gaussian();
        const Complex v = rng.complex_gaussian();
        const double quad = alignment_hessian_quadform(H, u, v);
        REQUIRE(quad >= 0.5 * (std::norm(u) + std::norm(v)));
    }
}
