#include <catch2/catch_amalgamated.hpp>

#include "ncvx/matrix_completion.hpp"

using namespace ncvx;

namespace {

Mat random_orthonormal(int r, RngSeed seed) {
    Rng rng(seed);
    Mat G(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) G(i, j) = rng.gaussian();
    return Mat(Eigen::HouseholderQR<Mat>(G).householderQ());
}

RowMat random_factor(int n, int r, RngSeed seed) {
    Rng rng(seed);
    RowMat X(n, r);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < r; ++j) X(i, j) = rng.gaussian();
    return X;
}

}  // namespace

TEST_CASE("projections partition and restrict as operators") {
    const auto inst = gen_matrix_completion(5, 2, 0.5, 0.0, RngSeed{1, 0});
    Rng rng(RngSeed{2, 0});
    Mat M(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) M(i, j) = rng.gaussian();

    const Eigen::Index l = 2;
    const Mat pl = project_omega_l(inst, M, l);
    const Mat pml = project_omega_minus_l(inst, M, l);
    const Mat po = project_omega(inst, M);
    REQUIRE((pl + pml - po).cwiseAbs().maxCoeff() == 0.0);

    // P_l keeps exactly row/column l, independent of the mask.
    const Mat full_l = project_l(M, l);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            if (i == l || j == l)
                REQUIRE(full_l(i, j) == M(i, j));
            else
                REQUIRE(full_l(i, j) == 0.0);
        }

    // Loop oracles for the masked projectors.
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const bool in = inst.mask(i, j);
            REQUIRE(po(i, j) == (in ? M(i, j) : 0.0));
            REQUIRE(pl(i, j) == ((in && (i == l || j == l)) ? M(i, j) : 0.0));
            REQUIRE(pml(i, j) == ((in && i != l && j != l) ? M(i, j) : 0.0));
        }

    // Idempotence and linearity.
    REQUIRE((project_omega(inst, po) - po).cwiseAbs().maxCoeff() == 0.0);
    Mat N(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) N(i, j) = rng.gaussian();
    const Mat combo = project_omega(inst, Mat(2.0 * M - 3.0 * N));
    const Mat parts = 2.0 * project_omega(inst, M) - 3.0 * project_omega(inst, N);
    REQUIRE((combo - parts).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE_THROWS_AS(project_omega_l(inst, M, 9), std::invalid_argument);
}

TEST_CASE("mc_loss at the truth and under rotations") {
    const auto inst = gen_matrix_completion(20, 3, 0.6, 0.0, RngSeed{3, 0});
    const RowMat X = *inst.truth_factor;
    REQUIRE(mc_loss(inst, X) <= 1e-20);
    const Mat Q = random_orthonormal(3, RngSeed{4, 0});
    REQUIRE(mc_loss(inst, RowMat(Mat(X) * Q)) <= 1e-20);
}

TEST_CASE("mc_loss matches a loop oracle") {
    const auto inst = gen_matrix_completion(6, 2, 0.7, 0.1, RngSeed{5, 0});
    const RowMat X = random_factor(6, 2, RngSeed{6, 0});
    const Mat P = Mat(X) * Mat(X).transpose();
    double oracle = 0.0;
    for (int j = 0; j < 6; ++j)
        for (int k = 0; k < 6; ++k)
            if (inst.mask(j, k)) oracle += sqr(P(j, k) - inst.observed(j, k));
    oracle /= 4.0 * inst.p;
    REQUIRE(mc_loss(inst, X) == Catch::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("mc_gradient is zero at the truth and matches finite differences") {
    const auto inst = gen_matrix_completion(8, 2, 0.6, 0.0, RngSeed{7, 0});
    REQUIRE(mc_gradient(inst, *inst.truth_factor).cwiseAbs().maxCoeff() <= 1e-12);

    const RowMat X = random_factor(8, 2, RngSeed{8, 0});
    const RowMat G = mc_gradient(inst, X);
    const double h = 1e-6;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 2; ++j) {
            RowMat Xp = X, Xm = X;
            Xp(i, j) += h;
            Xm(i, j) -= h;
            const double fd = (mc_loss(inst, Xp) - mc_loss(inst, Xm)) / (2 * h);
            REQUIRE(std::abs(G(i, j) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
        }
}

TEST_CASE("mc_gradient is rotation equivariant") {
    const auto inst = gen_matrix_completion(10, 3, 0.5, 0.05, RngSeed{9, 0});
    const RowMat X = random_factor(10, 3, RngSeed{10, 0});
    const Mat Q = random_orthonormal(3, RngSeed{11, 0});
    const RowMat lhs = mc_gradient(inst, RowMat(Mat(X) * Q));
    const Mat rhs = Mat(mc_gradient(inst, X)) * Q;
    REQUIRE((Mat(lhs) - rhs).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("mc_clean_hessian_quadform identities") {
    const auto inst = gen_matrix_completion(9, 2, 0.6, 0.0, RngSeed{12, 0});
    const RowMat Xstar = *inst.truth_factor;
    REQUIRE(mc_clean_hessian_quadform(inst, Xstar, RowMat::Zero(9, 2)) == 0.0);

    // At X = X* the second term vanishes, leaving the nonnegative first term.
    const RowMat V = random_factor(9, 2, RngSeed{13, 0});
    const double q = mc_clean_hessian_quadform(inst, Xstar, V);
    double first = 0.0;
    const Mat S = Mat(V) * Mat(Xstar).transpose() + Mat(Xstar) * Mat(V).transpose();
    for (int j = 0; j < 9; ++j)
        for (int k = 0; k < 9; ++k)
            if (inst.mask(j, k)) first += sqr(S(j, k));
    first /= 2.0 * inst.p;
    REQUIRE(q == Catch::Approx(first).epsilon(1e-10));
    REQUIRE(q >= 0.0);
}

TEST_CASE("mc_clean_hessian_quadform matches FD of the clean gradient") {
    const auto inst = gen_matrix_completion(7, 2, 0.8, 0.0, RngSeed{14, 0});
    const RowMat X = random_factor(7, 2, RngSeed{15, 0});
    const RowMat V = random_factor(7, 2, RngSeed{16, 0});
    const double h = 1e-6;
    const RowMat gp = mc_clean_gradient(inst, RowMat(X + h * V));
    const RowMat gm = mc_clean_gradient(inst, RowMat(X - h * V));
    const double fd = ((gp - gm) / (2 * h)).cwiseProduct(V).sum();
    const double qf = mc_clean_hessian_quadform(inst, X, V);
    REQUIRE(std::abs(qf - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));

    // Operator apply realizes the same quadratic form.
    const double via_apply = mc_clean_hessian_apply(inst, X, V).cwiseProduct(V).sum();
    REQUIRE(via_apply == Catch::Approx(qf).epsilon(1e-10));
}

TEST_CASE("mc_spectral_init is exact at full sampling and deterministic") {
    const auto inst = gen_matrix_completion(15, 3, 1.0, 0.0, RngSeed{17, 0});
    const RowMat X0 = mc_spectral_init(inst);
    REQUIRE((Mat(X0) * Mat(X0).transpose() - *inst.truth_matrix).cwiseAbs().maxCoeff() <=
            1e-8);
    REQUIRE(Mat(mc_spectral_init(inst)) == Mat(X0));
}

TEST_CASE("mc_spectral_init lands within 0.5 relative error at desk scale") {
    int good = 0;
    for (uint64_t s = 0; s < 20; ++s) {
        const auto inst = gen_matrix_completion(500, 5, 0.2, 0.0, RngSeed{700, s});
        const RowMat X0 = mc_spectral_init(inst);
        const auto pro = procrustes_align(Mat(X0), Mat(*inst.truth_factor));
        if (pro.residual / inst.truth_factor->norm() <= 0.5) ++good;
    }
    REQUIRE(good >= 19);
}

TEST_CASE("mc_run converges on a noiseless desk-scale instance") {
    const auto inst = gen_matrix_completion(120, 3, 0.3, 0.0, RngSeed{18, 0});
    McConfig cfg;
    cfg.eta = 0.2;
    cfg.max_iters = 500;
    cfg.tol_rel = 1e-5;
    const auto traj = mc_run(inst, cfg);
    REQUIRE(traj.reached_tol);
    REQUIRE(traj.metrics.back().err_fro <= 1e-5);
}

TEST_CASE("mc_run with zero step size is constant") {
    const auto inst = gen_matrix_completion(12, 2, 0.5, 0.0, RngSeed{19, 0});
    McConfig cfg;
    cfg.eta = 0.0;
    cfg.max_iters = 5;
    const auto traj = mc_run(inst, cfg);
    const RowMat X0 = mc_spectral_init(inst);
    for (const auto& X : traj.iterates_kept)
        REQUIRE((X - X0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projected baseline with generous radius matches vanilla exactly") {
    const auto inst = gen_matrix_completion(25, 2, 0.5, 0.0, RngSeed{20, 0});
    McConfig vanilla;
    vanilla.max_iters = 50;
    McConfig projected = vanilla;
    projected.baseline = McConfig::Baseline::projected;
    projected.projection_radius = 1e6;
    const auto tv = mc_run(inst, vanilla);
    const auto tp = mc_run(inst, projected);
    REQUIRE((tv.iterates_kept.back() - tp.iterates_kept.back()).cwiseAbs().maxCoeff() ==
            0.0);
}

TEST_CASE("noisy runs stabilize at a floor that grows with sigma") {
    std::vector<double> floors;
    for (double sigma : {1e-4, 1e-3, 1e-2}) {
        double worst = 0.0;
        for (uint64_t s = 0; s < 3; ++s) {
            const auto inst = gen_matrix_completion(200, 3, 0.3, sigma, RngSeed{800, s});
            McConfig cfg;
            cfg.eta = 0.2;
            cfg.max_iters = 250;
            cfg.record_every = 25;
            const auto traj = mc_run(inst, cfg);
            REQUIRE(std::isfinite(traj.metrics.back().err_fro));
            worst = std::max(worst, traj.metrics.back().err_fro);
        }
        floors.push_back(worst);
    }
    REQUIRE(floors[0] < floors[1]);
    REQUIRE(floors[1] < floors[2]);
}

TEST_CASE("mc_error_report zeros at the truth and under rotation") {
    const auto inst = gen_matrix_completion(14, 3, 0.7, 0.0, RngSeed{21, 0});
    const auto at_truth = mc_error_report(inst, *inst.truth_factor);
    REQUIRE(at_truth.err_fro <= 1e-12);
    REQUIRE(at_truth.err_op <= 1e-12);
    REQUIRE(at_truth.err_2inf <= 1e-12);
    REQUIRE(at_truth.err_entrywise <= 1e-12);

    const Mat Q = random_orthonormal(3, RngSeed{22, 0});
    const auto rotated = mc_error_report(inst, RowMat(Mat(*inst.truth_factor) * Q));
    REQUIRE(rotated.err_fro <= 1e-12);
    REQUIRE(rotated.err_entrywise <= 1e-12);
}

TEST_CASE("mc_error_report matches loop oracles on a random point") {
    const auto inst = gen_matrix_completion(10, 2, 0.6, 0.0, RngSeed{23, 0});
    const RowMat X = random_factor(10, 2, RngSeed{24, 0});
    const auto rep = mc_error_report(inst, X);

    const Mat Xs = *inst.truth_factor;
    const auto pro = procrustes_align(Mat(X), Xs);
    const Mat D = Mat(X) * pro.rotation - Xs;

    double fro2 = 0.0, max_row = 0.0, max_row_s = 0.0;
    for (int i = 0; i < 10; ++i) {
        double row = 0.0, row_s = 0.0;
        for (int j = 0; j < 2; ++j) {
            fro2 += sqr(D(i, j));
            row += sqr(D(i, j));
            row_s += sqr(Xs(i, j));
        }
        max_row = std::max(max_row, std::sqrt(row));
        max_row_s = std::max(max_row_s, std::sqrt(row_s));
    }
    REQUIRE(rep.err_fro == Catch::Approx(std::sqrt(fro2) / Xs.norm()).epsilon(1e-10));
    REQUIRE(rep.err_2inf == Catch::Approx(max_row / max_row_s).epsilon(1e-10));

    // Spectral norm oracle: square root of the top eigenvalue of D^T D.
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(D.transpose() * D));
    Eigen::SelfAdjointEigenSolver<Mat> es_s(Mat(Xs.transpose() * Xs));
    const double op_oracle =
        std::sqrt(es.eigenvalues()(1)) / std::sqrt(es_s.eigenvalues()(1));
    REQUIRE(rep.err_op == Catch::Approx(op_oracle).epsilon(1e-8));

    const Mat P = Mat(X) * Mat(X).transpose();
    double max_entry = 0.0, max_entry_m = 0.0;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) {
            max_entry = std::max(max_entry, std::abs(P(i, j) - (*inst.truth_matrix)(i, j)));
            max_entry_m = std::max(max_entry_m, std::abs((*inst.truth_matrix)(i, j)));
        }
    REQUIRE(rep.err_entrywise == Catch::Approx(max_entry / max_entry_m).epsilon(1e-10));
}

TEST_CASE("mc_incoherence_param on canonical examples") {
    // Maximally coherent: U = first r columns of the identity.
    Mat U = Mat::Identity(20, 4);
    REQUIRE(mc_incoherence_param(U) == Catch::Approx(20.0 / 4.0));

    // Perfectly flat: all entries +-1/sqrt(n).
    Rng rng(RngSeed{25, 0});
    Mat F(16, 2);
    // Two orthogonal sign patterns (Hadamard-style).
    for (int i = 0; i < 16; ++i) {
        F(i, 0) = 1.0 / 4.0;
        F(i, 1) = (i % 2 == 0 ? 1.0 : -1.0) / 4.0;
    }
    REQUIRE(mc_incoherence_param(F) == Catch::Approx(1.0));

    // Random orthonormalized Gaussian factors have modest incoherence.
    const auto inst = gen_matrix_completion(500, 5, 1.0, 0.0, RngSeed{26, 0});
    const double mu = mc_incoherence_param(Mat(*inst.truth_factor));
    REQUIRE(mu >= 1.0);
    REQUIRE(mu <= 20.0);
}
