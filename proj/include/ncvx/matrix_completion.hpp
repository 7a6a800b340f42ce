#pragma once

#include <Eigen/SVD>
#include <cmath>
#include <vector>

#include "ncvx/ensembles.hpp"
#include "ncvx/numlin.hpp"

namespace ncvx {

// ============================================================================
// Vanilla gradient descent for PSD low-rank matrix completion:
//   f(X) = (1/4p) sum_{(j,k) in Omega} (e_j^T X X^T e_k - Y_jk)^2
// Omega is symmetric, so the sum runs over both triangles (diagonal once).
// ============================================================================

struct McConfig {
    double eta = 0.2;
    long max_iters = 500;
    double tol_rel = 0.0;
    long record_every = 1;
    enum class Baseline { none, projected, regularized } baseline = Baseline::none;
    // Stopping metric: factor error ||X H - X*||_F / ||X*||_F at record points,
    // or the product error ||X X^T - M*||_F / ||M*||_F checked every iteration
    // (the success criterion of the phase-transition experiment).
    enum class StopRule { factor_fro, product_fro } stop_rule = StopRule::factor_fro;
    double projection_radius = -1.0;  // < 0: 2 * max_j ||e_j^T X0||
    double reg_lambda = 1.0;
    double reg_alpha = -1.0;  // < 0: 2 * ||X0||_{2,inf}^2
};

struct McMetrics {
    double err_fro = std::numeric_limits<double>::quiet_NaN();
    double err_op = std::numeric_limits<double>::quiet_NaN();
    double err_2inf = std::numeric_limits<double>::quiet_NaN();
    double err_entrywise = std::numeric_limits<double>::quiet_NaN();
    double loss = 0.0;
};

struct McTrajectory {
    std::vector<long> iters;
    std::vector<McMetrics> metrics;
    std::vector<RowMat> iterates_kept;
    long iterations_run = 0;
    bool reached_tol = false;
};

// ----------------------------------------------------------------------------
// Projections
// ----------------------------------------------------------------------------

/// Entrywise mask onto the sampled set Omega.
inline Mat project_omega(const MatrixCompletionInstance& inst, const Mat& M) {
    if (M.rows() != inst.n || M.cols() != inst.n)
        throw std::invalid_argument("project_omega: shape mismatch");
    return inst.mask.select(M, 0.0);
}

/// Entries of Omega lying in row or column l.
inline Mat project_omega_l(const MatrixCompletionInstance& inst, const Mat& M,
                           Eigen::Index l) {
    if (M.rows() != inst.n || M.cols() != inst.n || l < 0 || l >= inst.n)
        throw std::invalid_argument("project_omega_l: bad arguments");
    Mat out = Mat::Zero(inst.n, inst.n);
    for (Eigen::Index k = 0; k < inst.n; ++k) {
        if (inst.mask(l, k)) out(l, k) = M(l, k);
        if (inst.mask(k, l)) out(k, l) = M(k, l);
    }
    return out;
}

/// Entries of Omega avoiding row and column l.
inline Mat project_omega_minus_l(const MatrixCompletionInstance& inst, const Mat& M,
                                 Eigen::Index l) {
    if (M.rows() != inst.n || M.cols() != inst.n || l < 0 || l >= inst.n)
        throw std::invalid_argument("project_omega_minus_l: bad arguments");
    Mat out = project_omega(inst, M);
    out.row(l).setZero();
    out.col(l).setZero();
    return out;
}

/// Full row/column l, mask-independent.
inline Mat project_l(const Mat& M, Eigen::Index l) {
    if (M.rows() != M.cols() || l < 0 || l >= M.rows())
        throw std::invalid_argument("project_l: bad arguments");
    Mat out = Mat::Zero(M.rows(), M.cols());
    out.row(l) = M.row(l);
    out.col(l) = M.col(l);
    return out;
}

// ----------------------------------------------------------------------------
// Loss, gradient, Hessian quadratic form
// ----------------------------------------------------------------------------

inline double mc_loss(const MatrixCompletionInstance& inst, const RowMat& X) {
    if (X.rows() != inst.n) throw std::invalid_argument("mc_loss: dimension mismatch");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < inst.n; ++j)
        for (Eigen::Index k : inst.mask_rows[j])
            sum += sqr(X.row(j).dot(X.row(k)) - inst.observed(j, k));
    return sum / (4.0 * inst.p);
}

/// (1/p) P_Omega[X X^T - (M* + E)] X
inline RowMat mc_gradient(const MatrixCompletionInstance& inst, const RowMat& X) {
    if (X.rows() != inst.n) throw std::invalid_argument("mc_gradient: dimension mismatch");
    RowMat G = RowMat::Zero(inst.n, X.cols());
    for (Eigen::Index j = 0; j < inst.n; ++j)
        for (Eigen::Index k : inst.mask_rows[j]) {
            const double r = X.row(j).dot(X.row(k)) - inst.observed(j, k);
            G.row(j) += r * X.row(k);
        }
    return G / inst.p;
}

/// Gradient of the noiseless loss (residuals against M* instead of Y).
inline RowMat mc_clean_gradient(const MatrixCompletionInstance& inst, const RowMat& X) {
    if (!inst.truth_matrix)
        throw std::invalid_argument("mc_clean_gradient: needs truth_matrix");
    RowMat G = RowMat::Zero(inst.n, X.cols());
    const Mat& M = *inst.truth_matrix;
    for (Eigen::Index j = 0; j < inst.n; ++j)
        for (Eigen::Index k : inst.mask_rows[j]) {
            const double r = X.row(j).dot(X.row(k)) - M(j, k);
            G.row(j) += r * X.row(k);
        }
    return G / inst.p;
}

/// vec(V)^T Hess f_clean(X) vec(V)
///   = (1/2p) ||P_Omega(V X^T + X V^T)||_F^2
///     + (1/p) <P_Omega(X X^T - M*), V V^T>.
inline double mc_clean_hessian_quadform(const MatrixCompletionInstance& inst,
                                        const RowMat& X, const RowMat& V) {
    if (!inst.truth_matrix)
        throw std::invalid_argument("mc_clean_hessian_quadform: needs truth_matrix");
    if (X.rows() != inst.n || V.rows() != inst.n || X.cols() != V.cols())
        throw std::invalid_argument("mc_clean_hessian_quadform: shape mismatch");
    const Mat& M = *inst.truth_matrix;
    double first = 0.0, second = 0.0;
    for (Eigen::Index j = 0; j < inst.n; ++j)
        for (Eigen::Index k : inst.mask_rows[j]) {
            const double s = V.row(j).dot(X.row(k)) + X.row(j).dot(V.row(k));
            first += s * s;
            second += (X.row(j).dot(X.row(k)) - M(j, k)) * V.row(j).dot(V.row(k));
        }
    return first / (2.0 * inst.p) + second / inst.p;
}

/// Operator apply of the clean Hessian: H(V) = (1/p) P_Omega(V X^T + X V^T) X
/// + (1/p) P_Omega(X X^T - M*) V, so that <V, H(V)> equals the quadform.
inline RowMat mc_clean_hessian_apply(const MatrixCompletionInstance& inst,
                                     const RowMat& X, const RowMat& V) {
    if (!inst.truth_matrix)
        throw std::invalid_argument("mc_clean_hessian_apply: needs truth_matrix");
    const Mat& M = *inst.truth_matrix;
    RowMat out = RowMat::Zero(inst.n, X.cols());
    for (Eigen::Index j = 0; j < inst.n; ++j)
        for (Eigen::Index k : inst.mask_rows[j]) {
            const double w = V.row(j).dot(X.row(k)) + X.row(j).dot(V.row(k));
            const double r = X.row(j).dot(X.row(k)) - M(j, k);
            out.row(j) += w * X.row(k) + r * V.row(k);
        }
    return out / inst.p;
}

// ----------------------------------------------------------------------------
// Spectral initialization and error metrics
// ----------------------------------------------------------------------------

/// Rank-r eigendecomposition of M0 = P_Omega(Y)/p; X0 = U0 (Sigma0)^{1/2}.
/// Fails loudly when any of the top-r eigenvalues is nonpositive (possible at
/// very small sampling rates), since X0 would be undefined.
inline RowMat mc_spectral_init(const MatrixCompletionInstance& inst) {
    const Mat M0 = inst.observed / inst.p;  // observed is already P_Omega(Y)
    const auto eig = top_eigs_sym(M0, inst.r);
    if (eig.values[inst.r - 1] <= 0.0)
        throw NumericFailure("mc_spectral_init: nonpositive top-r eigenvalue " +
                             std::to_string(eig.values[inst.r - 1]));
    return RowMat(eig.vectors * eig.values.array().sqrt().matrix().asDiagonal());
}

/// The four relative recovery errors, with a fresh
/// Procrustes alignment: factor errors in Frobenius, spectral, and l2/inf
/// norms, plus the entrywise error of X X^T against M*.
inline McMetrics mc_error_report(const MatrixCompletionInstance& inst, const RowMat& X) {
    if (!inst.truth_factor)
        throw std::invalid_argument("mc_error_report: needs truth_factor");
    const Mat Xs = *inst.truth_factor;
    const auto pro = procrustes_align(Mat(X), Xs);
    const Mat D = Mat(X) * pro.rotation - Xs;

    McMetrics m;
    m.err_fro = D.norm() / Xs.norm();
    Eigen::JacobiSVD<Mat> svd_d(D);
    Eigen::JacobiSVD<Mat> svd_x(Xs);
    m.err_op = svd_d.singularValues()[0] / svd_x.singularValues()[0];
    m.err_2inf = D.rowwise().norm().maxCoeff() / Xs.rowwise().norm().maxCoeff();
    const Mat& Mstar = *inst.truth_matrix;
    m.err_entrywise = (Mat(X) * Mat(X).transpose() - Mstar).cwiseAbs().maxCoeff() /
                      Mstar.cwiseAbs().maxCoeff();
    m.loss = mc_loss(inst, X);
    return m;
}

/// mu = n ||U||_{2,inf}^2 / r for an orthonormal basis U of the truth's column
/// span; a factor input (X* = U* Sigma*^{1/2}) is orthonormalized first.
inline double mc_incoherence_param(const Mat& UorX) {
    const Eigen::Index n = UorX.rows(), r = UorX.cols();
    Mat U = UorX;
    if ((U.transpose() * U - Mat::Identity(r, r)).cwiseAbs().maxCoeff() > 1e-8) {
        Eigen::JacobiSVD<Mat> svd(UorX, Eigen::ComputeThinU);
        U = svd.matrixU();
    }
    return static_cast<double>(n) * U.rowwise().squaredNorm().maxCoeff() /
           static_cast<double>(r);
}

// ----------------------------------------------------------------------------
// Gradient descent loop
// ----------------------------------------------------------------------------

namespace detail {

/// ||X X^T - M*||_F^2 via r x r Gram matrices (exact identity, O(n r^2)):
/// ||X X^T||_F^2 - 2 ||X*^T X||_F^2 + ||M*||_F^2.
inline double mc_product_err2(const RowMat& X, const RowMat& Xstar, double mstar_fro2) {
    const Mat g1 = Mat(X).transpose() * Mat(X);
    const Mat g2 = Mat(Xstar).transpose() * Mat(X);
    return g1.squaredNorm() - 2.0 * g2.squaredNorm() + mstar_fro2;
}

}  // namespace detail

/// Vanilla GD plus two comparison baselines: `projected` clips each row of
/// X^{t+1} to l2 norm <= projection_radius; `regularized` adds the gradient of
/// lambda * sum_j max(||e_j^T X||^2 - alpha, 0)^2 (minimal stand-ins for the
/// externally cited schemes).
inline McTrajectory mc_run(const MatrixCompletionInstance& inst, const McConfig& cfg) {
    if (!(cfg.eta >= 0.0) || cfg.max_iters < 0 || cfg.record_every < 1)
        throw std::invalid_argument("mc_run: invalid config");
    RowMat X = mc_spectral_init(inst);

    double radius = cfg.projection_radius;
    if (cfg.baseline == McConfig::Baseline::projected && radius < 0.0)
        radius = 2.0 * X.rowwise().norm().maxCoeff();
    double reg_alpha = cfg.reg_alpha;
    if (cfg.baseline == McConfig::Baseline::regularized && reg_alpha < 0.0)
        reg_alpha = 2.0 * X.rowwise().squaredNorm().maxCoeff();

    const bool product_stop = cfg.stop_rule == McConfig::StopRule::product_fro;
    double mstar_fro2 = 0.0;
    RowMat Xstar;
    if (inst.truth_factor) {
        Xstar = *inst.truth_factor;
        const Mat gs = Mat(Xstar).transpose() * Mat(Xstar);
        mstar_fro2 = gs.squaredNorm();
    }

    McTrajectory traj;
    auto record = [&](long t) {
        traj.iters.push_back(t);
        traj.metrics.push_back(inst.truth_factor ? mc_error_report(inst, X)
                                                 : McMetrics{.loss = mc_loss(inst, X)});
        traj.iterates_kept.push_back(X);
        return traj.metrics.back();
    };

    for (long t = 0; t <= cfg.max_iters; ++t) {
        if (!X.allFinite()) throw NumericFailure("mc_run: non-finite iterate", t);
        if (product_stop && inst.truth_factor && cfg.tol_rel > 0.0) {
            const double err2 = detail::mc_product_err2(X, Xstar, mstar_fro2);
            if (err2 <= sqr(cfg.tol_rel) * mstar_fro2) {
                record(t);
                traj.iterations_run = t;
                traj.reached_tol = true;
                break;
            }
        }
        const bool at_record = (t % cfg.record_every == 0) || t == cfg.max_iters;
        if (at_record) {
            const McMetrics m = record(t);
            traj.iterations_run = t;
            if (!product_stop && inst.truth_factor && cfg.tol_rel > 0.0 &&
                m.err_fro <= cfg.tol_rel) {
                traj.reached_tol = true;
                break;
            }
        }
        if (t == cfg.max_iters) break;

        RowMat G = mc_gradient(inst, X);
        if (cfg.baseline == McConfig::Baseline::regularized) {
            for (Eigen::Index j = 0; j < inst.n; ++j) {
                const double excess = X.row(j).squaredNorm() - reg_alpha;
                if (excess > 0.0) G.row(j) += 4.0 * cfg.reg_lambda * excess * X.row(j);
            }
        }
        X -= cfg.eta * G;
        if (cfg.baseline == McConfig::Baseline::projected) {
            for (Eigen::Index j = 0; j < inst.n; ++j) {
                const double nrm = X.row(j).norm();
                if (nrm > radius) X.row(j) *= radius / nrm;
            }
        }
        traj.iterations_run = t + 1;
    }
    return traj;
}

}  // namespace ncvx
