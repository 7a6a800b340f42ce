#pragma once

#include <string>
#include <vector>

#include "ncvx/blind_deconv.hpp"
#include "ncvx/matrix_completion.hpp"
#include "ncvx/phase_retrieval.hpp"

namespace ncvx {

// ============================================================================
// Leave-one-out auxiliary trajectories. Each sequence reruns gradient descent
// on the loss with one sample removed (population-substituted for matrix
// completion), sharing the instance's randomness and introducing none. They
// are diagnostics only; the solvers never see them.
// ============================================================================

struct PrLooTrajectory {
    Eigen::Index l = 0;
    std::vector<long> iters;
    std::vector<Vec> iterates;
    std::vector<double> held_out_incoherence;  // |a_l^T (x^{t,(l)} - x*)|
};

struct McLooTrajectory {
    Eigen::Index l = 0;
    std::vector<long> iters;
    std::vector<RowMat> iterates;
    // || (X^{t,(l)} H^{t,(l)} - X*)_{l,.} ||_2 with H^{t,(l)} aligning to X*.
    std::vector<double> held_out_row_error;
};

struct BdLooTrajectory {
    Eigen::Index l = 0;
    std::vector<long> iters;
    std::vector<BdState> iterates;
    std::vector<double> held_out_incoherence;  // |a_l^H (x~^{t,(l)} - x*)|
    std::vector<double> aligned_truth_error;   // ||x~^{t,(l)} - x*||_2
};

/// Aggregated gap/incoherence curves over a set of left-out indices.
struct LooReport {
    std::string problem;
    std::vector<long> iters;
    std::vector<Eigen::Index> ls;
    std::vector<std::vector<double>> gaps;      // [l index][record]
    std::vector<std::vector<double>> held_out;  // [l index][record]
    std::vector<double> max_gap;                // [record]
    std::vector<Eigen::Index> argmax_l;         // [record]
};

// ----------------------------------------------------------------------------
// Phase retrieval (drop sample l, keep the 1/4m normalization)
// ----------------------------------------------------------------------------

/// (1/m) sum_{j != l} [(a_j^T x)^2 - y_j] (a_j^T x) a_j
inline Vec pr_loo_gradient(const PhaseRetrievalInstance& inst, const Vec& x,
                           Eigen::Index l) {
    if (l < 0 || l >= inst.m) throw std::invalid_argument("pr_loo_gradient: l out of range");
    const Vec ax = inst.designs * x;
    Vec w = (ax.array().square() - inst.measurements.array()) * ax.array();
    w[l] = 0.0;
    return inst.designs.transpose() * w / static_cast<double>(inst.m);
}

/// Spectral init from Y^{(l)} = Y - y_l a_l a_l^T / m, sign-matched to x*.
inline Vec pr_loo_spectral_init(const PhaseRetrievalInstance& inst, Eigen::Index l) {
    if (l < 0 || l >= inst.m)
        throw std::invalid_argument("pr_loo_spectral_init: l out of range");
    if (inst.m < 2)
        throw std::invalid_argument("pr_loo_spectral_init: dropping the only sample");
    if (!inst.truth)
        throw std::invalid_argument("pr_loo_spectral_init: needs truth for the sign choice");
    Mat Y = pr_data_matrix(inst);
    Y -= (inst.measurements[l] / inst.m) * inst.designs.row(l).transpose() *
         inst.designs.row(l);
    const auto eig = top_eigs_sym(Y, 1);
    Vec x0 = std::sqrt(std::max(eig.values[0], 0.0) / 3.0) * eig.vectors.col(0);
    if ((x0 - *inst.truth).norm() > (x0 + *inst.truth).norm()) x0 = -x0;
    return x0;
}

inline PrLooTrajectory pr_loo_run(const PhaseRetrievalInstance& inst, const PrConfig& cfg,
                                  Eigen::Index l) {
    PrLooTrajectory traj;
    traj.l = l;
    Vec x = pr_loo_spectral_init(inst, l);

    double eta = cfg.eta;
    if (cfg.step_rule == PrConfig::StepRule::log_scaled)
        eta = cfg.c1 / (std::log(static_cast<double>(std::max<Eigen::Index>(inst.n, 2))) *
                        std::max(x.squaredNorm(), 1e-12));

    const Vec al = inst.designs.row(l).transpose();
    for (long t = 0; t <= cfg.max_iters; ++t) {
        if (!x.allFinite()) throw NumericFailure("pr_loo_run: non-finite iterate", t);
        if (t % cfg.record_every == 0 || t == cfg.max_iters) {
            traj.iters.push_back(t);
            traj.iterates.push_back(x);
            traj.held_out_incoherence.push_back(std::abs(al.dot(x - *inst.truth)));
        }
        if (t == cfg.max_iters) break;
        x -= eta * pr_loo_gradient(inst, x, l);
    }
    return traj;
}

// ----------------------------------------------------------------------------
// Matrix completion (row/column l replaced by its population mean)
// ----------------------------------------------------------------------------

/// (1/p) P_{Omega^{-l}}[X X^T - Y] X + P_l(X X^T - M*) X
inline RowMat mc_loo_gradient(const MatrixCompletionInstance& inst, const RowMat& X,
                              Eigen::Index l) {
    if (l < 0 || l >= inst.n) throw std::invalid_argument("mc_loo_gradient: l out of range");
    if (!inst.truth_matrix)
        throw std::invalid_argument("mc_loo_gradient: needs truth_matrix");
    const Eigen::Index r = X.cols();
    RowMat G = RowMat::Zero(inst.n, r);
    for (Eigen::Index j = 0; j < inst.n; ++j) {
        if (j == l) continue;
        for (Eigen::Index k : inst.mask_rows[j]) {
            if (k == l) continue;
            const double resid = X.row(j).dot(X.row(k)) - inst.observed(j, k);
            G.row(j) += resid * X.row(k);
        }
    }
    G /= inst.p;

    // P_l term: d = (X X^T - M*) e_l; row j != l gains d_j X_l, row l gains X^T d.
    const Mat& M = *inst.truth_matrix;
    Vec d = X * X.row(l).transpose() - M.col(l);
    for (Eigen::Index j = 0; j < inst.n; ++j) {
        if (j == l) continue;
        G.row(j) += d[j] * X.row(l);
    }
    G.row(l) += (X.transpose() * d).transpose();
    return G;
}

/// f^{(l)} itself, for finite-difference checks.
inline double mc_loo_loss(const MatrixCompletionInstance& inst, const RowMat& X,
                          Eigen::Index l) {
    if (!inst.truth_matrix) throw std::invalid_argument("mc_loo_loss: needs truth_matrix");
    double off = 0.0;
    for (Eigen::Index j = 0; j < inst.n; ++j) {
        if (j == l) continue;
        for (Eigen::Index k : inst.mask_rows[j]) {
            if (k == l) continue;
            off += sqr(X.row(j).dot(X.row(k)) - inst.observed(j, k));
        }
    }
    const Mat& M = *inst.truth_matrix;
    double line = 0.0;
    for (Eigen::Index j = 0; j < inst.n; ++j) {
        const double v = X.row(j).dot(X.row(l)) - M(j, l);
        line += (j == l) ? sqr(v) : 2.0 * sqr(v);  // row and column, diagonal once
    }
    return off / (4.0 * inst.p) + line / 4.0;
}

/// Rank-r eigendecomposition of M^{(l)} = P_{Omega^{-l}}(Y)/p + P_l(M*).
inline RowMat mc_loo_spectral_init(const MatrixCompletionInstance& inst, Eigen::Index l) {
    if (l < 0 || l >= inst.n)
        throw std::invalid_argument("mc_loo_spectral_init: l out of range");
    if (!inst.truth_matrix)
        throw std::invalid_argument("mc_loo_spectral_init: needs truth_matrix");
    Mat M0 = inst.observed / inst.p;
    M0.row(l) = inst.truth_matrix->row(l);
    M0.col(l) = inst.truth_matrix->col(l);
    const auto eig = top_eigs_sym(M0, inst.r);
    if (eig.values[inst.r - 1] <= 0.0)
        throw NumericFailure("mc_loo_spectral_init: nonpositive top-r eigenvalue");
    return RowMat(eig.vectors * eig.values.array().sqrt().matrix().asDiagonal());
}

inline McLooTrajectory mc_loo_run(const MatrixCompletionInstance& inst, const McConfig& cfg,
                                  Eigen::Index l) {
    McLooTrajectory traj;
    traj.l = l;
    RowMat X = mc_loo_spectral_init(inst, l);
    const Mat Xs = Mat(*inst.truth_factor);
    for (long t = 0; t <= cfg.max_iters; ++t) {
        if (!X.allFinite()) throw NumericFailure("mc_loo_run: non-finite iterate", t);
        if (t % cfg.record_every == 0 || t == cfg.max_iters) {
            traj.iters.push_back(t);
            traj.iterates.push_back(X);
            const auto pro = procrustes_align(Mat(X), Xs);
            traj.held_out_row_error.push_back(
                (Mat(X) * pro.rotation - Xs).row(l).norm());
        }
        if (t == cfg.max_iters) break;
        X -= cfg.eta * mc_loo_gradient(inst, X, l);
    }
    return traj;
}

// ----------------------------------------------------------------------------
// Blind deconvolution (drop sample l; loss is unnormalized)
// ----------------------------------------------------------------------------

inline std::pair<CVec, CVec> bd_loo_gradients(const BlindDeconvInstance& inst,
                                              const CVec& h, const CVec& x,
                                              Eigen::Index l) {
    if (l < 0 || l >= inst.m) throw std::invalid_argument("bd_loo_gradients: l out of range");
    auto f = detail::bd_forward(inst, h, x);
    f.r[l] = 0.0;
    CVec gh = inst.b_rows.adjoint() * f.r.cwiseProduct(f.u);
    CVec gx = inst.a_rows.adjoint() * f.r.conjugate().cwiseProduct(f.c);
    return {std::move(gh), std::move(gx)};
}

/// Leading singular triplet of M^{(l)} = sum_{j != l} y_j b_j a_j^H.
inline BdState bd_loo_spectral_init(const BlindDeconvInstance& inst, Eigen::Index l) {
    if (l < 0 || l >= inst.m)
        throw std::invalid_argument("bd_loo_spectral_init: l out of range");
    if (inst.m < 2)
        throw std::invalid_argument("bd_loo_spectral_init: dropping the only sample");
    CVec y = inst.measurements;
    y[l] = 0.0;
    const CMat M = inst.b_rows.adjoint() * (y.asDiagonal() * inst.a_rows);
    const auto t = top_singular_triplet(M);
    const double s = std::sqrt(std::max(t.sigma1, 0.0));
    return BdState{s * t.left, s * t.right};
}

inline BdLooTrajectory bd_loo_run(const BlindDeconvInstance& inst, const BdConfig& cfg,
                                  Eigen::Index l) {
    if (!inst.truth_h || !inst.truth_x)
        throw std::invalid_argument("bd_loo_run: needs truth");
    BdLooTrajectory traj;
    traj.l = l;
    BdState z = bd_loo_spectral_init(inst, l);
    const CVec al = inst.a_rows.row(l).adjoint();  // a_l
    for (long t = 0; t <= cfg.max_iters; ++t) {
        if (!z.h.allFinite() || !z.x.allFinite())
            throw NumericFailure("bd_loo_run: non-finite iterate", t);
        if (t % cfg.record_every == 0 || t == cfg.max_iters) {
            traj.iters.push_back(t);
            traj.iterates.push_back(z);
            const auto align = scalar_align(z.h, z.x, *inst.truth_h, *inst.truth_x);
            const CVec xt = align.alpha * z.x;
            traj.held_out_incoherence.push_back(std::abs(al.dot(xt - *inst.truth_x)));
            traj.aligned_truth_error.push_back((xt - *inst.truth_x).norm());
        }
        if (t == cfg.max_iters) break;
        const double hn2 = z.h.squaredNorm();
        const double xn2 = z.x.squaredNorm();
        if (hn2 < 1e-24 || xn2 < 1e-24)
            throw NumericFailure("bd_loo_run: vanishing block norm", t);
        const auto [gh, gx] = bd_loo_gradients(inst, z.h, z.x, l);
        z.h -= (cfg.eta / xn2) * gh;
        z.x -= (cfg.eta / hn2) * gx;
    }
    return traj;
}

// ----------------------------------------------------------------------------
// Proximity reports
// ----------------------------------------------------------------------------

namespace detail {

inline LooReport loo_aggregate(std::string problem, std::vector<long> iters,
                               std::vector<Eigen::Index> ls,
                               std::vector<std::vector<double>> gaps,
                               std::vector<std::vector<double>> held_out) {
    LooReport rep;
    rep.problem = std::move(problem);
    rep.iters = std::move(iters);
    rep.ls = std::move(ls);
    rep.gaps = std::move(gaps);
    rep.held_out = std::move(held_out);
    const size_t records = rep.iters.size();
    rep.max_gap.assign(records, 0.0);
    rep.argmax_l.assign(records, rep.ls.empty() ? 0 : rep.ls[0]);
    for (size_t t = 0; t < records; ++t) {
        double best = -1.0;
        for (size_t i = 0; i < rep.ls.size(); ++i) {
            if (rep.gaps[i][t] > best) {
                best = rep.gaps[i][t];
                rep.argmax_l[t] = rep.ls[i];
            }
        }
        rep.max_gap[t] = std::max(best, 0.0);
    }
    return rep;
}

inline size_t common_records(size_t a, size_t b) { return std::min(a, b); }

}  // namespace detail

/// Gap = ||sign * x^t - x^{t,(l)}||_2, with the true trajectory oriented
/// toward x* through its stored global sign.
inline LooReport loo_proximity_report(const PhaseRetrievalInstance&,
                                      const PrTrajectory& true_traj,
                                      const std::vector<PrLooTrajectory>& loo) {
    std::vector<Eigen::Index> ls;
    std::vector<std::vector<double>> gaps, held;
    size_t records = true_traj.iterates_kept.size();
    for (const auto& lt : loo) records = detail::common_records(records, lt.iterates.size());
    std::vector<long> iters;
    for (size_t t = 0; t < records; ++t) iters.push_back(true_traj.records[t].iter);
    for (const auto& lt : loo) {
        ls.push_back(lt.l);
        std::vector<double> g(records), h(records);
        for (size_t t = 0; t < records; ++t) {
            g[t] = (true_traj.sign * true_traj.iterates_kept[t] - lt.iterates[t]).norm();
            h[t] = lt.held_out_incoherence[t];
        }
        gaps.push_back(std::move(g));
        held.push_back(std::move(h));
    }
    return detail::loo_aggregate("pr", std::move(iters), std::move(ls), std::move(gaps),
                                 std::move(held));
}

/// Gap = min_R ||X^t H^t - X^{t,(l)} R||_F (Procrustes between the aligned
/// true iterate and the leave-one-out iterate).
inline LooReport loo_proximity_report(const MatrixCompletionInstance& inst,
                                      const McTrajectory& true_traj,
                                      const std::vector<McLooTrajectory>& loo) {
    if (!inst.truth_factor)
        throw std::invalid_argument("loo_proximity_report: needs truth_factor");
    const Mat Xs = Mat(*inst.truth_factor);
    std::vector<Eigen::Index> ls;
    std::vector<std::vector<double>> gaps, held;
    size_t records = true_traj.iterates_kept.size();
    for (const auto& lt : loo) records = detail::common_records(records, lt.iterates.size());
    std::vector<long> iters(true_traj.iters.begin(), true_traj.iters.begin() + records);
    std::vector<Mat> aligned_true(records);
    for (size_t t = 0; t < records; ++t) {
        const auto pro = procrustes_align(Mat(true_traj.iterates_kept[t]), Xs);
        aligned_true[t] = Mat(true_traj.iterates_kept[t]) * pro.rotation;
    }
    for (const auto& lt : loo) {
        ls.push_back(lt.l);
        std::vector<double> g(records), h(records);
        for (size_t t = 0; t < records; ++t) {
            const auto rot = procrustes_align(Mat(lt.iterates[t]), aligned_true[t]);
            g[t] = rot.residual;
            h[t] = lt.held_out_row_error[t];
        }
        gaps.push_back(std::move(g));
        held.push_back(std::move(h));
    }
    return detail::loo_aggregate("mc", std::move(iters), std::move(ls), std::move(gaps),
                                 std::move(held));
}

/// Gap = dist(z^{t,(l)}, z~^t) with z~^t the alignment-corrected true iterate.
inline LooReport loo_proximity_report(const BlindDeconvInstance&,
                                      const BdTrajectory& true_traj,
                                      const std::vector<BdLooTrajectory>& loo) {
    std::vector<Eigen::Index> ls;
    std::vector<std::vector<double>> gaps, held;
    size_t records = true_traj.iterates_kept.size();
    for (const auto& lt : loo) records = detail::common_records(records, lt.iterates.size());
    std::vector<long> iters;
    for (size_t t = 0; t < records; ++t) iters.push_back(true_traj.records[t].iter);
    std::vector<CVec> ht(records), xt(records);
    for (size_t t = 0; t < records; ++t) {
        const Complex alpha = true_traj.records[t].alpha;
        ht[t] = true_traj.iterates_kept[t].h / std::conj(alpha);
        xt[t] = alpha * true_traj.iterates_kept[t].x;
    }
    for (const auto& lt : loo) {
        ls.push_back(lt.l);
        std::vector<double> g(records), h(records);
        for (size_t t = 0; t < records; ++t) {
            g[t] = bd_dist(lt.iterates[t].h, lt.iterates[t].x, ht[t], xt[t]);
            h[t] = lt.held_out_incoherence[t];
        }
        gaps.push_back(std::move(g));
        held.push_back(std::move(h));
    }
    return detail::loo_aggregate("bd", std::move(iters), std::move(ls), std::move(gaps),
                                 std::move(held));
}

}  // namespace ncvx
