#pragma once

#include <cmath>
#include <vector>

#include "ncvx/ensembles.hpp"
#include "ncvx/numlin.hpp"

namespace ncvx {

// ============================================================================
// Wirtinger flow for phase retrieval:
//   f(x) = (1/4m) sum_j [(a_j^T x)^2 - y_j]^2
// minimized by plain gradient descent from a spectral initialization.
// ============================================================================

struct PrConfig {
    double eta = 0.1;
    long max_iters = 200;
    double tol_rel = 0.0;  // stop once dist(x, x*)/||x*|| <= tol_rel (truth known)
    long record_every = 1;
    enum class StepRule { constant, log_scaled } step_rule = StepRule::constant;
    double c1 = 0.3;  // log-scaled rule: eta = c1 / (log n * ||x0||^2)
};

struct PrRecord {
    long iter = 0;
    double dist = std::numeric_limits<double>::quiet_NaN();
    double loss = 0.0;
    double incoherence_raw = std::numeric_limits<double>::quiet_NaN();
    double incoherence_diff = std::numeric_limits<double>::quiet_NaN();
};

struct PrTrajectory {
    std::vector<PrRecord> records;
    std::vector<Vec> iterates_kept;  // x^t at the recorded iterations
    // Global sign orienting the run toward x*: the sign bringing the FINAL
    // iterate closest to the truth (the phase is unidentifiable, and a far
    // initialization can settle in either basin). Truth-referencing
    // diagnostics use sign * x^t. +1 when no truth is attached.
    double sign = 1.0;
    long iterations_run = 0;
    bool reached_tol = false;
};

/// dist(x, x*) = min(||x - x*||, ||x + x*||), the l2 error modulo global sign.
inline double pr_dist(const Vec& x, const Vec& xstar) {
    return std::min((x - xstar).norm(), (x + xstar).norm());
}

inline double pr_loss(const PhaseRetrievalInstance& inst, const Vec& x) {
    if (x.size() != inst.n) throw std::invalid_argument("pr_loss: dimension mismatch");
    const Vec ax = inst.designs * x;
    return (ax.array().square() - inst.measurements.array()).square().sum() /
           (4.0 * inst.m);
}

/// (1/m) sum_j [(a_j^T x)^2 - y_j] (a_j^T x) a_j
inline Vec pr_gradient(const PhaseRetrievalInstance& inst, const Vec& x) {
    if (x.size() != inst.n) throw std::invalid_argument("pr_gradient: dimension mismatch");
    const Vec ax = inst.designs * x;
    const Vec w = (ax.array().square() - inst.measurements.array()) * ax.array();
    return inst.designs.transpose() * w / static_cast<double>(inst.m);
}

/// v^T Hess f(x) v with Hess f(x) = (1/m) sum_j [3 (a_j^T x)^2 - y_j] a_j a_j^T,
/// evaluated without forming the n x n matrix.
inline double pr_hessian_quadform(const PhaseRetrievalInstance& inst, const Vec& x,
                                  const Vec& v) {
    if (x.size() != inst.n || v.size() != inst.n)
        throw std::invalid_argument("pr_hessian_quadform: dimension mismatch");
    const Vec ax = inst.designs * x;
    const Vec av = inst.designs * v;
    return ((3.0 * ax.array().square() - inst.measurements.array()) * av.array().square())
               .sum() /
           static_cast<double>(inst.m);
}

/// Batched quadform: column c of the result is v_c^T Hess f(x) v_c.
inline Vec pr_hessian_quadform_batch(const PhaseRetrievalInstance& inst, const Vec& x,
                                     const Mat& V) {
    const Vec ax = inst.designs * x;
    const Vec w = 3.0 * ax.array().square() - inst.measurements.array();
    const Mat AV = inst.designs * V;
    return (AV.array().square().colwise() * w.array()).colwise().sum() /
           static_cast<double>(inst.m);
}

/// Data matrix of the spectral method, Y = (1/m) sum_j y_j a_j a_j^T.
inline Mat pr_data_matrix(const PhaseRetrievalInstance& inst) {
    return inst.designs.transpose() * (inst.measurements.asDiagonal() * inst.designs) /
           static_cast<double>(inst.m);
}

/// x0 = sqrt(lambda_1(Y)/3) * (leading eigenvector of Y), with the eigenvector
/// sign fixed by the top_eigs_sym convention.
inline Vec pr_spectral_init(const PhaseRetrievalInstance& inst) {
    const auto eig = top_eigs_sym(pr_data_matrix(inst), 1);
    return std::sqrt(std::max(eig.values[0], 0.0) / 3.0) * eig.vectors.col(0);
}

namespace detail {

inline double pr_log_scale(Eigen::Index n) {
    return std::sqrt(std::log(static_cast<double>(std::max<Eigen::Index>(n, 2))));
}

}  // namespace detail

/// max_j |a_j^T x| / (sqrt(log n) ||x*||); sign-free in x.
inline double pr_incoherence_raw(const PhaseRetrievalInstance& inst, const Vec& x) {
    const double xs = inst.truth ? inst.truth->norm() : 1.0;
    return (inst.designs * x).cwiseAbs().maxCoeff() / (detail::pr_log_scale(inst.n) * xs);
}

/// max_j |a_j^T (x - x*)| / (sqrt(log n) ||x*||) for the sign-oriented iterate.
inline double pr_incoherence_diff(const PhaseRetrievalInstance& inst, const Vec& x) {
    if (!inst.truth) throw std::invalid_argument("pr_incoherence_diff: needs truth");
    return (inst.designs * (x - *inst.truth)).cwiseAbs().maxCoeff() /
           (detail::pr_log_scale(inst.n) * inst.truth->norm());
}

/// Gradient descent with spectral initialization. Records diagnostics every
/// record_every iterations (plus the final iterate); stops early when the
/// truth-relative distance reaches tol_rel, or on a vanishing gradient when no
/// truth is attached.
inline PrTrajectory pr_run(const PhaseRetrievalInstance& inst, const PrConfig& cfg) {
    if (!(cfg.eta >= 0.0) || cfg.max_iters < 0 || cfg.record_every < 1)
        throw std::invalid_argument("pr_run: invalid config");
    Vec x = pr_spectral_init(inst);

    double eta = cfg.eta;
    if (cfg.step_rule == PrConfig::StepRule::log_scaled)
        eta = cfg.c1 / (std::log(static_cast<double>(std::max<Eigen::Index>(inst.n, 2))) *
                        std::max(x.squaredNorm(), 1e-12));

    PrTrajectory traj;
    const double xstar_norm = inst.truth ? inst.truth->norm() : 1.0;

    double last_finite_dist = std::numeric_limits<double>::quiet_NaN();
    auto record = [&](long t) {
        PrRecord rec;
        rec.iter = t;
        rec.loss = pr_loss(inst, x);
        rec.incoherence_raw = pr_incoherence_raw(inst, x);
        if (inst.truth) {
            rec.dist = pr_dist(x, *inst.truth);
            last_finite_dist = rec.dist;
        }
        traj.records.push_back(rec);
        traj.iterates_kept.push_back(x);
        return rec;
    };

    for (long t = 0; t <= cfg.max_iters; ++t) {
        if (!x.allFinite())
            throw NumericFailure(
                "pr_run: non-finite iterate (last finite dist " +
                    std::to_string(last_finite_dist) + ")",
                t);
        const bool at_record = (t % cfg.record_every == 0) || t == cfg.max_iters;
        if (at_record) {
            const PrRecord rec = record(t);
            traj.iterations_run = t;
            if (inst.truth && cfg.tol_rel > 0.0 && rec.dist <= cfg.tol_rel * xstar_norm) {
                traj.reached_tol = true;
                break;
            }
            if (!inst.truth && pr_gradient(inst, x).norm() <= 1e-10) {
                traj.reached_tol = true;
                break;
            }
        }
        if (t == cfg.max_iters) break;
        x -= eta * pr_gradient(inst, x);
    }

    // Orient toward the terminal basin, then fill the sign-dependent measure.
    if (inst.truth && !traj.iterates_kept.empty()) {
        const Vec& last = traj.iterates_kept.back();
        traj.sign = (last - *inst.truth).norm() <= (last + *inst.truth).norm() ? 1.0 : -1.0;
        for (size_t i = 0; i < traj.records.size(); ++i)
            traj.records[i].incoherence_diff =
                pr_incoherence_diff(inst, Vec(traj.sign * traj.iterates_kept[i]));
    }
    return traj;
}

}  // namespace ncvx
