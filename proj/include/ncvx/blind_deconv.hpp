#pragma once

#include <cmath>
#include <vector>

#include "ncvx/ensembles.hpp"
#include "ncvx/numlin.hpp"

namespace ncvx {

// ============================================================================
// Scaled Wirtinger gradient descent for blind deconvolution:
//   f(h, x) = sum_j |b_j^H h x^H a_j - y_j|^2
// with per-block step scaling eta/||x||^2 and eta/||h||^2.
// ============================================================================

struct BdState {
    CVec h;
    CVec x;
};

struct BdConfig {
    double eta = 0.5;
    long max_iters = 200;
    double tol_rel = 0.0;  // stop once rel_fro <= tol_rel
    long record_every = 1;
};

struct BdRecord {
    long iter = 0;
    double dist = std::numeric_limits<double>::quiet_NaN();
    double rel_fro = std::numeric_limits<double>::quiet_NaN();
    double inc_a = std::numeric_limits<double>::quiet_NaN();
    double inc_b = std::numeric_limits<double>::quiet_NaN();
    Complex alpha{1.0, 0.0};  // alignment parameter at this record
    double loss = 0.0;
};

struct BdTrajectory {
    std::vector<BdRecord> records;
    std::vector<BdState> iterates_kept;
    long iterations_run = 0;
    bool reached_tol = false;
};

// ----------------------------------------------------------------------------
// Loss and Wirtinger derivatives
// ----------------------------------------------------------------------------

namespace detail {

/// Per-sample scalars shared by loss/gradient/Hessian kernels:
/// c_j = b_j^H h, u_j = a_j^H x, prediction c_j conj(u_j), residual r_j.
struct BdForward {
    CVec c, u, r;
};

inline BdForward bd_forward(const BlindDeconvInstance& inst, const CVec& h, const CVec& x) {
    BdForward f;
    f.c = inst.b_rows * h;
    f.u = inst.a_rows * x;
    f.r = f.c.cwiseProduct(f.u.conjugate()) - inst.measurements;
    return f;
}

}  // namespace detail

inline double bd_loss(const BlindDeconvInstance& inst, const CVec& h, const CVec& x) {
    if (h.size() != inst.K || x.size() != inst.K)
        throw std::invalid_argument("bd_loss: dimension mismatch");
    return detail::bd_forward(inst, h, x).r.squaredNorm();
}

/// Wirtinger gradients:
///   grad_h = sum_j (b_j^H h x^H a_j - y_j) b_j a_j^H x,
///   grad_x = sum_j conj(b_j^H h x^H a_j - y_j) a_j b_j^H h.
inline std::pair<CVec, CVec> bd_gradients(const BlindDeconvInstance& inst, const CVec& h,
                                          const CVec& x) {
    if (h.size() != inst.K || x.size() != inst.K)
        throw std::invalid_argument("bd_gradients: dimension mismatch");
    const auto f = detail::bd_forward(inst, h, x);
    CVec gh = inst.b_rows.adjoint() * f.r.cwiseProduct(f.u);
    CVec gx = inst.a_rows.adjoint() * f.r.conjugate().cwiseProduct(f.c);
    return {std::move(gh), std::move(gx)};
}

/// v^H Hess f(z) u for conjugate-structured probes u = (du_h, du_x, conj...),
/// v likewise, evaluated sample by sample from the Wirtinger Hessian blocks
///   A = [[sum |a_j^H x|^2 b_j b_j^H, sum r_j b_j a_j^H],
///        [ ... ^H,                  sum |b_j^H h|^2 a_j a_j^H]],
///   B = [[0, sum b_j b_j^H h (a_j a_j^H x)^T], [ ..., 0]].
/// The value is real for such probes. ||u||^2 = 2(||du_h||^2 + ||du_x||^2).
inline double bd_hessian_bilinear(const BlindDeconvInstance& inst, const CVec& h,
                                  const CVec& x, const CVec& dv_h, const CVec& dv_x,
                                  const CVec& du_h, const CVec& du_x) {
    const auto f = detail::bd_forward(inst, h, x);
    const CVec Bv = inst.b_rows * dv_h;
    const CVec Bu = inst.b_rows * du_h;
    const CVec Av = inst.a_rows * dv_x;
    const CVec Au = inst.a_rows * du_x;
    double total = 0.0;
    for (Eigen::Index j = 0; j < inst.m; ++j) {
        const Complex bv = Bv[j], bu = Bu[j], av = Av[j], au = Au[j];
        const Complex c = f.c[j], r = f.r[j];
        const double u_abs2 = std::norm(f.u[j]);  // |a_j^H x|^2 = |x^H a_j|^2
        const Complex a_part = u_abs2 * std::conj(bv) * bu + r * std::conj(bv) * au +
                               std::conj(r) * std::conj(av) * bu +
                               std::norm(c) * std::conj(av) * au;
        // c_j conj(d_j) with d_j = x^H a_j = conj(u_j).
        const Complex b_part =
            c * f.u[j] * (std::conj(bv) * std::conj(au) + std::conj(av) * std::conj(bu));
        total += 2.0 * a_part.real() + 2.0 * b_part.real();
    }
    return total;
}

inline double bd_hessian_quadform(const BlindDeconvInstance& inst, const CVec& h,
                                  const CVec& x, const CVec& dh, const CVec& dx) {
    return bd_hessian_bilinear(inst, h, x, dh, dx, dh, dx);
}

// ----------------------------------------------------------------------------
// Distance, incoherence, spectral initialization
// ----------------------------------------------------------------------------

/// dist(z, z*) = sqrt(min_alpha g(alpha)) with the alignment solver supplying
/// the minimizer.
inline double bd_dist(const CVec& h, const CVec& x, const CVec& hstar, const CVec& xstar) {
    return std::sqrt(std::max(scalar_align(h, x, hstar, xstar).objective, 0.0));
}

/// mu = sqrt(m) max_j |b_j^H h*| / ||h*||, the smallest constant making the
/// incoherence bound tight.
inline double bd_incoherence_param(const BlindDeconvInstance& inst) {
    if (!inst.truth_h) throw std::invalid_argument("bd_incoherence_param: needs truth");
    return std::sqrt(static_cast<double>(inst.m)) *
           (inst.b_rows * *inst.truth_h).cwiseAbs().maxCoeff() / inst.truth_h->norm();
}

/// Leading singular triplet of M = sum_j y_j b_j a_j^H; both blocks scaled by
/// sqrt(sigma_1).
inline BdState bd_spectral_init(const BlindDeconvInstance& inst) {
    const CMat M = inst.b_rows.adjoint() * (inst.measurements.asDiagonal() * inst.a_rows);
    const auto t = top_singular_triplet(M);
    const double s = std::sqrt(std::max(t.sigma1, 0.0));
    return BdState{s * t.left, s * t.right};
}

/// ||h x^H - h* x*^H||_F via Gram identities, O(K).
inline double bd_rel_fro(const CVec& h, const CVec& x, const CVec& hstar,
                         const CVec& xstar) {
    const double num2 = h.squaredNorm() * x.squaredNorm() -
                        2.0 * std::real(h.dot(hstar) * xstar.dot(x)) +
                        hstar.squaredNorm() * xstar.squaredNorm();
    return std::sqrt(std::max(num2, 0.0)) / (hstar.norm() * xstar.norm());
}

/// Scaled gradient descent from the spectral initialization. The alignment
/// parameter (an analysis device, not part of the solver) is computed only at
/// recorded iterations.
inline BdTrajectory bd_run(const BlindDeconvInstance& inst, const BdConfig& cfg) {
    if (!(cfg.eta >= 0.0) || cfg.max_iters < 0 || cfg.record_every < 1)
        throw std::invalid_argument("bd_run: invalid config");
    BdState z = bd_spectral_init(inst);

    BdTrajectory traj;
    const bool has_truth = inst.truth_h.has_value() && inst.truth_x.has_value();
    CVec a_xstar, b_hstar;
    if (has_truth) {
        a_xstar = inst.a_rows * *inst.truth_x;  // a_l^H x*
    }

    auto record = [&](long t) {
        BdRecord rec;
        rec.iter = t;
        rec.loss = bd_loss(inst, z.h, z.x);
        if (has_truth) {
            const auto align = scalar_align(z.h, z.x, *inst.truth_h, *inst.truth_x);
            rec.alpha = align.alpha;
            rec.dist = std::sqrt(std::max(align.objective, 0.0));
            rec.rel_fro = bd_rel_fro(z.h, z.x, *inst.truth_h, *inst.truth_x);
            rec.inc_a = (rec.alpha * (inst.a_rows * z.x) - a_xstar).cwiseAbs().maxCoeff();
            rec.inc_b =
                ((inst.b_rows * z.h) / std::conj(rec.alpha)).cwiseAbs().maxCoeff();
        }
        traj.records.push_back(rec);
        traj.iterates_kept.push_back(z);
        return rec;
    };

    for (long t = 0; t <= cfg.max_iters; ++t) {
        if (!z.h.allFinite() || !z.x.allFinite())
            throw NumericFailure("bd_run: non-finite iterate", t);
        const bool at_record = (t % cfg.record_every == 0) || t == cfg.max_iters;
        if (at_record) {
            const BdRecord rec = record(t);
            traj.iterations_run = t;
            if (has_truth && cfg.tol_rel > 0.0 && rec.rel_fro <= cfg.tol_rel) {
                traj.reached_tol = true;
                break;
            }
        }
        if (t == cfg.max_iters) break;

        const double hn2 = z.h.squaredNorm();
        const double xn2 = z.x.squaredNorm();
        if (hn2 < 1e-24 || xn2 < 1e-24)
            throw NumericFailure("bd_run: vanishing block norm", t);
        const auto [gh, gx] = bd_gradients(inst, z.h, z.x);
        z.h -= (cfg.eta / xn2) * gh;
        z.x -= (cfg.eta / hn2) * gx;
        traj.iterations_run = t + 1;
    }
    return traj;
}

}  // namespace ncvx
