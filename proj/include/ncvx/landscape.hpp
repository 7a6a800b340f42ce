#pragma once

#include <cmath>

#include "ncvx/blind_deconv.hpp"
#include "ncvx/matrix_completion.hpp"
#include "ncvx/phase_retrieval.hpp"

namespace ncvx {

// ============================================================================
// Empirical restricted strong convexity / smoothness probes. Each suite
// samples points inside the region of incoherence and contraction and checks
// the Hessian quadratic form against slacked versions of the theory bounds
// (the underlying guarantees leave their constants unspecified, so the slack
// is part of the check).
// ============================================================================

struct LandscapeResult {
    int probes = 0;
    int lower_failures = 0;
    int upper_failures = 0;
    double min_lower = std::numeric_limits<double>::infinity();
    double max_upper = -std::numeric_limits<double>::infinity();
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    bool pass() const { return probes > 0 && lower_failures == 0 && upper_failures == 0; }
};

/// Phase retrieval: n = 100, m = round(10 n log n). At 50 points within 0.1 of
/// the truth (and incoherent by construction), the quadform over 200 random
/// unit directions stays in [0.25, 50 log n].
inline LandscapeResult landscape_pr(RngSeed seed) {
    const Eigen::Index n = 100;
    const Eigen::Index m =
        static_cast<Eigen::Index>(std::lround(10.0 * n * std::log(double(n))));
    const auto inst = gen_phase_retrieval(n, m, seed.derived(1));
    Rng rng(seed.derived(2));

    LandscapeResult res;
    res.lower_bound = 0.25;
    res.upper_bound = 50.0 * std::log(double(n));
    const double max_incoherence = 5.0 * std::sqrt(std::log(double(n)));

    for (int point = 0; point < 50; ++point) {
        Vec x;
        do {
            const Vec dir = rng.unit_sphere(n);
            x = *inst.truth + (0.1 * rng.uniform01()) * dir;
        } while ((inst.designs * (x - *inst.truth)).cwiseAbs().maxCoeff() >
                 max_incoherence);

        Mat V(n, 200);
        for (int k = 0; k < 200; ++k) V.col(k) = rng.unit_sphere(n);
        const Vec quad = pr_hessian_quadform_batch(inst, x, V);
        for (int k = 0; k < 200; ++k) {
            ++res.probes;
            res.min_lower = std::min(res.min_lower, quad[k]);
            res.max_upper = std::max(res.max_upper, quad[k]);
            if (quad[k] < res.lower_bound) ++res.lower_failures;
            if (quad[k] > res.upper_bound) ++res.upper_failures;
        }
    }
    return res;
}

/// Matrix completion: n = 300, r = 3, p = 0.3, unit spectrum. Directions
/// V = Y H_Y - Z built from pre-aligned pairs near X*; the quadform must beat
/// 0.25 sigma_min ||V||_F^2 and a power-iteration estimate of the clean
/// Hessian norm must stay below 3 sigma_max.
inline LandscapeResult landscape_mc(RngSeed seed) {
    const Eigen::Index n = 300, r = 3;
    const double p = 0.3;
    const auto inst = gen_matrix_completion(n, r, p, 0.0, seed.derived(1));
    Rng rng(seed.derived(2));
    const RowMat& Xs = *inst.truth_factor;
    const double row_cap = 0.05 * Xs.rowwise().norm().maxCoeff();

    LandscapeResult res;
    res.lower_bound = 0.25 * inst.sigma_min();
    res.upper_bound = 3.0 * inst.sigma_max();

    for (int probe = 0; probe < 20; ++probe) {
        // X inside the l_{2,inf} incoherence ball around X*.
        RowMat X = Xs;
        for (Eigen::Index j = 0; j < n; ++j) {
            Vec d = rng.gaussian_vector(r);
            X.row(j) += (row_cap * rng.uniform01()) * d.transpose() / d.norm();
        }
        // Pre-aligned pair (Y, Z) close to X* in Frobenius/spectral norm.
        RowMat Y = Xs, Z = Xs;
        for (Eigen::Index j = 0; j < n; ++j) {
            Y.row(j) += (0.05 / std::sqrt(double(n))) * rng.gaussian_vector(r).transpose();
            Z.row(j) += (0.05 / std::sqrt(double(n))) * rng.gaussian_vector(r).transpose();
        }
        const auto pro = procrustes_align(Mat(Y), Mat(Z));
        const RowMat V = RowMat(Mat(Y) * pro.rotation - Mat(Z));

        ++res.probes;
        const double quad = mc_clean_hessian_quadform(inst, X, V);
        const double lower = quad / std::max(V.squaredNorm(), 1e-300);
        res.min_lower = std::min(res.min_lower, lower);
        if (lower < res.lower_bound) ++res.lower_failures;

        // Power iteration on the clean Hessian operator.
        RowMat W = RowMat(n, r);
        for (Eigen::Index j = 0; j < n; ++j)
            W.row(j) = rng.gaussian_vector(r).transpose();
        W /= W.norm();
        double est = 0.0;
        for (int it = 0; it < 40; ++it) {
            RowMat HW = mc_clean_hessian_apply(inst, X, W);
            est = HW.norm();
            if (est < 1e-300) break;
            W = HW / est;
        }
        res.max_upper = std::max(res.max_upper, est);
        if (est > res.upper_bound) ++res.upper_failures;
    }
    return res;
}

/// Blind deconvolution: K = 50, m = 500, delta = 0.01/log^2 m. For aligned
/// pairs within delta of the truth and diagonal scalings D with
/// |gamma - 1| <= delta, the symmetrized quadform u^H (D H + H D) u must beat
/// 0.2 ||u||^2, and |u^H H u| must stay below 3.5 ||u||^2.
inline LandscapeResult landscape_bd(RngSeed seed) {
    const Eigen::Index K = 50, m = 500;
    const auto inst = gen_blind_deconv(K, m, seed.derived(1));
    Rng rng(seed.derived(2));
    const double delta = 0.01 / sqr(std::log(double(m)));
    const CVec& hstar = *inst.truth_h;
    const CVec& xstar = *inst.truth_x;

    LandscapeResult res;
    res.lower_bound = 0.2;
    res.upper_bound = 3.5;

    auto perturb = [&](const CVec& base, double radius) {
        CVec d = rng.complex_gaussian_vector(K);
        return CVec(base + (radius * rng.uniform01()) * d / d.norm());
    };

    for (int probe = 0; probe < 50; ++probe) {
        // The point z itself, inside the RIC.
        const CVec h = perturb(hstar, delta);
        const CVec x = perturb(xstar, delta);

        // An aligned pair within delta of the truth.
        CVec h1, x1;
        CVec h2 = perturb(hstar, delta / 3.0);
        CVec x2 = perturb(xstar, delta / 3.0);
        for (int attempt = 0; attempt < 100; ++attempt) {
            const CVec h1r = perturb(hstar, delta / 3.0);
            const CVec x1r = perturb(xstar, delta / 3.0);
            const auto al = scalar_align(h1r, x1r, h2, x2);
            h1 = h1r / std::conj(al.alpha);
            x1 = al.alpha * x1r;
            if ((h1 - hstar).norm() <= delta && (x1 - xstar).norm() <= delta) break;
        }
        const CVec dh = h1 - h2;
        const CVec dx = x1 - x2;
        const double u_norm2 = 2.0 * (dh.squaredNorm() + dx.squaredNorm());
        if (u_norm2 < 1e-300) continue;

        const double g1 = 1.0 + delta * (2.0 * rng.uniform01() - 1.0);
        const double g2 = 1.0 + delta * (2.0 * rng.uniform01() - 1.0);

        ++res.probes;
        const double sym = 2.0 * bd_hessian_bilinear(inst, h, x, CVec(g1 * dh),
                                                     CVec(g2 * dx), dh, dx);
        const double lower = sym / u_norm2;
        res.min_lower = std::min(res.min_lower, lower);
        if (lower < res.lower_bound) ++res.lower_failures;

        const double quad = bd_hessian_quadform(inst, h, x, dh, dx);
        const double upper = std::abs(quad) / u_norm2;
        res.max_upper = std::max(res.max_upper, upper);
        if (upper > res.upper_bound) ++res.upper_failures;
    }
    return res;
}

}  // namespace ncvx
