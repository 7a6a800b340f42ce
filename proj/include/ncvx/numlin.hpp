#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "ncvx/common.hpp"

namespace ncvx {

// ============================================================================
// Symmetric eigendecomposition (top r)
// ============================================================================

/// Top-r eigenpairs, values descending by algebraic value, columns orthonormal.
/// Sign convention: in each eigenvector the entry of largest magnitude is
/// positive, ties broken by lowest index, so repeated runs are bit-identical.
struct EigResult {
    Vec values;   // r, descending
    Mat vectors;  // n x r
};

namespace detail {

inline void fix_sign(Eigen::Ref<Vec> v) {
    Eigen::Index best = 0;
    double best_abs = std::abs(v[0]);
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > best_abs) {
            best_abs = std::abs(v[i]);
            best = i;
        }
    }
    if (v[best] < 0.0) v = -v;
}

}  // namespace detail

/// Dense symmetric solve (reproducibility over speed at the sizes used here;
/// n <= a few thousand).
inline EigResult top_eigs_sym(const Mat& M, Eigen::Index r) {
    if (M.rows() != M.cols())
        throw std::invalid_argument("top_eigs_sym: matrix must be square");
    if (r < 1 || r > M.rows())
        throw std::invalid_argument("top_eigs_sym: need 1 <= r <= n");
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if (((M - M.transpose()).cwiseAbs().maxCoeff()) > 1e-10 * scale)
        throw std::invalid_argument("top_eigs_sym: matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<Mat> solver(M);
    if (solver.info() != Eigen::Success)
        throw NumericFailure("top_eigs_sym: eigensolver did not converge");

    const Eigen::Index n = M.rows();
    EigResult out;
    out.values.resize(r);
    out.vectors.resize(n, r);
    for (Eigen::Index i = 0; i < r; ++i) {
        out.values[i] = solver.eigenvalues()[n - 1 - i];  // ascending -> descending
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
        detail::fix_sign(out.vectors.col(i));
    }
    return out;
}

// ============================================================================
// Leading singular triplet
// ============================================================================

/// Phase convention: the largest-magnitude entry of `left` is made positive
/// real (the compensating phase goes onto `right`, leaving sigma1*left*right^H
/// unchanged). `converged` is false only for the all-zero input, where the
/// vectors are an arbitrary-but-deterministic pair (e_1, e_1).
struct SvdTriple {
    double sigma1 = 0.0;
    CVec left;
    CVec right;
    bool converged = true;
};

inline SvdTriple top_singular_triplet(const CMat& M) {
    if (!M.allFinite())
        throw std::invalid_argument("top_singular_triplet: non-finite entries");
    SvdTriple out;
    if (M.cwiseAbs().maxCoeff() == 0.0) {
        out.sigma1 = 0.0;
        out.left = CVec::Zero(M.rows());
        out.right = CVec::Zero(M.cols());
        out.left[0] = 1.0;
        out.right[0] = 1.0;
        out.converged = false;
        return out;
    }
    Eigen::JacobiSVD<CMat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.sigma1 = svd.singularValues()[0];
    out.left = svd.matrixU().col(0);
    out.right = svd.matrixV().col(0);

    Eigen::Index best = 0;
    double best_abs = std::abs(out.left[0]);
    for (Eigen::Index i = 1; i < out.left.size(); ++i) {
        if (std::abs(out.left[i]) > best_abs) {
            best_abs = std::abs(out.left[i]);
            best = i;
        }
    }
    const Complex pivot = out.left[best];
    if (std::abs(pivot) > 0.0) {
        const Complex phase = pivot / std::abs(pivot);
        out.left /= phase;
        out.right /= phase;  // same phase on both keeps left*right^H invariant
    }
    return out;
}

// ============================================================================
// Orthogonal Procrustes alignment
// ============================================================================

/// Minimizer of ||X R - X*||_F over orthonormal R, i.e. R = sgn(X^T X*) from
/// the SVD U Sigma V^T of X^T X*. The optimality certificate is that
/// R^T (X^T X*) is symmetric PSD; rank-deficient X^T X* still yields U V^T but
/// sets `degenerate` (the minimizer is then non-unique).
struct ProcrustesResult {
    Mat rotation;  // r x r orthonormal
    double residual = 0.0;
    bool degenerate = false;
};

inline ProcrustesResult procrustes_align(const Mat& X, const Mat& Xstar) {
    if (X.rows() != Xstar.rows() || X.cols() != Xstar.cols())
        throw std::invalid_argument("procrustes_align: shape mismatch");
    if (X.cols() < 1) throw std::invalid_argument("procrustes_align: need r >= 1");
    const Mat C = X.transpose() * Xstar;
    Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
    ProcrustesResult out;
    out.rotation = svd.matrixU() * svd.matrixV().transpose();
    out.residual = (X * out.rotation - Xstar).norm();
    const auto& sv = svd.singularValues();
    out.degenerate = sv[sv.size() - 1] <= 1e-12 * std::max(sv[0], 1e-300);
    return out;
}

// ============================================================================
// Complex scalar alignment for blind deconvolution
// ============================================================================

/// g(alpha) = ||h / conj(alpha) - h*||^2 + ||alpha x - x*||^2, the objective
/// whose minimizer is the alignment parameter.
inline double alignment_objective(Complex alpha, const CVec& h, const CVec& x,
                                  const CVec& hstar, const CVec& xstar) {
    const Complex ia = 1.0 / std::conj(alpha);
    return (ia * h - hstar).squaredNorm() + (alpha * x - xstar).squaredNorm();
}

/// Wirtinger derivative dg/d(conj alpha); the full Wirtinger gradient is the
/// conjugate pair [w; conj(w)].
inline Complex alignment_wirtinger_gradient(Complex alpha, const CVec& h, const CVec& x,
                                            const CVec& hstar, const CVec& xstar) {
    const Complex ca = std::conj(alpha);
    const Complex xhx = x.dot(xstar);        // x^H x*
    const Complex hsh = hstar.dot(h);        // h*^H h
    const double hn2 = h.squaredNorm();
    const double xn2 = x.squaredNorm();
    return alpha * xn2 - xhx - hn2 / (alpha * ca * ca) + hsh / (ca * ca);
}

/// Wirtinger Hessian entries: `a` = d2g/(d alpha d conj alpha) (real diagonal),
/// `b` = d2g/d(conj alpha)^2 (off-diagonal); the Hessian is [[a, b], [conj b, a]].
struct AlignmentHessian {
    double a = 0.0;
    Complex b;
};

inline AlignmentHessian alignment_wirtinger_hessian(Complex alpha, const CVec& h,
                                                    const CVec& x, const CVec& hstar,
                                                    const CVec& /*xstar: enters g only
                                                    through constants*/) {
    const Complex ca = std::conj(alpha);
    const double hn2 = h.squaredNorm();
    const double xn2 = x.squaredNorm();
    AlignmentHessian H;
    H.a = xn2 + hn2 / std::pow(std::abs(alpha), 4);
    H.b = 2.0 * hn2 / (alpha * ca * ca * ca) - 2.0 * hstar.dot(h) / (ca * ca * ca);
    return H;
}

/// [u^H v^H] Hess [u; v] for the 2x2 Wirtinger Hessian above.
inline double alignment_hessian_quadform(const AlignmentHessian& H, Complex u, Complex v) {
    return H.a * (std::norm(u) + std::norm(v)) +
           2.0 * std::real(H.b * std::conj(u) * v);
}

struct AlignmentSolution {
    Complex alpha{1.0, 0.0};
    double objective = 0.0;
    bool converged = false;
    enum class Method { newton, grid_fallback } method = Method::newton;
};

namespace detail {

/// Damped Newton on the real coordinates (Re alpha, Im alpha) of g. Returns
/// true if the Wirtinger gradient norm dropped below the stationarity tol.
inline bool align_newton(Complex& alpha, double& g, const CVec& h, const CVec& x,
                         const CVec& hstar, const CVec& xstar) {
    constexpr int kMaxIters = 100;
    constexpr int kMaxHalvings = 50;
    constexpr double kAlphaFloor = 1e-6;  // g -> inf as alpha -> 0, never binding near solutions
    for (int it = 0; it < kMaxIters; ++it) {
        const Complex w = alignment_wirtinger_gradient(alpha, h, x, hstar, xstar);
        if (std::sqrt(2.0) * std::abs(w) <= 1e-8 * std::max(1.0, std::abs(g)))
            return true;
        const AlignmentHessian H = alignment_wirtinger_hessian(alpha, h, x, hstar, xstar);
        // Real gradient/Hessian of g(u, v) with alpha = u + iv:
        //   grad = 2 (Re w, Im w),
        //   hess = [[2a + 2Re b, 2Im b], [2Im b, 2a - 2Re b]].
        const double gu = 2.0 * w.real();
        const double gv = 2.0 * w.imag();
        const double h11 = 2.0 * H.a + 2.0 * H.b.real();
        const double h22 = 2.0 * H.a - 2.0 * H.b.real();
        const double h12 = 2.0 * H.b.imag();
        const double det = h11 * h22 - h12 * h12;
        double du, dv;
        if (std::abs(det) > 1e-14 * (std::abs(h11) + std::abs(h22) + 1.0) && h11 + h22 > 0.0) {
            du = -(h22 * gu - h12 * gv) / det;
            dv = -(h11 * gv - h12 * gu) / det;
        } else {
            du = -gu;  // indefinite or singular Hessian: fall back to steepest descent
            dv = -gv;
        }
        double step = 1.0;
        bool decreased = false;
        for (int k = 0; k < kMaxHalvings; ++k, step *= 0.5) {
            Complex cand = alpha + step * Complex(du, dv);
            if (std::abs(cand) < kAlphaFloor) continue;
            const double gc = alignment_objective(cand, h, x, hstar, xstar);
            bool accept = gc < g;
            if (!accept && gc <= g + 1e-14 * std::max(1.0, std::abs(g))) {
                // Near the optimum the per-step decrease of g falls below fp
                // resolution; accept steps that still shrink the gradient.
                const Complex wc = alignment_wirtinger_gradient(cand, h, x, hstar, xstar);
                accept = std::abs(wc) < 0.7 * std::abs(w);
            }
            if (accept) {
                alpha = cand;
                g = std::min(g, gc);
                decreased = true;
                break;
            }
        }
        if (!decreased) {
            const Complex w2 = alignment_wirtinger_gradient(alpha, h, x, hstar, xstar);
            return std::sqrt(2.0) * std::abs(w2) <= 1e-8 * std::max(1.0, std::abs(g));
        }
    }
    const Complex w = alignment_wirtinger_gradient(alpha, h, x, hstar, xstar);
    return std::sqrt(2.0) * std::abs(w) <= 1e-8 * std::max(1.0, std::abs(g));
}

}  // namespace detail

/// Minimizer of g over nonzero complex alpha. Newton from alpha = 1 with step
/// halving; if that stalls, a log-polar grid over |alpha| in [1/8, 8] reseeds
/// a second Newton run. The returned objective never exceeds g(1).
inline AlignmentSolution scalar_align(const CVec& h, const CVec& x, const CVec& hstar,
                                      const CVec& xstar) {
    if (h.norm() == 0.0 || x.norm() == 0.0)
        throw std::invalid_argument("scalar_align: h and x must be nonzero");
    AlignmentSolution sol;
    sol.alpha = Complex(1.0, 0.0);
    sol.objective = alignment_objective(sol.alpha, h, x, hstar, xstar);
    sol.converged = detail::align_newton(sol.alpha, sol.objective, h, x, hstar, xstar);
    if (sol.converged) return sol;

    sol.method = AlignmentSolution::Method::grid_fallback;
    Complex best = sol.alpha;
    double best_g = sol.objective;
    constexpr int kRadii = 49;
    constexpr int kPhases = 64;
    for (int i = 0; i < kRadii; ++i) {
        const double radius =
            std::exp(std::log(0.125) + (std::log(8.0) - std::log(0.125)) * i / (kRadii - 1));
        for (int k = 0; k < kPhases; ++k) {
            const double phi = 2.0 * M_PI * k / kPhases;
            const Complex cand(radius * std::cos(phi), radius * std::sin(phi));
            const double gc = alignment_objective(cand, h, x, hstar, xstar);
            if (gc < best_g) {
                best_g = gc;
                best = cand;
            }
        }
    }
    sol.alpha = best;
    sol.objective = best_g;
    sol.converged = detail::align_newton(sol.alpha, sol.objective, h, x, hstar, xstar);
    return sol;
}

}  // namespace ncvx
