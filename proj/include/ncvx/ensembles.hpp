#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "ncvx/common.hpp"
#include "ncvx/rng.hpp"

namespace ncvx {

// ============================================================================
// Problem instances
// ============================================================================

/// Quadratic measurements y_j = (a_j^T x*)^2 under i.i.d. standard Gaussian
/// designs. Rows of `designs` are the a_j^T. Instances are immutable after
/// construction and safe to share read-only across threads.
struct PhaseRetrievalInstance {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    Mat designs;       // m x n, row j = a_j^T
    Vec measurements;  // m, nonnegative
    std::optional<Vec> truth;  // unit-norm x* when generated synthetically
};

/// Symmetric Bernoulli-sampled observations Y = P_Omega(M* + E) of a PSD
/// rank-r matrix M* = X* X*^T. The mask covers both triangles (mirrored from
/// an upper-triangle draw, diagonal sampled once); `mask_rows[j]` lists the
/// observed columns of row j for fast masked kernels.
struct MatrixCompletionInstance {
    Eigen::Index n = 0;
    Eigen::Index r = 0;
    double p = 1.0;
    double noise_level = 0.0;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask;  // n x n, symmetric
    std::vector<std::vector<Eigen::Index>> mask_rows;
    Mat observed;  // n x n, zero off-mask
    std::optional<RowMat> truth_factor;  // X* = U* (Sigma*)^{1/2}
    std::optional<Mat> truth_matrix;     // M* = X* X*^T
    Vec spectrum;  // eigenvalues of M*, descending

    double sigma_max() const { return spectrum.size() ? spectrum.maxCoeff() : 0.0; }
    double sigma_min() const { return spectrum.size() ? spectrum.minCoeff() : 0.0; }
    double condition_number() const { return sigma_max() / sigma_min(); }
};

/// Bilinear measurements y_j = b_j^H h* x*^H a_j with complex Gaussian a_j and
/// b_j from a partial DFT. Row j of `b_rows` is b_j^H (the matrix B of the
/// model); row j of `a_rows` is a_j^H.
struct BlindDeconvInstance {
    Eigen::Index K = 0;
    Eigen::Index m = 0;
    CMat b_rows;  // m x K, row j = b_j^H
    CMat a_rows;  // m x K, row j = a_j^H
    CVec measurements;
    std::optional<CVec> truth_h;  // unit norm
    std::optional<CVec> truth_x;  // unit norm
};

// ============================================================================
// Deterministic designs
// ============================================================================

/// First K columns of the m x m unitary DFT matrix, so that B^H B = I_K and
/// every b_l = (1/sqrt(m)) (1, w^{l-1}, ..., w^{(K-1)(l-1)})^H with
/// w = exp(-i 2 pi / m). Row l of the result is b_l^H.
inline CMat partial_dft(Eigen::Index m, Eigen::Index K) {
    if (m < 1 || K < 1 || K > m)
        throw std::invalid_argument("partial_dft: need 1 <= K <= m");
    CMat B(m, K);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (Eigen::Index l = 0; l < m; ++l) {
        for (Eigen::Index k = 0; k < K; ++k) {
            // Reduce the exponent mod m before evaluating to keep the angle
            // small; l*k can reach ~2^24 where 2*pi*l*k/m loses ulps.
            const long long e = (static_cast<long long>(l) * k) % m;
            const double angle = -2.0 * M_PI * static_cast<double>(e) / static_cast<double>(m);
            B(l, k) = scale * Complex(std::cos(angle), std::sin(angle));
        }
    }
    return B;
}

// ============================================================================
// Seeded generators
// ============================================================================

/// x* uniform on the unit sphere, a_j i.i.d. N(0, I_n), y_j = (a_j^T x*)^2.
/// Draw order (fixed for bit-replay): x*, then designs row by row.
inline PhaseRetrievalInstance gen_phase_retrieval(Eigen::Index n, Eigen::Index m,
                                                  RngSeed seed) {
    if (n < 1 || m < 1)
        throw std::invalid_argument("gen_phase_retrieval: need n, m >= 1");
    Rng rng(seed);
    PhaseRetrievalInstance inst;
    inst.n = n;
    inst.m = m;
    Vec xstar = rng.unit_sphere(n);
    inst.designs.resize(m, n);
    for (Eigen::Index j = 0; j < m; ++j)
        inst.designs.row(j) = rng.gaussian_vector(n).transpose();
    inst.measurements = (inst.designs * xstar).array().square();
    inst.truth = std::move(xstar);
    return inst;
}

/// U* = thin-QR orthonormalization of an n x r Gaussian matrix,
/// M* = U* diag(spectrum) U*^T, mask Bernoulli(p) on the upper triangle
/// (diagonal included, sampled once) then mirrored, Gaussian N(0, sigma^2)
/// noise drawn only on the masked upper entries. Sub-streams: 0 = factor,
/// 1 = mask, 2 = noise.
inline MatrixCompletionInstance gen_matrix_completion(Eigen::Index n, Eigen::Index r,
                                                      double p, double sigma,
                                                      const Vec& spectrum, RngSeed seed) {
    if (n < 1 || r < 1 || r > n)
        throw std::invalid_argument("gen_matrix_completion: need 1 <= r <= n");
    if (!(p > 0.0) || p > 1.0)
        throw std::invalid_argument("gen_matrix_completion: need 0 < p <= 1");
    if (sigma < 0.0)
        throw std::invalid_argument("gen_matrix_completion: need sigma >= 0");
    if (spectrum.size() != r || (spectrum.array() <= 0.0).any())
        throw std::invalid_argument("gen_matrix_completion: spectrum must hold r positive values");

    MatrixCompletionInstance inst;
    inst.n = n;
    inst.r = r;
    inst.p = p;
    inst.noise_level = sigma;
    inst.spectrum = spectrum;

    Rng factor_rng(seed.derived(0));
    Mat G(n, r);
    for (Eigen::Index k = 0; k < r; ++k)
        G.col(k) = factor_rng.gaussian_vector(n);
    Mat U = Eigen::HouseholderQR<Mat>(G).householderQ() * Mat::Identity(n, r);

    Mat M = U * spectrum.asDiagonal() * U.transpose();
    inst.truth_matrix = M;
    inst.truth_factor = RowMat(U * spectrum.array().sqrt().matrix().asDiagonal());

    Rng mask_rng(seed.derived(1));
    inst.mask.setConstant(n, n, false);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = j; k < n; ++k)
            if (mask_rng.bernoulli(p)) {
                inst.mask(j, k) = true;
                inst.mask(k, j) = true;
            }

    inst.observed = Mat::Zero(n, n);
    Rng noise_rng(seed.derived(2));
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = j; k < n; ++k)
            if (inst.mask(j, k)) {
                double v = M(j, k);
                if (sigma > 0.0) v += sigma * noise_rng.gaussian();
                inst.observed(j, k) = v;
                inst.observed(k, j) = v;
            }

    inst.mask_rows.resize(n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
            if (inst.mask(j, k)) inst.mask_rows[j].push_back(k);

    return inst;
}

inline MatrixCompletionInstance gen_matrix_completion(Eigen::Index n, Eigen::Index r,
                                                      double p, double sigma, RngSeed seed) {
    return gen_matrix_completion(n, r, p, sigma, Vec::Ones(r), seed);
}

/// h*, x* uniform on complex unit spheres, a_j i.i.d. CN(0, I_K), B from
/// partial_dft. Draw order: h*, x*, then design rows.
inline BlindDeconvInstance gen_blind_deconv(Eigen::Index K, Eigen::Index m, RngSeed seed) {
    if (K < 1 || m < K)
        throw std::invalid_argument("gen_blind_deconv: need 1 <= K <= m");
    Rng rng(seed);
    BlindDeconvInstance inst;
    inst.K = K;
    inst.m = m;
    inst.b_rows = partial_dft(m, K);
    CVec hstar = rng.complex_unit_sphere(K);
    CVec xstar = rng.complex_unit_sphere(K);
    inst.a_rows.resize(m, K);
    for (Eigen::Index j = 0; j < m; ++j)
        inst.a_rows.row(j) = rng.complex_gaussian_vector(K).adjoint();
    // y_j = (b_j^H h*) (x*^H a_j); row products give b_j^H h* and a_j^H x*.
    inst.measurements =
        (inst.b_rows * hstar).cwiseProduct((inst.a_rows * xstar).conjugate());
    inst.truth_h = std::move(hstar);
    inst.truth_x = std::move(xstar);
    return inst;
}

}  // namespace ncvx
