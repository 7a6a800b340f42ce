#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ncvx/common.hpp"

namespace ncvx {

/// Identifies one reproducible random stream. Identical (master_seed,
/// stream_index) pairs replay bit-identically; distinct stream indices give
/// independent streams (used for per-trial seeding in parallel sweeps).
struct RngSeed {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;

    RngSeed derived(std::uint64_t sub) const {
        // SplitMix64 finalizer over the pair; collisions across (stream, sub)
        // pairs are as unlikely as 64-bit hash collisions.
        std::uint64_t z = stream_index + 0x9E3779B97F4A7C15ULL * (sub + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return RngSeed{master_seed, z};
    }
};

/// Seeded random source with fixed, engine-level-specified transforms so that
/// replay is bit-identical across platforms:
///   - engine: std::mt19937_64 seeded from seed_seq{master, stream} (the
///     standard pins both the engine output and the seed_seq algorithm);
///   - uniform01: top 53 bits of one engine draw, in [0, 1);
///   - gaussian: Box-Muller on (1 - u1] x u2, second value cached;
///   - complex gaussian: CN(0,1) = N(0,1/2) + i N(0,1/2).
/// std::normal_distribution is deliberately not used here (its algorithm is
/// implementation-defined).
class Rng {
public:
    explicit Rng(RngSeed seed) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(seed.master_seed),
            static_cast<std::uint32_t>(seed.master_seed >> 32),
            static_cast<std::uint32_t>(seed.stream_index),
            static_cast<std::uint32_t>(seed.stream_index >> 32)};
        engine_.seed(seq);
    }

    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - uniform01();  // in (0, 1], keeps log() finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    Complex complex_gaussian() {
        const double s = 1.0 / std::sqrt(2.0);
        const double re = gaussian();
        const double im = gaussian();
        return Complex(s * re, s * im);
    }

    Vec gaussian_vector(Eigen::Index n) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

    CVec complex_gaussian_vector(Eigen::Index n) {
        CVec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = complex_gaussian();
        return v;
    }

    Vec unit_sphere(Eigen::Index n) {
        Vec v = gaussian_vector(n);
        double nrm = v.norm();
        while (nrm < 1e-12) {  // astronomically rare; retry keeps the law exact
            v = gaussian_vector(n);
            nrm = v.norm();
        }
        return v / nrm;
    }

    CVec complex_unit_sphere(Eigen::Index n) {
        CVec v = complex_gaussian_vector(n);
        double nrm = v.norm();
        while (nrm < 1e-12) {
            v = complex_gaussian_vector(n);
            nrm = v.norm();
        }
        return v / nrm;
    }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace ncvx
