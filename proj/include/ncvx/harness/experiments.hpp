#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "ncvx/harness/config.hpp"
#include "ncvx/harness/csv.hpp"
#include "ncvx/harness/parallel.hpp"
#include "ncvx/landscape.hpp"
#include "ncvx/leave_one_out.hpp"

namespace ncvx::harness {

/// Sweep settings shared by all experiments. Desk-scale defaults reproduce the
/// figures at laptop sizes; full_scale switches to the publication sizes.
struct ExperimentConfig {
    std::string experiment = "convergence";
    std::string problem = "pr";  // pr | mc | bd
    std::vector<long> sizes;     // n for pr/mc, K for bd
    long r = 10;
    long m_factor = 10;  // m = m_factor * size for pr/bd
    double p = 0.1;
    std::vector<double> p_grid;
    std::vector<double> snr_db_grid;
    double eta = 0.0;  // 0: per-problem default
    long max_iters = 0;
    double tol_rel = 1e-5;
    long record_every = 1;
    long trials = 0;  // 0: per-experiment default
    long loo_count = 10;
    std::uint64_t master_seed = 0;
    int workers = 1;
    bool full_scale = false;
    std::string output_path;

    long trials_or(long fallback) const { return trials > 0 ? trials : fallback; }

    double eta_or_default() const {
        if (eta > 0.0) return eta;
        if (problem == "pr") return 0.1;
        if (problem == "mc") return 0.2;
        return 0.5;
    }
};

/// Per-trial bookkeeping for sweep experiments. Wall time is diagnostic only
/// and never serialized (CSV bytes must not depend on timing).
struct TrialResult {
    long trial = 0;
    RngSeed seed;
    bool success = false;
    long iterations = 0;
    double final_metric = std::numeric_limits<double>::quiet_NaN();
    double wall_time_s = 0.0;
};

namespace detail {

inline RngSeed task_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    return RngSeed{master, 0}.derived(a).derived(b);
}

inline double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// ============================================================================
// Convergence curves (error vs iteration)
// ============================================================================

struct ConvergenceResult {
    Csv csv{{"iter", "metric", "value", "problem", "size", "seed"}};
    bool any_numeric_failure = false;
};

inline ConvergenceResult exp_convergence(const ExperimentConfig& cfg) {
    std::vector<long> sizes = cfg.sizes;
    if (sizes.empty()) {
        if (cfg.problem == "mc")
            sizes = {cfg.full_scale ? 1000L : 300L};
        else
            sizes = cfg.full_scale ? std::vector<long>{20, 100, 200, 1000}
                                   : std::vector<long>{20, 100};
    }
    const long trials = cfg.trials_or(1);
    const long tasks = static_cast<long>(sizes.size()) * trials;
    std::vector<Csv> partial(tasks, Csv({}));
    std::vector<char> failed(tasks, 0);

    parallel_for(tasks, cfg.workers, [&](long task) {
        const long size_idx = task / trials;
        const long trial = task % trials;
        const long size = sizes[size_idx];
        const RngSeed seed = detail::task_seed(cfg.master_seed, size_idx, trial);
        Csv rows({});
        auto emit = [&](long iter, const std::string& metric, double value) {
            rows.add_row({std::to_string(iter), metric, fmt_double(value), cfg.problem,
                          std::to_string(size), std::to_string(trial)});
        };
        try {
            if (cfg.problem == "pr") {
                const auto inst = gen_phase_retrieval(size, cfg.m_factor * size, seed);
                PrConfig pc;
                pc.eta = cfg.eta_or_default();
                pc.max_iters = cfg.max_iters > 0 ? cfg.max_iters : 200;
                pc.tol_rel = cfg.tol_rel;
                pc.record_every = cfg.record_every;
                const auto traj = pr_run(inst, pc);
                for (const auto& rec : traj.records) {
                    emit(rec.iter, "dist_rel", rec.dist / inst.truth->norm());
                    emit(rec.iter, "loss", rec.loss);
                }
            } else if (cfg.problem == "mc") {
                const auto inst = gen_matrix_completion(size, cfg.r, cfg.p, 0.0, seed);
                McConfig mc;
                mc.eta = cfg.eta_or_default();
                mc.max_iters = cfg.max_iters > 0 ? cfg.max_iters : 500;
                mc.tol_rel = cfg.tol_rel;
                mc.record_every = std::max<long>(cfg.record_every, 5);
                const auto traj = mc_run(inst, mc);
                for (size_t i = 0; i < traj.iters.size(); ++i) {
                    emit(traj.iters[i], "err_fro", traj.metrics[i].err_fro);
                    emit(traj.iters[i], "err_op", traj.metrics[i].err_op);
                    emit(traj.iters[i], "err_2inf", traj.metrics[i].err_2inf);
                    emit(traj.iters[i], "err_entrywise", traj.metrics[i].err_entrywise);
                }
            } else {
                const auto inst = gen_blind_deconv(size, cfg.m_factor * size, seed);
                BdConfig bc;
                bc.eta = cfg.eta_or_default();
                bc.max_iters = cfg.max_iters > 0 ? cfg.max_iters : 200;
                bc.tol_rel = cfg.tol_rel;
                bc.record_every = cfg.record_every;
                const auto traj = bd_run(inst, bc);
                for (const auto& rec : traj.records) {
                    emit(rec.iter, "rel_fro", rec.rel_fro);
                    emit(rec.iter, "dist", rec.dist);
                }
            }
        } catch (const NumericFailure&) {
            failed[task] = 1;  // recorded, sweep continues
        }
        partial[task] = std::move(rows);
    });

    ConvergenceResult out;
    for (long task = 0; task < tasks; ++task) {
        out.csv.append(partial[task]);
        if (failed[task]) out.any_numeric_failure = true;
    }
    return out;
}

// ============================================================================
// Phase transition (success rate vs sampling rate, three algorithms)
// ============================================================================

struct PhaseTransitionResult {
    std::vector<double> p_grid;
    std::vector<std::string> algorithms{"vanilla", "projected", "regularized"};
    // success_rate[alg][p index]
    std::vector<std::vector<double>> success_rate;
    Csv csv{{"p", "algorithm", "success_rate", "trials", "n", "r"}};
};

/// First grid index whose success rate reaches 1/2 (the transition midpoint);
/// returns the grid size when the rate never gets there.
inline size_t transition_midpoint(const std::vector<double>& rates) {
    for (size_t i = 0; i < rates.size(); ++i)
        if (rates[i] >= 0.5) return i;
    return rates.size();
}

inline PhaseTransitionResult exp_phase_transition(const ExperimentConfig& cfg) {
    PhaseTransitionResult out;
    out.p_grid = cfg.p_grid;
    if (out.p_grid.empty())
        out.p_grid = ConfigFile::logspace(0.01, 0.1, cfg.full_scale ? 51 : 11);
    const long n = cfg.sizes.empty() ? (cfg.full_scale ? 1000 : 500) : cfg.sizes[0];
    const long r = cfg.r;
    const long trials = cfg.trials_or(cfg.full_scale ? 50 : 10);
    const long np = static_cast<long>(out.p_grid.size());

    // One task per (p, trial); all three algorithms share the instance.
    const long tasks = np * trials;
    std::vector<std::array<char, 3>> success(tasks, {0, 0, 0});

    parallel_for(tasks, cfg.workers, [&](long task) {
        const long p_idx = task / trials;
        const long trial = task % trials;
        const RngSeed seed = detail::task_seed(cfg.master_seed, p_idx, trial);
        MatrixCompletionInstance inst;
        try {
            inst = gen_matrix_completion(n, r, out.p_grid[p_idx], 0.0, seed);
        } catch (const std::exception&) {
            return;  // counts as failure for all three algorithms
        }
        for (int alg = 0; alg < 3; ++alg) {
            McConfig mc;
            mc.eta = 0.2;
            mc.max_iters = 10000;
            mc.tol_rel = 1e-5;
            mc.stop_rule = McConfig::StopRule::product_fro;
            mc.record_every = 10001;
            if (alg == 1) mc.baseline = McConfig::Baseline::projected;
            if (alg == 2) mc.baseline = McConfig::Baseline::regularized;
            try {
                success[task][alg] = mc_run(inst, mc).reached_tol ? 1 : 0;
            } catch (const NumericFailure&) {
                success[task][alg] = 0;  // init failure or divergence: unsuccessful trial
            }
        }
    });

    out.success_rate.assign(3, std::vector<double>(np, 0.0));
    for (long p_idx = 0; p_idx < np; ++p_idx)
        for (int alg = 0; alg < 3; ++alg) {
            long wins = 0;
            for (long trial = 0; trial < trials; ++trial)
                wins += success[p_idx * trials + trial][alg];
            out.success_rate[alg][p_idx] = static_cast<double>(wins) / trials;
        }

    for (long p_idx = 0; p_idx < np; ++p_idx)
        for (int alg = 0; alg < 3; ++alg)
            out.csv.add_row({fmt_double(out.p_grid[p_idx]), out.algorithms[alg],
                             fmt_double(out.success_rate[alg][p_idx]),
                             std::to_string(trials), std::to_string(n),
                             std::to_string(r)});
    return out;
}

// ============================================================================
// Incoherence measures along the trajectory (phase retrieval)
// ============================================================================

struct IncoherenceResult {
    Csv csv{{"n", "seed", "iter", "measure", "value"}};
    double max_diff_after_warmup = 0.0;  // max over recorded t >= 2
    bool any_numeric_failure = false;
};

inline IncoherenceResult exp_incoherence(const ExperimentConfig& cfg) {
    std::vector<long> sizes = cfg.sizes;
    if (sizes.empty())
        sizes = cfg.full_scale ? std::vector<long>{20, 100, 200, 1000}
                               : std::vector<long>{20, 100, 200};
    const long trials = cfg.trials_or(1);
    const long tasks = static_cast<long>(sizes.size()) * trials;
    std::vector<Csv> partial(tasks, Csv({}));
    std::vector<double> max_diff(tasks, 0.0);
    std::vector<char> failed(tasks, 0);

    parallel_for(tasks, cfg.workers, [&](long task) {
        const long size_idx = task / trials;
        const long trial = task % trials;
        const long size = sizes[size_idx];
        const RngSeed seed = detail::task_seed(cfg.master_seed, size_idx, trial);
        Csv rows({});
        try {
            const auto inst = gen_phase_retrieval(size, cfg.m_factor * size, seed);
            PrConfig pc;
            pc.eta = cfg.eta > 0.0 ? cfg.eta : 0.1;
            pc.max_iters = cfg.max_iters > 0 ? cfg.max_iters : 200;
            pc.tol_rel = 0.0;  // run the full horizon; the measures are the point
            pc.record_every = cfg.record_every;
            const auto traj = pr_run(inst, pc);
            for (const auto& rec : traj.records) {
                rows.add_row({std::to_string(size), std::to_string(trial),
                              std::to_string(rec.iter), "incoherence_raw",
                              fmt_double(rec.incoherence_raw)});
                rows.add_row({std::to_string(size), std::to_string(trial),
                              std::to_string(rec.iter), "incoherence_diff",
                              fmt_double(rec.incoherence_diff)});
                if (rec.iter >= 2)
                    max_diff[task] = std::max(max_diff[task], rec.incoherence_diff);
            }
        } catch (const NumericFailure&) {
            failed[task] = 1;
        }
        partial[task] = std::move(rows);
    });

    IncoherenceResult out;
    for (long task = 0; task < tasks; ++task) {
        out.csv.append(partial[task]);
        out.max_diff_after_warmup = std::max(out.max_diff_after_warmup, max_diff[task]);
        if (failed[task]) out.any_numeric_failure = true;
    }
    return out;
}

// ============================================================================
// Noise scaling (squared relative error vs SNR, both in dB)
// ============================================================================

struct NoiseScalingResult {
    std::vector<double> snr_db_nominal;
    std::vector<double> snr_db_realized;
    // metric order: err_fro, err_op, err_2inf, err_entrywise
    std::array<std::vector<double>, 4> sq_err_db;
    std::array<double, 4> slopes{};
    Csv csv{{"snr_db_nominal", "snr_db_realized", "sigma", "metric", "sq_err_db",
             "trials"}};
    static constexpr std::array<const char*, 4> kMetricNames{"err_fro", "err_op",
                                                             "err_2inf", "err_entrywise"};
};

/// Realized SNR of an instance: sum of M*^2 over the sampled set divided by
/// the total noise variance on it.
inline double realized_snr(const MatrixCompletionInstance& inst) {
    double signal = 0.0;
    long count = 0;
    const Mat& M = *inst.truth_matrix;
    for (Eigen::Index j = 0; j < inst.n; ++j)
        for (Eigen::Index k : inst.mask_rows[j]) {
            signal += sqr(M(j, k));
            ++count;
        }
    return signal / (count * sqr(inst.noise_level));
}

inline double least_squares_slope(const std::vector<double>& x,
                                  const std::vector<double>& y) {
    const size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline NoiseScalingResult exp_noise_scaling(const ExperimentConfig& cfg) {
    NoiseScalingResult out;
    out.snr_db_nominal = cfg.snr_db_grid;
    if (out.snr_db_nominal.empty()) out.snr_db_nominal = {20, 30, 40, 50, 55};
    const long n = cfg.sizes.empty() ? 500 : cfg.sizes[0];
    const long r = cfg.r;
    const double p = cfg.p;
    const long trials = cfg.trials_or(20);
    const long levels = static_cast<long>(out.snr_db_nominal.size());

    // ||M*||_F^2 = r for the unit spectrum, so sigma follows from the nominal
    // SNR through the approximation SNR ~ ||M*||_F^2 / (n^2 sigma^2).
    std::vector<double> sigmas(levels);
    for (long i = 0; i < levels; ++i)
        sigmas[i] = std::sqrt(static_cast<double>(r) /
                              (sqr(static_cast<double>(n)) *
                               std::pow(10.0, out.snr_db_nominal[i] / 10.0)));

    struct Cell {
        std::array<double, 4> sq{};
        double snr = 0.0;
        bool ok = false;
    };
    const long tasks = levels * trials;
    std::vector<Cell> cells(tasks);

    parallel_for(tasks, cfg.workers, [&](long task) {
        const long level = task / trials;
        const long trial = task % trials;
        const RngSeed seed = detail::task_seed(cfg.master_seed, level, trial);
        try {
            const auto inst = gen_matrix_completion(n, r, p, sigmas[level], seed);
            McConfig mc;
            mc.eta = 0.2;
            mc.max_iters = cfg.max_iters > 0 ? cfg.max_iters : 400;
            mc.tol_rel = 0.0;  // run to the noise floor
            mc.record_every = mc.max_iters;
            const auto traj = mc_run(inst, mc);
            const auto& fin = traj.metrics.back();
            Cell c;
            c.sq = {sqr(fin.err_fro), sqr(fin.err_op), sqr(fin.err_2inf),
                    sqr(fin.err_entrywise)};
            c.snr = realized_snr(inst);
            c.ok = true;
            cells[task] = c;
        } catch (const NumericFailure&) {
            // leave cell marked failed; the average skips it
        }
    });

    out.snr_db_realized.resize(levels);
    for (auto& v : out.sq_err_db) v.resize(levels);
    for (long level = 0; level < levels; ++level) {
        std::array<double, 4> mean{};
        double snr = 0.0;
        long ok = 0;
        for (long trial = 0; trial < trials; ++trial) {
            const Cell& c = cells[level * trials + trial];
            if (!c.ok) continue;
            for (int k = 0; k < 4; ++k) mean[k] += c.sq[k];
            snr += c.snr;
            ++ok;
        }
        for (int k = 0; k < 4; ++k)
            out.sq_err_db[k][level] = 10.0 * std::log10(mean[k] / std::max<long>(ok, 1));
        out.snr_db_realized[level] = 10.0 * std::log10(snr / std::max<long>(ok, 1));
        for (int k = 0; k < 4; ++k)
            out.csv.add_row({fmt_double(out.snr_db_nominal[level]),
                             fmt_double(out.snr_db_realized[level]),
                             fmt_double(sigmas[level]),
                             NoiseScalingResult::kMetricNames[k],
                             fmt_double(out.sq_err_db[k][level]), std::to_string(ok)});
    }
    for (int k = 0; k < 4; ++k)
        out.slopes[k] = least_squares_slope(out.snr_db_realized, out.sq_err_db[k]);
    return out;
}

// ============================================================================
// Landscape property suites
// ============================================================================

struct LandscapeExpResult {
    std::vector<LandscapeResult> pr, mc, bd;
    bool pass = true;
    Csv csv{{"suite", "seed_index", "probes", "min_lower", "lower_bound", "max_upper",
             "upper_bound", "pass"}};
};

inline LandscapeExpResult exp_landscape(const ExperimentConfig& cfg) {
    const long seeds = cfg.trials_or(3);
    LandscapeExpResult out;
    out.pr.resize(seeds);
    out.mc.resize(seeds);
    out.bd.resize(seeds);
    parallel_for(3 * seeds, cfg.workers, [&](long task) {
        const long suite = task / seeds;
        const long s = task % seeds;
        const RngSeed seed = detail::task_seed(cfg.master_seed, suite, s);
        if (suite == 0)
            out.pr[s] = landscape_pr(seed);
        else if (suite == 1)
            out.mc[s] = landscape_mc(seed);
        else
            out.bd[s] = landscape_bd(seed);
    });
    auto emit = [&](const char* name, long s, const LandscapeResult& r) {
        out.csv.add_row({name, std::to_string(s), std::to_string(r.probes),
                         fmt_double(r.min_lower), fmt_double(r.lower_bound),
                         fmt_double(r.max_upper), fmt_double(r.upper_bound),
                         r.pass() ? "1" : "0"});
        out.pass = out.pass && r.pass();
    };
    for (long s = 0; s < seeds; ++s) emit("pr", s, out.pr[s]);
    for (long s = 0; s < seeds; ++s) emit("mc", s, out.mc[s]);
    for (long s = 0; s < seeds; ++s) emit("bd", s, out.bd[s]);
    return out;
}

// ============================================================================
// Leave-one-out proximity diagnostics
// ============================================================================

struct LooExpResult {
    LooReport report;
    bool pass = true;
    std::string failure;
    Csv csv{{"problem", "l", "iter", "gap", "held_out"}};
};

inline LooExpResult exp_loo(const ExperimentConfig& cfg) {
    LooExpResult out;
    const RngSeed seed = detail::task_seed(cfg.master_seed, 0, 0);

    auto check = [&](bool ok, const std::string& what) {
        if (!ok && out.pass) {
            out.pass = false;
            out.failure = what;
        }
    };

    if (cfg.problem == "pr") {
        const long n = cfg.sizes.empty() ? 100 : cfg.sizes[0];
        const auto inst = gen_phase_retrieval(n, cfg.m_factor * n, seed);
        PrConfig pc;
        pc.eta = cfg.eta > 0.0 ? cfg.eta : 0.1;
        pc.max_iters = cfg.max_iters > 0 ? cfg.max_iters : 100;
        pc.record_every = 5;
        const auto true_traj = pr_run(inst, pc);
        const long count = std::min<long>(cfg.loo_count, inst.m);
        std::vector<PrLooTrajectory> loo(count);
        parallel_for(count, cfg.workers,
                     [&](long l) { loo[l] = pr_loo_run(inst, pc, l); });
        out.report = loo_proximity_report(inst, true_traj, loo);

        for (double g : out.report.max_gap)
            check(g <= 10.0 * std::max(out.report.max_gap[0], 1e-300),
                  "pr gap exceeded 10x its initialization value");
        for (size_t i = 0; i < out.report.ls.size(); ++i) {
            double ratio_sum = 0.0;
            int cnt = 0;
            for (size_t t = 0; t < out.report.iters.size(); ++t) {
                const double denom =
                    (inst.designs *
                     (true_traj.sign * true_traj.iterates_kept[t] - *inst.truth))
                        .cwiseAbs()
                        .maxCoeff();
                if (denom < 1e-12) break;
                ratio_sum += out.report.held_out[i][t] / denom;
                ++cnt;
            }
            if (cnt > 0)
                check(ratio_sum / cnt <= 3.0, "pr held-out incoherence ratio above 3");
        }
    } else if (cfg.problem == "mc") {
        const long n = cfg.sizes.empty() ? 300 : cfg.sizes[0];
        const long r = cfg.r > 0 ? std::min<long>(cfg.r, 3) : 3;
        const auto inst = gen_matrix_completion(n, r, 0.3, 0.0, seed);
        McConfig mc;
        mc.eta = 0.2;
        mc.max_iters = cfg.max_iters > 0 ? cfg.max_iters : 120;
        mc.record_every = 10;
        const auto true_traj = mc_run(inst, mc);
        const long count = std::min<long>(std::min<long>(cfg.loo_count, 5), inst.n);
        std::vector<McLooTrajectory> loo(count);
        parallel_for(count, cfg.workers,
                     [&](long l) { loo[l] = mc_loo_run(inst, mc, l); });
        out.report = loo_proximity_report(inst, true_traj, loo);

        for (double g : out.report.max_gap)
            check(g <= 10.0 * std::max(out.report.max_gap[0], 1e-300),
                  "mc gap exceeded 10x its initialization value");
        const double mu = mc_incoherence_param(Mat(*inst.truth_factor));
        const double row_bound = 10.0 * mu * r / std::sqrt(double(n) * 0.3) *
                                 inst.truth_factor->rowwise().norm().maxCoeff();
        for (const auto& curve : out.report.held_out)
            for (double v : curve)
                check(v <= row_bound, "mc held-out row error above its bound");
    } else {
        const long K = cfg.sizes.empty() ? 50 : cfg.sizes[0];
        const auto inst = gen_blind_deconv(K, cfg.m_factor * K, seed);
        BdConfig bc;
        bc.eta = cfg.eta > 0.0 ? cfg.eta : 0.5;
        bc.max_iters = cfg.max_iters > 0 ? cfg.max_iters : 80;
        bc.record_every = 10;
        const auto true_traj = bd_run(inst, bc);
        const long count = std::min<long>(cfg.loo_count, inst.m);
        std::vector<BdLooTrajectory> loo(count);
        parallel_for(count, cfg.workers,
                     [&](long l) { loo[l] = bd_loo_run(inst, bc, l); });
        out.report = loo_proximity_report(inst, true_traj, loo);

        for (double g : out.report.max_gap)
            check(g <= 10.0 * std::max(out.report.max_gap[0], 1e-300),
                  "bd gap exceeded 10x its initialization value");
        const double factor = 8.0 * std::sqrt(std::log(double(inst.m)));
        for (size_t i = 0; i < out.report.ls.size(); ++i)
            for (size_t t = 0; t < out.report.iters.size(); ++t)
                check(out.report.held_out[i][t] <=
                          factor * loo[i].aligned_truth_error[t] + 1e-12,
                      "bd held-out incoherence above the independence bound");
    }

    for (size_t i = 0; i < out.report.ls.size(); ++i)
        for (size_t t = 0; t < out.report.iters.size(); ++t)
            out.csv.add_row({out.report.problem, std::to_string(out.report.ls[i]),
                             std::to_string(out.report.iters[t]),
                             fmt_double(out.report.gaps[i][t]),
                             fmt_double(out.report.held_out[i][t])});
    for (size_t t = 0; t < out.report.iters.size(); ++t)
        out.csv.add_row({out.report.problem, "-1", std::to_string(out.report.iters[t]),
                         fmt_double(out.report.max_gap[t]), "nan"});
    return out;
}

}  // namespace ncvx::harness
