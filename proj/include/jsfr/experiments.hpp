// SPDX-License-Identifier: Apache-2.0
//
// jsfr - joint sparse frequency recovery via atomic norm minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

///
/// \file experiments.hpp
///
/// Monte Carlo drivers: separation sweep, (M, K) phase grid, the noisy
/// ANM/MUSIC comparison and randomized certificate checks.
///
/// Every trial draws from its own stream seeded by
/// trial_seed(master, experiment, cell, trial), so cells can be rerun alone
/// and results do not depend on the worker count. Curves that differ only in
/// L, tau or r reuse the same trial draw.
///
#ifndef JSFR_EXPERIMENTS_HPP
#define JSFR_EXPERIMENTS_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "jsfr/anm_solver.hpp"
#include "jsfr/certificate.hpp"
#include "jsfr/common.hpp"
#include "jsfr/core_model.hpp"
#include "jsfr/metrics.hpp"
#include "jsfr/music.hpp"
#include "jsfr/retrieval.hpp"
#include "jsfr/serialize.hpp"

namespace jsfr::exp
{

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t master, std::string_view experiment, std::uint64_t cell,
                                std::uint64_t trial)
{
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a of the name
    for (unsigned char c : experiment)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t s = splitmix64(master ^ h);
    s = splitmix64(s ^ cell);
    return splitmix64(s ^ (trial * 0x9e3779b97f4a7c15ULL + 1));
}

/// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
/// exception is rethrown after all threads stop.
inline void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn)
{
    if (workers <= 1 || count <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    const auto nthreads = static_cast<std::size_t>(workers) < count ? static_cast<std::size_t>(workers) : count;
    for (std::size_t w = 0; w < nthreads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++)
            {
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!err)
                        err = std::current_exception();
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (err)
        std::rethrow_exception(err);
}

//------------------------------------------------------------------------------
// Pipeline
//------------------------------------------------------------------------------

struct PipelineResult
{
    Estimate est;
    bool retrieved = false; // false when T(u) was full rank or not PSD
    std::string error;
    SdpSolution sol;
    double runtime_ms = 0.0;
};

/// solve -> retrieve_from_u -> refine. A Toeplitz block that is full rank or
/// (after an unconverged solve) indefinite leaves retrieved = false.
inline PipelineResult run_pipeline(const DataMatrix& data, SolveMode mode, const SolverOptions& solver = {},
                                   bool refine = true, const RefineOptions& ropts = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    PipelineResult r;
    r.sol = solve(data, mode, solver);
    try
    {
        r.est = retrieve_from_u(r.sol.u, data);
        if (refine)
            r.est = refine_gauss_newton(r.est.freqs, data, ropts);
        r.retrieved = true;
    }
    catch (const NonUniqueError& e)
    {
        r.error = e.what();
    }
    catch (const NotPsdError& e)
    {
        r.error = e.what();
    }
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

//------------------------------------------------------------------------------
// CSV
//------------------------------------------------------------------------------

struct CsvRow
{
    std::string experiment;
    Index N = 0;
    Index L = 0;
    Index M = 0;
    double K = 0.0; // mean cardinality when it varies across trials
    double delta_min_over_invN = 0.0;
    double tau = 0.0;
    double r = 0.0;
    int runs = 0;
    int successes = 0;
    double mean_rmse_freq = std::numeric_limits<double>::quiet_NaN();
    double mean_iters = 0.0;
    double mean_runtime_ms = 0.0;
    std::optional<double> l0_overlay_K;
};

inline std::string csv_header(bool overlay = false)
{
    std::string h = "experiment,N,L,M,K,delta_min_over_invN,tau,r,runs,successes,mean_rmse_freq,mean_iters,"
                    "mean_runtime_ms";
    if (overlay)
        h += ",l0_overlay_K";
    return h;
}

inline std::string fmt_double(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

inline std::string to_csv(const CsvRow& r)
{
    std::string s = r.experiment + "," + std::to_string(r.N) + "," + std::to_string(r.L) + "," +
                    std::to_string(r.M) + "," + fmt_double(r.K) + "," + fmt_double(r.delta_min_over_invN) + "," +
                    fmt_double(r.tau) + "," + fmt_double(r.r) + "," + std::to_string(r.runs) + "," +
                    std::to_string(r.successes) + "," + fmt_double(r.mean_rmse_freq) + "," +
                    fmt_double(r.mean_iters) + "," + fmt_double(r.mean_runtime_ms);
    if (r.l0_overlay_K)
        s += "," + fmt_double(*r.l0_overlay_K);
    return s;
}

namespace detail
{

struct TrialOutcome
{
    bool success = false;
    double rmse = std::numeric_limits<double>::infinity();
    int iterations = 0;
    double runtime_ms = 0.0;
    double K = 0.0;
};

inline void accumulate(CsvRow& row, const std::vector<TrialOutcome>& trials)
{
    row.runs = static_cast<int>(trials.size());
    double rmse_sum = 0.0;
    int rmse_n = 0;
    double it = 0.0, ms = 0.0, K = 0.0;
    for (const auto& t : trials)
    {
        row.successes += t.success ? 1 : 0;
        if (std::isfinite(t.rmse))
        {
            rmse_sum += t.rmse;
            ++rmse_n;
        }
        it += t.iterations;
        ms += t.runtime_ms;
        K += t.K;
    }
    const double n = trials.empty() ? 1.0 : static_cast<double>(trials.size());
    row.mean_rmse_freq = rmse_n > 0 ? rmse_sum / rmse_n : std::numeric_limits<double>::quiet_NaN();
    row.mean_iters = it / n;
    row.mean_runtime_ms = ms / n;
    row.K = K / n;
}

} // namespace detail

//------------------------------------------------------------------------------
// Separation sweep (complete data)
//------------------------------------------------------------------------------

struct Curve
{
    Index L = 1;
    double tau = 0.0; // coherent fraction
};

struct Fig1Config
{
    Index N = 64;
    FreqMode variant = FreqMode::equispaced;
    std::vector<Curve> curves = {{1, 0.0}, {3, 0.0}, {5, 0.0}, {5, 1.0}};
    std::vector<double> delta_grid; // in units of 1/N
    int runs = 10;
    std::uint64_t seed = 0;
    SolverOptions solver;
    int workers = 1;

    static std::vector<double> default_grid(FreqMode variant)
    {
        std::vector<double> g;
        const int start = variant == FreqMode::random ? 18 : 21; // 0.9 or 1.05, step 0.05
        for (int i = start; i <= 40; ++i)
            g.push_back(0.05 * i);
        return g;
    }
};

inline std::string fig1_name(FreqMode variant)
{
    return variant == FreqMode::random ? "fig1_random" : "fig1_equispaced";
}

/// One trial of one Delta cell for every curve.
inline std::vector<detail::TrialOutcome> fig1_trial(const Fig1Config& cfg, std::size_t cell, std::size_t trial)
{
    const std::string name = fig1_name(cfg.variant);
    const std::uint64_t seed = trial_seed(cfg.seed, name, cell, trial);
    Rng rng(seed);
    const double delta = cfg.delta_grid[cell] / static_cast<double>(cfg.N);
    const FrequencySet freqs = gen_frequencies(cfg.variant, delta, std::nullopt, rng);
    const auto K = static_cast<Index>(freqs.size());
    Index Lmax = 1;
    for (const auto& c : cfg.curves)
        Lmax = std::max(Lmax, c.L);
    const SourceMatrix S0 = gen_sources(SourceMode::uncorrelated, K, Lmax, rng);

    std::vector<detail::TrialOutcome> out;
    for (std::size_t ci = 0; ci < cfg.curves.size(); ++ci)
    {
        const Curve& c = cfg.curves[ci];
        CMatrix S = S0.S;
        if (c.tau > 0.0)
        {
            Rng crng(splitmix64(seed ^ static_cast<std::uint64_t>(std::llround(c.tau * 1e6))));
            S = gen_sources(SourceMode::coherent_fraction, K, Lmax, crng, c.tau).S;
            // Couple with the uncorrelated draw: non-coherent rows are taken
            // from S0, coherent rows are rotated so that their first-snapshot
            // phase equals that of S0. The rotation keeps the scale-factor
            // phases uniform and independent of the magnitudes.
            const auto m = static_cast<Index>(std::ceil(c.tau * static_cast<double>(K) - 1e-12));
            for (Index k = 0; k < K; ++k)
            {
                if (k >= m)
                    S.row(k) = S0.S.row(k);
                else if (std::abs(S(k, 0)) > 0.0 && std::abs(S0.S(k, 0)) > 0.0)
                    S.row(k) *= (S0.S(k, 0) / std::abs(S0.S(k, 0))) / (S(k, 0) / std::abs(S(k, 0)));
            }
        }
        const CMatrix SL = S.leftCols(c.L);
        const DataMatrix data = DataMatrix::from_full(steering_matrix(freqs, cfg.N) * SL, SampleMask::complete(cfg.N));
        const PipelineResult pr = run_pipeline(data, SolveMode::complete, cfg.solver);
        detail::TrialOutcome o;
        o.iterations = pr.sol.iterations;
        o.runtime_ms = pr.runtime_ms;
        o.K = static_cast<double>(K);
        if (pr.retrieved)
        {
            const RVector amps = SL.rowwise().norm() / std::sqrt(static_cast<double>(c.L));
            const Score s = score_complete(pr.est, freqs, amps);
            o.success = s.success;
            o.rmse = s.freq_rmse;
        }
        out.push_back(o);
    }
    return out;
}

inline std::vector<CsvRow> run_fig1(Fig1Config cfg)
{
    if (cfg.delta_grid.empty())
        cfg.delta_grid = Fig1Config::default_grid(cfg.variant);
    if (cfg.runs < 1)
        throw ConfigError("exp-fig1: runs must be >= 1");
    if (cfg.curves.empty())
        throw ConfigError("exp-fig1: no curves");
    const std::size_t cells = cfg.delta_grid.size();
    const auto runs = static_cast<std::size_t>(cfg.runs);
    std::vector<std::vector<detail::TrialOutcome>> res(cells * runs);
    parallel_for(cells * runs, cfg.workers, [&](std::size_t job) {
        res[job] = fig1_trial(cfg, job / runs, job % runs);
    });

    std::vector<CsvRow> rows;
    for (std::size_t ci = 0; ci < cfg.curves.size(); ++ci)
        for (std::size_t cell = 0; cell < cells; ++cell)
        {
            std::vector<detail::TrialOutcome> trials;
            for (std::size_t t = 0; t < runs; ++t)
                trials.push_back(res[cell * runs + t][ci]);
            CsvRow row;
            row.experiment = fig1_name(cfg.variant);
            row.N = cfg.N;
            row.L = cfg.curves[ci].L;
            row.M = cfg.N;
            row.delta_min_over_invN = cfg.delta_grid[cell];
            row.tau = cfg.curves[ci].tau;
            detail::accumulate(row, trials);
            rows.push_back(row);
        }
    return rows;
}

//------------------------------------------------------------------------------
// Phase grid (missing data)
//------------------------------------------------------------------------------

struct PhaseConfig
{
    Index N = 64;
    Index L = 5;
    double delta = 1.2; // in units of 1/N
    std::vector<Index> M_grid = {16, 32, 48, 64};
    std::vector<Index> K_grid = {2, 4, 8, 12, 16};
    std::vector<double> r_list = {0.0, 1.0};
    int runs = 10;
    std::uint64_t seed = 0;
    SolverOptions solver;
    int workers = 1;
};

/// Largest K allowed by the l0 sufficient condition with rank(S) = L (or 1
/// when the snapshots are fully correlated).
inline double l0_overlay(Index M, Index L, double r)
{
    const Index rank = std::abs(r) >= 1.0 ? 1 : L;
    return 0.5 * static_cast<double>(M + rank);
}

inline std::vector<detail::TrialOutcome> phase_trial(const PhaseConfig& cfg, std::size_t mi, std::size_t ki,
                                                     std::size_t trial)
{
    const std::size_t cell = mi * cfg.K_grid.size() + ki;
    const std::uint64_t seed = trial_seed(cfg.seed, "phase", cell, trial);
    Rng rng(seed);
    const Index M = cfg.M_grid[mi];
    const Index K = cfg.K_grid[ki];
    std::vector<detail::TrialOutcome> out(cfg.r_list.size());
    for (auto& o : out)
        o.K = static_cast<double>(K);

    FrequencySet freqs;
    try
    {
        freqs = gen_frequencies(FreqMode::random, cfg.delta / static_cast<double>(cfg.N), K, rng);
    }
    catch (const SaturationError&)
    {
        return out; // counted as failures
    }
    const SourceMatrix S0 = gen_sources(SourceMode::uncorrelated, K, cfg.L, rng);
    const SampleMask mask = gen_mask(MaskMode::uniform_random, cfg.N, static_cast<double>(M), rng);
    const CMatrix A = steering_matrix(freqs, cfg.N);

    for (std::size_t ri = 0; ri < cfg.r_list.size(); ++ri)
    {
        const RMatrix root = psd_sqrt(temporal_correlation(cfg.L, cfg.r_list[ri]));
        const CMatrix S = S0.S * root.cast<cdouble>();
        const CMatrix Y = A * S;
        const DataMatrix data = DataMatrix::from_full(Y, mask);
        const PipelineResult pr = run_pipeline(data, SolveMode::missing, cfg.solver);
        auto& o = out[ri];
        o.iterations = pr.sol.iterations;
        o.runtime_ms = pr.runtime_ms;
        if (pr.retrieved)
        {
            const RVector amps = S.rowwise().norm() / std::sqrt(static_cast<double>(cfg.L));
            const Score s = score_missing(pr.est, reconstruct(pr.est, cfg.N), Y, freqs, amps);
            o.success = s.success;
            o.rmse = s.freq_rmse;
        }
    }
    return out;
}

inline std::vector<CsvRow> run_phase(const PhaseConfig& cfg)
{
    if (cfg.runs < 1)
        throw ConfigError("exp-phase: runs must be >= 1");
    for (Index M : cfg.M_grid)
        if (M < 1 || M > cfg.N)
            throw ConfigError("exp-phase: M outside [1, N]");
    for (Index K : cfg.K_grid)
        if (K < 1)
            throw ConfigError("exp-phase: K must be >= 1");
    const std::size_t nM = cfg.M_grid.size(), nK = cfg.K_grid.size();
    const auto runs = static_cast<std::size_t>(cfg.runs);
    std::vector<std::vector<detail::TrialOutcome>> res(nM * nK * runs);
    parallel_for(res.size(), cfg.workers, [&](std::size_t job) {
        const std::size_t cell = job / runs;
        res[job] = phase_trial(cfg, cell / nK, cell % nK, job % runs);
    });

    std::vector<CsvRow> rows;
    for (std::size_t ri = 0; ri < cfg.r_list.size(); ++ri)
        for (std::size_t mi = 0; mi < nM; ++mi)
            for (std::size_t ki = 0; ki < nK; ++ki)
            {
                std::vector<detail::TrialOutcome> trials;
                for (std::size_t t = 0; t < runs; ++t)
                    trials.push_back(res[(mi * nK + ki) * runs + t][ri]);
                CsvRow row;
                row.experiment = "phase";
                row.N = cfg.N;
                row.L = cfg.L;
                row.M = cfg.M_grid[mi];
                row.delta_min_over_invN = cfg.delta;
                row.r = cfg.r_list[ri];
                detail::accumulate(row, trials);
                row.l0_overlay_K = l0_overlay(row.M, cfg.L, row.r);
                rows.push_back(row);
            }
    return rows;
}

//------------------------------------------------------------------------------
// Noisy comparison
//------------------------------------------------------------------------------

struct NoisyScenario
{
    Index N = 50;
    Index M = 20;
    Index L = 5;
    std::vector<double> freqs = {0.1, 0.12, 0.3};
    std::vector<double> powers = {2.0, 3.0, 1.0};
    double sigma2 = 0.1;
    double anm_tol = 1e-2;   // ANM frequency tolerance
    double music_tol = 2e-2; // MUSIC frequency tolerance
};

struct NoisyPanel
{
    std::string name;
    double epsilon = 0.0;
    DataMatrix data;
    SdpSolution sol;
    bool retrieved = false;
    Estimate anm;
    bool anm_success = false;
    double spurious_fraction = 0.0;
    MusicResult music;
    bool music_success = false;
    double runtime_ms = 0.0;
};

/// All K estimated frequencies matched one-to-one (sorted, cyclic) within tol.
inline bool frequencies_within(const FrequencySet& est, const FrequencySet& truth, double tol)
{
    if (est.size() < truth.size())
        return false;
    Estimate e;
    e.freqs = est;
    e.mean_amps = RVector::Ones(static_cast<Index>(est.size()));
    const Match m = match_topK(e, truth, truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (!(wrap_distance(m.freqs[i], truth[i]) <= tol))
            return false;
    return true;
}

/// Panels: (a) first snapshot only, (b) L snapshots with independent random
/// phases, (c) as (b) with source 3 a scaled copy of source 1. Panels (b) and
/// (c) share mask and noise; (a) is the first column of (b).
inline std::array<NoisyPanel, 3> run_noisy_trial(std::uint64_t seed, const SolverOptions& solver = {},
                                                 const NoisyScenario& sc = {})
{
    Rng rng(seed);
    const FrequencySet truth(sc.freqs);
    const auto K = static_cast<Index>(truth.size());
    const SampleMask mask = gen_mask(MaskMode::uniform_random, sc.N, static_cast<double>(sc.M), rng);
    CMatrix S = gen_sources(SourceMode::random_phase, K, sc.L, rng).S;
    for (Index k = 0; k < K; ++k)
        S.row(k) *= std::sqrt(sc.powers[static_cast<std::size_t>(k)]);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    CMatrix Sc = S;
    Sc.row(2) = std::sqrt(sc.powers[2] / sc.powers[0]) * unit_phasor(unif(rng)) * S.row(0);
    const CMatrix E = complex_gaussian_matrix(sc.M, sc.L, rng, sc.sigma2);
    const CMatrix A = steering_matrix(truth, sc.N);

    auto noisy = [&](const CMatrix& Sfull, Index L) {
        DataMatrix d = DataMatrix::from_full(A * Sfull.leftCols(L), mask);
        d.observed += E.leftCols(L);
        d.noise_variance = sc.sigma2;
        return d;
    };

    std::array<NoisyPanel, 3> panels;
    panels[0].name = "a";
    panels[0].data = noisy(S, 1);
    panels[1].name = "b";
    panels[1].data = noisy(S, sc.L);
    panels[2].name = "c";
    panels[2].data = noisy(Sc, sc.L);

    for (auto& p : panels)
    {
        const auto t0 = std::chrono::steady_clock::now();
        p.epsilon = noise_ball_radius(sc.M, p.data.L(), sc.sigma2);
        try
        {
            p.sol = solve_noisy(p.data, p.epsilon, solver);
            // Amplitudes of the denoised solution's atomic decomposition.
            const DataMatrix denoised = DataMatrix::from_full(p.sol.Y, SampleMask::complete(sc.N));
            p.anm = retrieve_from_u(p.sol.u, denoised);
            p.retrieved = true;
        }
        catch (const NonUniqueError&)
        {
            p.retrieved = false;
        }
        catch (const NotPsdError&)
        {
            p.retrieved = false;
        }
        catch (const BisectionError&)
        {
            p.retrieved = false; // counts as an ANM failure
        }
        if (p.retrieved && p.anm.size() >= truth.size())
        {
            const Match m = match_topK(p.anm, truth, truth.size());
            p.anm_success = true;
            for (std::size_t i = 0; i < truth.size(); ++i)
                if (!(wrap_distance(m.freqs[i], truth[i]) <= sc.anm_tol))
                    p.anm_success = false;
            p.spurious_fraction = spurious_power_fraction(p.anm, truth.size());
        }
        p.music = music(p.data, K, 16 * sc.N);
        p.music_success = frequencies_within(p.music.peaks, truth, sc.music_tol);
        p.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    return panels;
}

/// One ANM and one MUSIC row per panel, aggregated over seeds.
inline std::vector<CsvRow> noisy_rows(const std::vector<std::array<NoisyPanel, 3>>& trials,
                                      const NoisyScenario& sc = {})
{
    std::vector<CsvRow> rows;
    if (trials.empty())
        return rows;
    const double n = static_cast<double>(trials.size());
    for (std::size_t p = 0; p < 3; ++p)
        for (int method = 0; method < 2; ++method)
        {
            CsvRow row;
            row.experiment = std::string(method == 0 ? "noisy_anm_" : "noisy_music_") + trials[0][p].name;
            row.N = sc.N;
            row.L = trials[0][p].data.L();
            row.M = sc.M;
            row.K = static_cast<double>(sc.freqs.size());
            row.tau = p == 2 ? 1.0 : 0.0;
            row.runs = static_cast<int>(trials.size());
            double ms = 0.0, it = 0.0;
            for (const auto& tr : trials)
            {
                const auto& panel = tr[p];
                row.successes += (method == 0 ? panel.anm_success : panel.music_success) ? 1 : 0;
                ms += panel.runtime_ms;
                it += method == 0 ? panel.sol.iterations : 0;
            }
            row.mean_iters = it / n;
            row.mean_runtime_ms = ms / n;
            rows.push_back(row);
        }
    return rows;
}

inline json noisy_panel_json(const NoisyPanel& panel, const NoisyScenario& sc = {})
{
    json j = {{"panel", panel.name},
              {"epsilon", panel.epsilon},
              {"tau", panel.sol.tau},
              {"status", to_string(panel.sol.status)},
              {"anm_success", panel.anm_success},
              {"spurious_fraction", panel.spurious_fraction},
              {"music_peaks", to_json(panel.music.peaks)},
              {"music_success", panel.music_success},
              {"truth", {{"freqs", sc.freqs}, {"powers", sc.powers}}}};
    if (panel.retrieved)
        j["anm"] = to_json(panel.anm);
    return j;
}

/// MUSIC pseudospectrum as "f,P" CSV.
inline std::string spectrum_csv(const MusicResult& m)
{
    std::string s = "f,P\n";
    char buf[64];
    for (std::size_t i = 0; i < m.grid.size(); ++i)
    {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", m.grid[i], m.spectrum[i]);
        s += buf;
    }
    return s;
}

inline std::string csv_document(const std::vector<CsvRow>& rows, bool overlay)
{
    std::string s = csv_header(overlay) + "\n";
    for (const auto& r : rows)
        s += to_csv(r) + "\n";
    return s;
}

//------------------------------------------------------------------------------
// Certificates
//------------------------------------------------------------------------------

struct CertifyConfig
{
    int n = 64;
    double delta_factor = 1.0; // separation delta_factor / n
    Index K = 0;               // 0: saturate the circle
    Index L = 0;               // 0: cycle through 1..4
    int trials = 50;
    std::uint64_t seed = 0;
    int equispaced_every = 5; // every k-th trial uses equispaced frequencies (0: never)
    // Incomplete-data variant.
    bool incomplete = false;
    double p = 0.5;     // Bernoulli keep probability
    double tau = 0.25;  // allowed deviation ||Dbar/p - D||
    double delta_prob = 0.1;
};

/// Required sample count for the random-kernel concentration at K, tau, delta.
inline double lemma_sample_bound(Index K, double tau, double delta_prob)
{
    const double k = static_cast<double>(K);
    return 50.0 / (tau * tau) * k * std::log(2.0 * k / delta_prob);
}

inline json run_certify(const CertifyConfig& cfg)
{
    if (cfg.n < 2 || cfg.trials < 1 || !(cfg.delta_factor > 0.0))
        throw ConfigError("certify: need n >= 2, trials >= 1, delta_factor > 0");
    const double delta = cfg.delta_factor / static_cast<double>(cfg.n);
    const double nn = static_cast<double>(cfg.n);
    json trials = json::array();
    int passes = 0, invertible = 0, concentrated = 0;
    BoundMargins worst;
    double worst_far = 0.0, worst_curv = -std::numeric_limits<double>::infinity(), worst_interp = 0.0;
    std::vector<std::string> violations;

    for (int t = 0; t < cfg.trials; ++t)
    {
        Rng rng(trial_seed(cfg.seed, cfg.incomplete ? "certify_incomplete" : "certify", 0,
                           static_cast<std::uint64_t>(t)));
        const bool equi = cfg.equispaced_every > 0 && t % cfg.equispaced_every == 0;
        FrequencySet f = gen_frequencies(equi ? FreqMode::equispaced : FreqMode::random, delta,
                                         cfg.K > 0 ? std::optional<Index>(cfg.K) : std::nullopt, rng);
        if (cfg.K > 0 && static_cast<Index>(f.size()) > cfg.K)
            f = FrequencySet(std::vector<double>(f.begin(), f.begin() + cfg.K));
        const Index L = cfg.L > 0 ? cfg.L : 1 + t % 4;
        CMatrix Phi = complex_gaussian_matrix(static_cast<Index>(f.size()), L, rng);
        for (Index k = 0; k < Phi.rows(); ++k)
            Phi.row(k).normalize();

        json tj = {{"trial", t}, {"K", f.size()}, {"L", L}, {"equispaced", equi}};
        if (!cfg.incomplete)
        {
            const DualPolynomial q = build_certificate(f, Phi, cfg.n);
            const CertReport rep = certify(q);
            const BoundMargins b = bound_margins(f, Phi, cfg.n);
            passes += rep.pass ? 1 : 0;
            worst_far = std::max(worst_far, rep.sup_far);
            worst_curv = std::max(worst_curv, rep.min_neg_curvature);
            worst_interp = std::max(worst_interp, rep.interp_err);
            worst.i_minus_d0 = std::max(worst.i_minus_d0, b.i_minus_d0);
            worst.d1 = std::max(worst.d1, b.d1);
            worst.d2 = std::max(worst.d2, b.d2);
            worst.i_minus_d3inv = std::max(worst.i_minus_d3inv, b.i_minus_d3inv);
            worst.alpha_minus_phi = std::max(worst.alpha_minus_phi, b.alpha_minus_phi);
            worst.beta = std::max(worst.beta, b.beta);
            auto flag = [&](bool bad, const char* what) {
                if (bad)
                    violations.push_back("trial " + std::to_string(t) + ": " + what);
            };
            flag(b.i_minus_d0 > 6.253e-3, "||I-D0|| bound");
            flag(b.d1 > 0.1528 * nn, "||D1|| bound");
            flag(b.d2 > 4.212 * nn * nn, "||K''(0)I-D2|| bound");
            flag(b.i_minus_d3inv > 8.824e-3, "||I-D3^-1|| bound");
            flag(b.alpha_minus_phi > 8.824e-3, "||alpha-Phi|| bound");
            flag(b.beta > 1.647e-2 / nn, "||beta|| bound");
            flag(rep.sup_far > 0.99992 + 1e-6, "far-region sup");
            flag(rep.min_neg_curvature > -0.3910 * nn * nn, "near-region curvature");
            tj["report"] = to_json(rep);
            tj["bounds"] = to_json(b);
        }
        else
        {
            const Index N = 4 * static_cast<Index>(cfg.n) + 1;
            const SampleMask mask = gen_mask(MaskMode::bernoulli, N, cfg.p, rng);
            tj["M"] = mask.M();
            try
            {
                const double dev = random_kernel_deviation(f, cfg.n, cfg.p, mask);
                const bool ok = dev <= cfg.tau;
                concentrated += ok ? 1 : 0;
                tj["deviation"] = dev;
                const DualPolynomial q = build_random_certificate(f, Phi, mask, cfg.n);
                ++invertible;
                const CertReport rep = certify(q);
                passes += rep.pass ? 1 : 0;
                tj["report"] = to_json(rep);
            }
            catch (const NumericalError& e)
            {
                tj["error"] = e.what();
            }
        }
        trials.push_back(std::move(tj));
    }

    json out = {{"n", cfg.n},
                {"N", 4 * cfg.n + 1},
                {"delta", delta},
                {"trials", cfg.trials},
                {"incomplete", cfg.incomplete},
                {"passes", passes},
                {"pass_rate", static_cast<double>(passes) / cfg.trials},
                {"per_trial", std::move(trials)}};
    if (!cfg.incomplete)
    {
        out["max_interp_err"] = worst_interp;
        out["max_sup_far"] = worst_far;
        out["max_curvature_over_n2"] = worst_curv / (nn * nn);
        out["max_bounds"] = to_json(worst);
        out["violations"] = violations;
    }
    else
    {
        out["p"] = cfg.p;
        out["tau"] = cfg.tau;
        out["invertible_rate"] = static_cast<double>(invertible) / cfg.trials;
        out["concentration_rate"] = static_cast<double>(concentrated) / cfg.trials;
    }
    return out;
}

//------------------------------------------------------------------------------
// Experiment configs
//------------------------------------------------------------------------------

namespace detail
{

inline void check_keys(const json& j, std::initializer_list<const char*> known, const char* what)
{
    if (!j.is_object())
        throw ConfigError(std::string(what) + ": config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
            throw ConfigError(std::string(what) + ": unknown key " + key);
}

template <typename F>
auto guarded(const char* what, F&& f)
{
    try
    {
        return f();
    }
    catch (const json::exception& e)
    {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

} // namespace detail

inline SolverOptions solver_options_from_json(const json& j)
{
    detail::check_keys(j, {"rho", "max_iters", "tol_abs", "tol_rel", "adaptive_rho", "relaxation"}, "solver");
    return detail::guarded("solver", [&] {
        SolverOptions o;
        o.rho = j.value("rho", o.rho);
        o.max_iters = j.value("max_iters", o.max_iters);
        o.tol_abs = j.value("tol_abs", o.tol_abs);
        o.tol_rel = j.value("tol_rel", o.tol_rel);
        o.adaptive_rho = j.value("adaptive_rho", o.adaptive_rho);
        o.relaxation = j.value("relaxation", o.relaxation);
        o.validate();
        return o;
    });
}

inline Fig1Config fig1_config_from_json(const json& j)
{
    detail::check_keys(j, {"N", "variant", "curves", "L_list", "tau_list", "delta_grid", "runs", "seed", "solver"},
                       "exp-fig1");
    return detail::guarded("exp-fig1", [&] {
        Fig1Config c;
        c.N = j.value("N", c.N);
        const std::string v = j.value("variant", std::string("equispaced"));
        if (v != "equispaced" && v != "random")
            throw ConfigError("exp-fig1: variant must be equispaced or random");
        c.variant = v == "random" ? FreqMode::random : FreqMode::equispaced;
        if (j.contains("curves"))
        {
            c.curves.clear();
            for (const auto& cj : j.at("curves"))
                c.curves.push_back({cj.at("L").get<Index>(), cj.value("tau", 0.0)});
        }
        else if (j.contains("L_list") || j.contains("tau_list"))
        {
            // Uncorrelated curves for each L, then coherent curves at the largest L.
            c.curves.clear();
            const auto Ls = j.value("L_list", std::vector<Index>{1, 3, 5});
            for (Index L : Ls)
                c.curves.push_back({L, 0.0});
            const Index Lmax = Ls.empty() ? 5 : *std::max_element(Ls.begin(), Ls.end());
            for (double t : j.value("tau_list", std::vector<double>{}))
                if (t > 0.0)
                    c.curves.push_back({Lmax, t});
        }
        c.delta_grid = j.value("delta_grid", c.delta_grid);
        c.runs = j.value("runs", c.runs);
        c.seed = j.value("seed", c.seed);
        if (j.contains("solver"))
            c.solver = solver_options_from_json(j.at("solver"));
        if (c.N < 2)
            throw ConfigError("exp-fig1: N must be >= 2");
        for (const auto& cv : c.curves)
            if (cv.L < 1 || cv.tau < 0.0 || cv.tau > 1.0)
                throw ConfigError("exp-fig1: curves need L >= 1 and tau in [0, 1]");
        return c;
    });
}

inline PhaseConfig phase_config_from_json(const json& j)
{
    detail::check_keys(j, {"N", "L", "delta", "M_grid", "K_grid", "r_list", "runs", "seed", "solver"}, "exp-phase");
    return detail::guarded("exp-phase", [&] {
        PhaseConfig c;
        c.N = j.value("N", c.N);
        c.L = j.value("L", c.L);
        c.delta = j.value("delta", c.delta);
        c.M_grid = j.value("M_grid", c.M_grid);
        c.K_grid = j.value("K_grid", c.K_grid);
        c.r_list = j.value("r_list", c.r_list);
        c.runs = j.value("runs", c.runs);
        c.seed = j.value("seed", c.seed);
        if (j.contains("solver"))
            c.solver = solver_options_from_json(j.at("solver"));
        if (c.N < 2 || c.L < 1 || !(c.delta > 0.0))
            throw ConfigError("exp-phase: need N >= 2, L >= 1, delta > 0");
        for (double r : c.r_list)
            if (r < -1.0 || r > 1.0)
                throw ConfigError("exp-phase: r must lie in [-1, 1]");
        return c;
    });
}

inline CertifyConfig certify_config_from_json(const json& j)
{
    detail::check_keys(j, {"n", "delta_factor", "K", "L", "trials", "seed", "equispaced_every", "incomplete", "p",
                           "tau", "delta_prob"},
                       "certify");
    return detail::guarded("certify", [&] {
        CertifyConfig c;
        c.n = j.value("n", c.n);
        c.delta_factor = j.value("delta_factor", c.delta_factor);
        c.K = j.value("K", c.K);
        c.L = j.value("L", c.L);
        c.trials = j.value("trials", c.trials);
        c.seed = j.value("seed", c.seed);
        c.equispaced_every = j.value("equispaced_every", c.equispaced_every);
        c.incomplete = j.value("incomplete", c.incomplete);
        c.p = j.value("p", c.p);
        c.tau = j.value("tau", c.tau);
        c.delta_prob = j.value("delta_prob", c.delta_prob);
        if (c.incomplete && !(c.p > 0.0 && c.p <= 1.0))
            throw ConfigError("certify: p must lie in (0, 1]");
        return c;
    });
}

} // namespace jsfr::exp

#endif
