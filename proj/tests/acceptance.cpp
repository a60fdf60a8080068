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


// Acceptance run: one PASS/FAIL line per criterion, with the CSV and JSON
// results written under --out. Exits nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "jsfr/experiments.hpp"
#include "jsfr/spark.hpp"
#include "jsfr/toeplitz.hpp"

namespace fs = std::filesystem;
using namespace jsfr;
using namespace jsfr::exp;

namespace
{

struct Outcome
{
    bool pass = false;
    std::string detail;
};

struct Context
{
    fs::path out;
    std::uint64_t seed = 0;
    int workers = 1;
};

std::string fmt(const char* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

void write_text(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << text;
}

void write_json(const fs::path& path, const json& j)
{
    write_text(path, j.dump(2) + "\n");
}

const CsvRow& find_row(const std::vector<CsvRow>& rows, Index L, double tau, double delta)
{
    for (const auto& r : rows)
        if (r.L == L && r.tau == tau && std::abs(r.delta_min_over_invN - delta) < 1e-9)
            return r;
    throw std::runtime_error("missing sweep row");
}

//------------------------------------------------------------------------------

Outcome separation_n128(const Context& ctx)
{
    Fig1Config c;
    c.N = 128;
    c.curves = {{5, 0.0}};
    c.delta_grid = {2.0};
    c.runs = 20;
    c.seed = ctx.seed;
    c.workers = ctx.workers;
    const auto rows = run_fig1(c);
    write_text(ctx.out / "fig1_equispaced_n128.csv", csv_document(rows, false));
    const int s = rows.at(0).successes;
    return {s >= 19, std::to_string(s) + "/20 successes at N=128, L=5, delta=2/N (need >= 19)"};
}

Outcome ordering(const Context& ctx)
{
    Fig1Config c;
    c.N = 64;
    c.curves = {{1, 0.0}, {3, 0.0}, {5, 0.0}, {5, 1.0}};
    c.delta_grid = Fig1Config::default_grid(FreqMode::equispaced);
    c.runs = 20;
    c.seed = ctx.seed;
    c.workers = ctx.workers;
    const auto rows = run_fig1(c);
    write_text(ctx.out / "fig1_equispaced.csv", csv_document(rows, false));

    int mono_bad = 0, coh_bad = 0, max_gap = 0;
    for (double d : c.delta_grid)
    {
        const int s1 = find_row(rows, 1, 0.0, d).successes;
        const int s5 = find_row(rows, 5, 0.0, d).successes;
        const int sc = find_row(rows, 5, 1.0, d).successes;
        mono_bad += s5 < s1 ? 1 : 0;
        coh_bad += std::abs(sc - s1) > 2 ? 1 : 0;
        max_gap = std::max(max_gap, std::abs(sc - s1));
    }
    const auto cells = c.delta_grid.size();
    return {mono_bad == 0 && coh_bad == 0,
            std::to_string(cells - mono_bad) + "/" + std::to_string(cells) + " cells with L=5 >= L=1; " +
                std::to_string(cells - coh_bad) + "/" + std::to_string(cells) +
                " cells with |tau=1 - L=1| <= 2/20 (max gap " + std::to_string(max_gap) + ")"};
}

// Random-frequency sweep for the second panel; reported, not gated.
void random_sweep(const Context& ctx)
{
    Fig1Config c;
    c.N = 64;
    c.variant = FreqMode::random;
    c.curves = {{1, 0.0}, {3, 0.0}, {5, 0.0}};
    for (int i = 9; i <= 20; ++i)
        c.delta_grid.push_back(i / 10.0);
    c.runs = 10;
    c.seed = ctx.seed;
    c.workers = ctx.workers;
    const auto rows = run_fig1(c);
    write_text(ctx.out / "fig1_random.csv", csv_document(rows, false));
    std::cout << "info  random-frequency sweep: L=1 at 0.9/N " << find_row(rows, 1, 0.0, 0.9).successes
              << "/10, L=5 at 2/N " << find_row(rows, 5, 0.0, 2.0).successes << "/10" << std::endl;
}

Outcome certificates(const Context& ctx)
{
    CertifyConfig c;
    c.n = 64;
    c.trials = 50;
    c.seed = ctx.seed;
    const json rep = run_certify(c);
    write_json(ctx.out / "certify.json", rep);

    CertifyConfig ci = c;
    ci.incomplete = true;
    ci.K = 4;
    ci.p = 0.5;
    write_json(ctx.out / "certify_incomplete.json", run_certify(ci));

    const int passes = rep.at("passes").get<int>();
    const auto nviol = rep.at("violations").size();
    const json& b = rep.at("max_bounds");
    return {passes == 50 && nviol == 0,
            std::to_string(passes) + "/50 certified, " + std::to_string(nviol) + " bound violations; max ||I-D0|| " +
                fmt("%.3e", b.at("i_minus_d0").get<double>()) + ", max ||alpha-Phi|| " +
                fmt("%.3e", b.at("alpha_minus_phi").get<double>()) + ", max far sup " +
                fmt("%.6f", rep.at("max_sup_far").get<double>()) + ", max curvature " +
                fmt("%.3f", rep.at("max_curvature_over_n2").get<double>()) + " n^2"};
}

Outcome spark_values(const Context& ctx)
{
    const double v10 = spark2_probability_bound(100, 10);
    const double v20 = spark2_probability_bound(100, 20);
    const double v30 = spark2_probability_bound(100, 30);
    bool zero = true;
    for (unsigned M = 51; M <= 100; ++M)
        zero = zero && spark2_probability_bound(100, M) == 0.0;
    write_json(ctx.out / "spark.json", {{"N", 100}, {"M10", v10}, {"M20", v20}, {"M30", v30}, {"zero_above_half", zero}});
    const bool pass = v10 <= 1.2e-3 && v20 <= 1.8e-7 && v30 <= 3.2e-12 && zero;
    return {pass, "M=10: " + fmt("%.6e", v10) + " (<= 1.2e-3), M=20: " + fmt("%.6e", v20) + " (<= 1.8e-7), M=30: " +
                      fmt("%.6e", v30) + " (<= 3.2e-12), zero for M > 50: " + (zero ? "yes" : "no")};
}

Outcome exactness(const Context& ctx)
{
    json per = json::array();
    int ok = 0;
    double worst_obj = 0.0, worst_sup = 0.0, worst_gap = 0.0;
    for (int t = 0; t < 100; ++t)
    {
        Rng rng(trial_seed(ctx.seed, "exactness", 0, static_cast<std::uint64_t>(t)));
        const Index N = t % 2 == 0 ? 32 : 64;
        std::uniform_int_distribution<Index> pickK(1, N / 8), pickL(1, 5);
        const Index K = pickK(rng), L = pickL(rng);
        const FrequencySet f = gen_frequencies(FreqMode::random, 4.0 / static_cast<double>(N), K, rng);
        const CMatrix S = complex_gaussian_matrix(static_cast<Index>(f.size()), L, rng);
        const CMatrix Y = steering_matrix(f, N) * S;
        const SdpSolution sol = solve(DataMatrix::from_full(Y, SampleMask::complete(N)), SolveMode::complete);
        const double truth = S.rowwise().norm().sum();
        const double obj_rel = std::abs(sol.objective - truth) / truth;
        const double sup = dual_feasibility_check(sol.V, 16 * N).max_norm;
        const double gap = std::abs((sol.V.adjoint() * Y).trace().real() - sol.objective) / std::max(1.0, truth);
        const bool pass = obj_rel <= 1e-5 && sup <= 1.0 + 1e-6 && gap <= 1e-6;
        ok += pass ? 1 : 0;
        worst_obj = std::max(worst_obj, obj_rel);
        worst_sup = std::max(worst_sup, sup);
        worst_gap = std::max(worst_gap, gap);
        per.push_back({{"N", N},
                       {"K", f.size()},
                       {"L", L},
                       {"objective_rel_err", obj_rel},
                       {"dual_sup", sup},
                       {"gap", gap},
                       {"iterations", sol.iterations},
                       {"pass", pass}});
    }
    write_json(ctx.out / "exactness.json", {{"instances", 100}, {"passes", ok}, {"per_instance", per}});
    return {ok == 100, std::to_string(ok) + "/100 instances; worst objective rel err " + fmt("%.2e", worst_obj) +
                           ", worst dual sup " + fmt("%.9f", worst_sup) + ", worst gap " + fmt("%.2e", worst_gap)};
}

Outcome phase(const Context& ctx)
{
    PhaseConfig c; // N=64, L=5, delta=1.2/N, M {16..64}, K {2..16}, r {0,1}, 10 runs
    c.seed = ctx.seed;
    c.workers = ctx.workers;
    const auto rows = run_phase(c);
    write_text(ctx.out / "phase.csv", csv_document(rows, true));

    auto rate = [&](Index M, double K, double r) {
        for (const auto& row : rows)
            if (row.M == M && row.K == K && row.r == r)
                return row.successes;
        throw std::runtime_error("missing phase cell");
    };
    int contain_bad = 0, km_bad = 0, cells = 0;
    for (Index M : c.M_grid)
        for (Index K : c.K_grid)
        {
            ++cells;
            const int s0 = rate(M, static_cast<double>(K), 0.0), s1 = rate(M, static_cast<double>(K), 1.0);
            contain_bad += s0 < s1 ? 1 : 0;
            if (K > M)
                km_bad += s0 + s1;
        }
    const int pilot = rate(32, 4.0, 0.0);
    return {contain_bad == 0 && km_bad == 0 && pilot >= 9,
            std::to_string(cells - contain_bad) + "/" + std::to_string(cells) +
                " cells with r=0 >= r=1; K>M successes " + std::to_string(km_bad) + "; M=32, K=4, r=0 rate " +
                std::to_string(pilot) + "/10 (need >= 9)"};
}

Outcome noisy(const Context& ctx)
{
    const NoisyScenario sc;
    const int seeds = 10;
    std::vector<std::array<NoisyPanel, 3>> trials(seeds);
    parallel_for(trials.size(), ctx.workers, [&](std::size_t t) {
        trials[t] = run_noisy_trial(trial_seed(ctx.seed, "noisy", 0, t), {}, sc);
    });
    write_text(ctx.out / "noisy.csv", csv_document(noisy_rows(trials, sc), false));
    for (const auto& panel : trials[0])
    {
        write_json(ctx.out / ("noisy_" + panel.name + "_estimate.json"), noisy_panel_json(panel, sc));
        write_text(ctx.out / ("noisy_" + panel.name + "_music.csv"), spectrum_csv(panel.music));
    }

    int good = 0, anm = 0, spur = 0, mb = 0, mc = 0;
    json per = json::array();
    for (const auto& tr : trials)
    {
        const bool a = tr[0].anm_success && tr[1].anm_success && tr[2].anm_success;
        const bool s = tr[1].spurious_fraction < 0.01 && tr[2].spurious_fraction < 0.01;
        const bool b = tr[1].music_success;
        const bool c = !tr[2].music_success;
        anm += a;
        spur += s;
        mb += b;
        mc += c;
        good += a && s && b && c;
        per.push_back({{"anm_all_panels", a},
                       {"spurious_b", tr[1].spurious_fraction},
                       {"spurious_c", tr[2].spurious_fraction},
                       {"music_b", b},
                       {"music_c_fails", c},
                       {"music_a_fails", !tr[0].music_success}});
    }
    write_json(ctx.out / "noisy_seeds.json", per);
    return {good >= 8, std::to_string(good) + "/10 seeds meet every condition (need >= 8); ANM in all panels " +
                           std::to_string(anm) + "/10, spurious < 1% " + std::to_string(spur) +
                           "/10, MUSIC resolves (b) " + std::to_string(mb) + "/10, MUSIC misses coherent pair (c) " +
                           std::to_string(mc) + "/10"};
}

//------------------------------------------------------------------------------
// Property suites

Outcome properties(const Context& ctx)
{
    Rng rng(trial_seed(ctx.seed, "properties", 0, 0));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<std::string> failed;
    auto expect = [&](bool ok, const char* what) {
        if (!ok)
            failed.emplace_back(what);
    };

    // Vandermonde round trip.
    bool vdm = true;
    for (int t = 0; t < 20; ++t)
    {
        const Index N = 32;
        const FrequencySet f = gen_frequencies(FreqMode::random, 2.0 / N, 1 + t % 6, rng);
        std::vector<double> p(f.size());
        CVector uv = CVector::Zero(N);
        for (std::size_t k = 0; k < f.size(); ++k)
        {
            p[k] = 0.5 + 1.5 * u01(rng);
            for (Index j = 0; j < N; ++j)
                uv(j) += p[k] * unit_phasor(-static_cast<double>(j) * f[k]);
        }
        uv(0) = uv(0).real();
        const VandermondeDecomp d = vandermonde_decompose(uv);
        if (d.freqs.size() != f.size())
        {
            vdm = false;
            continue;
        }
        for (std::size_t k = 0; k < f.size(); ++k)
            vdm = vdm && wrap_distance(d.freqs[k], f[k]) < 1e-8 && std::abs(d.powers[k] - p[k]) < 1e-8 * p[k] + 1e-8;
    }
    expect(vdm, "Vandermonde round trip");

    // Adjoint identity Re<T(u), Z> = sum_j w_j Re(conj(u_j) avg_j(Z)).
    bool adj = true;
    for (int t = 0; t < 20; ++t)
    {
        const Index N = 5 + t;
        CVector uv = complex_gaussian_matrix(N, 1, rng);
        uv(0) = uv(0).real();
        const CMatrix Z = complex_gaussian_matrix(N, N, rng);
        const double lhs = (toeplitz_build(uv).adjoint() * Z).trace().real();
        const CVector avg = toeplitz_adjoint_average(Z);
        const RVector w = toeplitz_multiplicity(N);
        double rhs = 0.0;
        for (Index j = 0; j < N; ++j)
            rhs += w(j) * (std::conj(uv(j)) * avg(j)).real();
        adj = adj && std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs));
    }
    expect(adj, "adjoint identity");

    // PSD projection idempotence.
    bool psd = true;
    for (int t = 0; t < 20; ++t)
    {
        const CMatrix Z = complex_gaussian_matrix(8, 8, rng);
        const CMatrix P = psd_project(Z);
        psd = psd && (psd_project(P) - P).norm() <= 1e-10 * (1.0 + P.norm());
        Eigen::SelfAdjointEigenSolver<CMatrix> es(P);
        psd = psd && es.eigenvalues().minCoeff() >= -1e-10;
    }
    expect(psd, "PSD projection idempotence");

    // Kernel: Fourier sum against the closed form.
    bool ker = true;
    for (int n : {4, 16, 64})
        for (int t = 0; t < 200; ++t)
        {
            const double f = u01(rng);
            const double m = n + 1.0;
            const double s = std::sin(kPi * f);
            const double closed = std::abs(s) < 1e-300 ? 1.0 : std::pow(std::sin(m * kPi * f) / (m * s), 4);
            ker = ker && std::abs(fejer_sq(f, n) - closed) <= 1e-10;
        }
    expect(ker, "kernel Fourier/closed-form agreement");

    // Wrap-metric axioms.
    bool wrap = true;
    for (int t = 0; t < 1000; ++t)
    {
        const double a = 3.0 * u01(rng) - 1.0, b = 3.0 * u01(rng) - 1.0, c = 3.0 * u01(rng) - 1.0;
        wrap = wrap && wrap_distance(a, a) == 0.0 && std::abs(wrap_distance(a, b) - wrap_distance(b, a)) < 1e-15;
        wrap = wrap && wrap_distance(a, b) <= 0.5 && wrap_distance(a, c) <= wrap_distance(a, b) + wrap_distance(b, c) + 1e-15;
        wrap = wrap && std::abs(wrap_distance(a + 1.0, b) - wrap_distance(a, b)) < 1e-12;
    }
    expect(wrap, "wrap-metric axioms");

    // Induced (2,inf) norm: randomized search never beats the row 1-norm,
    // and the phase-aligned input attains it.
    bool norm = true;
    for (int t = 0; t < 50; ++t)
    {
        const Index m = 2 + t % 5, k = 2 + t % 4, L = 1 + t % 3;
        const CMatrix P = complex_gaussian_matrix(m, k, rng);
        const double bound = induced_two_inf(P);
        for (int s = 0; s < 200; ++s)
        {
            CMatrix X = complex_gaussian_matrix(k, L, rng);
            for (Index r = 0; r < k; ++r)
                X.row(r) *= u01(rng) / X.row(r).norm();
            norm = norm && two_inf_norm(P * X) <= bound + 1e-12;
        }
        Index worst = 0;
        P.cwiseAbs().rowwise().sum().maxCoeff(&worst);
        CMatrix x = complex_gaussian_matrix(1, L, rng);
        x.normalize();
        CMatrix X(k, L);
        for (Index r = 0; r < k; ++r)
            X.row(r) = (std::conj(P(worst, r)) / std::abs(P(worst, r))) * x;
        norm = norm && std::abs(two_inf_norm(P * X) - bound) <= 1e-12 * bound;
    }
    expect(norm, "induced (2,inf) norm identity");

    // Seed determinism.
    ScenarioConfig sc;
    sc.N = 32;
    sc.L = 3;
    sc.delta_min = 0.05;
    sc.mask_mode = MaskMode::uniform_random;
    sc.M = 16;
    sc.sigma2 = 0.1;
    sc.seed = 42;
    const Scenario s1 = make_scenario(sc), s2 = make_scenario(sc);
    bool det = s1.freqs.values() == s2.freqs.values() && s1.data.mask.indices() == s2.data.mask.indices() &&
               (s1.data.observed - s2.data.observed).norm() == 0.0;
    det = det && trial_seed(7, "x", 1, 2) == trial_seed(7, "x", 1, 2);
    Fig1Config fc;
    fc.N = 16;
    fc.curves = {{1, 0.0}, {2, 1.0}};
    fc.delta_grid = {2.0};
    fc.runs = 2;
    const auto r1 = run_fig1(fc);
    fc.workers = 2;
    const auto r2 = run_fig1(fc);
    for (std::size_t i = 0; i < r1.size(); ++i)
        det = det && r1[i].successes == r2[i].successes && r1[i].mean_iters == r2[i].mean_iters;
    expect(det, "seed determinism");

    std::string detail = "7 suites";
    if (failed.empty())
        detail += " green";
    else
        for (const auto& f : failed)
            detail += "; failed: " + f;
    return {failed.empty(), detail};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"jsfr acceptance run"};
    Context ctx;
    std::string out = "results";
    std::vector<std::string> only;
    app.add_option("--out", out, "results directory");
    app.add_option("--seed", ctx.seed, "master seed");
    app.add_option("--workers", ctx.workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--only", only, "run only the named criteria");
    CLI11_PARSE(app, argc, argv);
    ctx.out = out;
    fs::create_directories(ctx.out);

    const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> criteria = {
        {"properties", properties},
        {"spark", spark_values},
        {"certificate", certificates},
        {"exactness", exactness},
        {"noisy", noisy},
        {"separation_n128", separation_n128},
        {"ordering", ordering},
        {"phase", phase},
    };

    int failures = 0;
    for (const auto& [name, fn] : criteria)
    {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end())
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = fn(ctx);
        }
        catch (const std::exception& e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << " [" << fmt("%.0f", secs)
                  << " s]" << std::endl;
    }
    if (only.empty() || std::find(only.begin(), only.end(), "random_sweep") != only.end())
    {
        try
        {
            random_sweep(ctx);
        }
        catch (const std::exception& e)
        {
            std::cout << "info  random-frequency sweep failed: " << e.what() << std::endl;
        }
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
