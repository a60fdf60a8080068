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

// jsfr command line: scenario synthesis, single solves and the Monte Carlo
// experiments. Exit codes: 0 done, 2 bad config or arguments, 3 I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "jsfr/experiments.hpp"

namespace fs = std::filesystem;
using namespace jsfr;

namespace
{

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct IoError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    try
    {
        return json::parse(in);
    }
    catch (const json::parse_error& e)
    {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
    {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec)
            throw IoError("cannot create " + path.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << text;
    if (!out)
        throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j)
{
    write_text(path, j.dump(2) + "\n");
}

void write_csv(const fs::path& path, const std::vector<exp::CsvRow>& rows, bool overlay)
{
    write_text(path, exp::csv_document(rows, overlay));
}

struct Common
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> runs;
    bool paper_scale = false;
    int workers = 1;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_default)
{
    cmd->add_option("--config", c.config, "JSON config file");
    cmd->add_option("--seed", c.seed, "master seed");
    cmd->add_option("--out", c.out, "output path")->default_val(out_default);
    cmd->add_option("--runs", c.runs, "trials per cell")->check(CLI::PositiveNumber);
    cmd->add_flag("--paper-scale", c.paper_scale, "N=128 and 20 runs per cell");
    cmd->add_option("--workers", c.workers, "worker threads")->default_val(1)->check(CLI::PositiveNumber);
}

json config_or_empty(const Common& c)
{
    return c.config.empty() ? json::object() : read_json(c.config);
}

int cmd_synth(const Common& c)
{
    if (c.config.empty())
        throw ConfigError("synth: --config is required");
    ScenarioConfig cfg = config_from_json(read_json(c.config));
    if (c.seed)
        cfg.seed = *c.seed;
    const Scenario s = make_scenario(cfg);
    write_json(c.out, to_json(s, cfg));
    return 0;
}

int cmd_solve(const Common& c, const std::string& mode_name, std::optional<double> eps)
{
    if (c.config.empty())
        throw ConfigError("solve: --config must name a data file");
    const DataMatrix data = data_from_json(read_json(c.config));
    std::string mode = mode_name;
    if (mode == "auto")
        mode = data.noise_variance ? "noisy" : (data.mask.is_complete() ? "complete" : "missing");

    SdpSolution sol;
    if (mode == "complete")
        sol = solve(data, SolveMode::complete);
    else if (mode == "missing")
        sol = solve(data, SolveMode::missing);
    else if (mode == "noisy")
    {
        double e = 0.0;
        if (eps)
            e = *eps;
        else if (data.noise_variance)
            e = noise_ball_radius(data.M(), data.L(), *data.noise_variance);
        else
            throw ConfigError("solve: noisy mode needs --eps or a noise_variance in the data file");
        try
        {
            sol = solve_noisy(data, e);
        }
        catch (const BisectionError& err)
        {
            std::cerr << "warning: " << err.what() << "\n";
            throw;
        }
    }
    else
        throw ConfigError("solve: unknown mode " + mode);

    json est;
    try
    {
        if (mode == "noisy")
            est = to_json(retrieve_from_u(sol.u, DataMatrix::from_full(sol.Y, SampleMask::complete(data.N()))));
        else
        {
            const Estimate raw = retrieve_from_u(sol.u, data);
            est = to_json(refine_gauss_newton(raw.freqs, data));
        }
    }
    catch (const NonUniqueError& err)
    {
        est = {{"error", err.what()}, {"non_unique", true}};
    }
    catch (const NotPsdError& err)
    {
        est = {{"error", err.what()}, {"non_unique", false}};
    }
    est["mode"] = mode;
    const fs::path dir(c.out);
    write_json(dir / "solution.json", to_json(sol));
    write_json(dir / "estimate.json", est);
    std::cout << "status " << to_string(sol.status) << ", iterations " << sol.iterations << ", objective "
              << sol.objective << "\n";
    return 0;
}

int cmd_certify(const Common& c)
{
    exp::CertifyConfig cfg = exp::certify_config_from_json(config_or_empty(c));
    if (c.seed)
        cfg.seed = *c.seed;
    if (c.runs)
        cfg.trials = *c.runs;
    const json rep = exp::run_certify(cfg);
    write_json(c.out, rep);
    std::cout << "pass rate " << rep.at("pass_rate").get<double>() << " over " << cfg.trials << " trials\n";
    return 0;
}

int cmd_fig1(const Common& c, const std::string& variant)
{
    json j = config_or_empty(c);
    if (!variant.empty())
        j["variant"] = variant;
    exp::Fig1Config cfg = exp::fig1_config_from_json(j);
    if (c.paper_scale)
    {
        cfg.N = 128;
        cfg.runs = 20;
    }
    if (c.seed)
        cfg.seed = *c.seed;
    if (c.runs)
        cfg.runs = *c.runs;
    cfg.workers = c.workers;
    const auto rows = exp::run_fig1(cfg);
    const fs::path out = fs::path(c.out) / (exp::fig1_name(cfg.variant) + ".csv");
    write_csv(out, rows, false);
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_phase(const Common& c)
{
    exp::PhaseConfig cfg = exp::phase_config_from_json(config_or_empty(c));
    if (c.paper_scale)
    {
        cfg.N = 128;
        cfg.runs = 20;
        cfg.M_grid.clear();
        cfg.K_grid.clear();
        for (Index m = 8; m <= 128; m += 4)
            cfg.M_grid.push_back(m);
        for (Index k = 2; k <= 84; k += 2)
            cfg.K_grid.push_back(k);
        cfg.r_list = {0.0, 0.5, 0.9, 1.0};
    }
    if (c.seed)
        cfg.seed = *c.seed;
    if (c.runs)
        cfg.runs = *c.runs;
    cfg.workers = c.workers;
    const auto rows = exp::run_phase(cfg);
    const fs::path out = fs::path(c.out) / "phase.csv";
    write_csv(out, rows, true);
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_noisy(const Common& c)
{
    if (!c.config.empty())
        throw ConfigError("exp-noisy: the scenario is fixed; use --seed and --runs");
    const std::uint64_t master = c.seed.value_or(0);
    const int seeds = c.runs.value_or(1);
    const exp::NoisyScenario sc;
    const fs::path dir(c.out);

    std::vector<std::array<exp::NoisyPanel, 3>> trials(static_cast<std::size_t>(seeds));
    exp::parallel_for(trials.size(), c.workers, [&](std::size_t t) {
        trials[t] = exp::run_noisy_trial(exp::trial_seed(master, "noisy", 0, t));
    });

    write_csv(dir / "noisy.csv", exp::noisy_rows(trials, sc), false);

    for (const auto& panel : trials[0])
    {
        write_json(dir / ("noisy_" + panel.name + "_estimate.json"), exp::noisy_panel_json(panel, sc));
        write_text(dir / ("noisy_" + panel.name + "_music.csv"), exp::spectrum_csv(panel.music));
    }
    std::cout << "wrote " << (dir / "noisy.csv").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"jsfr: joint sparse frequency recovery experiments"};
    app.require_subcommand(1);

    Common synth_o, solve_o, cert_o, fig1_o, phase_o, noisy_o;
    auto* synth = app.add_subcommand("synth", "draw a scenario and write a data file");
    add_common(synth, synth_o, "data.json");

    auto* solve_cmd = app.add_subcommand("solve", "solve and retrieve frequencies from a data file");
    add_common(solve_cmd, solve_o, "solve_out");
    std::string mode = "auto";
    std::optional<double> eps;
    solve_cmd->add_option("--mode", mode, "complete | missing | noisy | auto")
        ->check(CLI::IsMember({"auto", "complete", "missing", "noisy"}));
    solve_cmd->add_option("--eps", eps, "noise ball radius for the noisy mode");

    auto* cert = app.add_subcommand("certify", "build and check dual certificates");
    add_common(cert, cert_o, "certify.json");

    auto* fig1 = app.add_subcommand("exp-fig1", "success rate versus minimum separation");
    add_common(fig1, fig1_o, "results");
    std::string variant;
    fig1->add_option("--variant", variant, "equispaced | random")->check(CLI::IsMember({"equispaced", "random"}));

    auto* phase = app.add_subcommand("exp-phase", "success rate over the (M, K) grid");
    add_common(phase, phase_o, "results");

    auto* noisy = app.add_subcommand("exp-noisy", "noisy ANM versus MUSIC comparison");
    add_common(noisy, noisy_o, "results");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try
    {
        if (*synth)
            return cmd_synth(synth_o);
        if (*solve_cmd)
            return cmd_solve(solve_o, mode, eps);
        if (*cert)
            return cmd_certify(cert_o);
        if (*fig1)
            return cmd_fig1(fig1_o, variant);
        if (*phase)
            return cmd_phase(phase_o);
        if (*noisy)
            return cmd_noisy(noisy_o);
    }
    catch (const ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    catch (const DimensionError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    catch (const SaturationError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    catch (const IoError& e)
    {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
