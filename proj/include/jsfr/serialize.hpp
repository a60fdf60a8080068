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
/// \file serialize.hpp
///
/// JSON forms of configs, data files and results. Complex numbers are written
/// as [re, im]; matrices as arrays of rows.
///
#ifndef JSFR_SERIALIZE_HPP
#define JSFR_SERIALIZE_HPP

#include <algorithm>
#include <string>
#include <vector>

#include "json.hpp"

#include "jsfr/anm_solver.hpp"
#include "jsfr/certificate.hpp"
#include "jsfr/common.hpp"
#include "jsfr/core_model.hpp"
#include "jsfr/retrieval.hpp"
#include "jsfr/toeplitz.hpp"

namespace jsfr
{

using json = nlohmann::json;

inline json to_json(cdouble z)
{
    return json::array({z.real(), z.imag()});
}

inline cdouble complex_from_json(const json& j)
{
    if (j.is_number())
        return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2)
        throw ConfigError("expected a complex number [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const CMatrix& m)
{
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i)
    {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c)
            row.push_back(to_json(m(i, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json to_json(const CVector& v)
{
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i)
        out.push_back(to_json(v(i)));
    return out;
}

inline json to_json(const RVector& v)
{
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i)
        out.push_back(v(i));
    return out;
}

inline CMatrix matrix_from_json(const json& j)
{
    if (!j.is_array())
        throw ConfigError("expected a matrix (array of rows)");
    const auto rows = static_cast<Index>(j.size());
    const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
    CMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
    {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw ConfigError("matrix rows have inconsistent lengths");
        for (Index c = 0; c < cols; ++c)
            m(i, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
    }
    return m;
}

inline CVector cvector_from_json(const json& j)
{
    if (!j.is_array())
        throw ConfigError("expected a complex vector");
    CVector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Index>(i)) = complex_from_json(j[i]);
    return v;
}

inline json to_json(const FrequencySet& f)
{
    return json(f.values());
}

inline json to_json(const SdpSolution& s)
{
    return {{"Y", to_json(s.Y)},
            {"u", to_json(s.u)},
            {"W", to_json(s.W)},
            {"V", to_json(s.V)},
            {"objective", s.objective},
            {"iterations", s.iterations},
            {"residuals", {{"primal", s.primal_residual}, {"dual", s.dual_residual}, {"fit", s.fit_residual}}},
            {"tau", s.tau},
            {"status", to_string(s.status)}};
}

inline json to_json(const Estimate& e)
{
    return {{"freqs", to_json(e.freqs)},
            {"mean_amps", to_json(e.mean_amps)},
            {"S_hat", to_json(e.S_hat)},
            {"source", to_string(e.source)},
            {"warning", e.warning},
            {"refine_iterations", e.refine_iterations}};
}

inline json to_json(const VandermondeDecomp& d)
{
    return {{"freqs", to_json(d.freqs)}, {"powers", d.powers}, {"residual", d.residual}, {"unique", d.unique}};
}

inline json to_json(const CertReport& r)
{
    return {{"interp_err", r.interp_err},
            {"deriv_err", r.deriv_err},
            {"sup_far", r.sup_far},
            {"sup_location", r.sup_location},
            {"min_neg_curvature", r.min_neg_curvature},
            {"pass", r.pass}};
}

inline json to_json(const BoundMargins& b)
{
    return {{"i_minus_d0", b.i_minus_d0},       {"d1", b.d1},
            {"d2", b.d2},                       {"i_minus_d3inv", b.i_minus_d3inv},
            {"alpha_minus_phi", b.alpha_minus_phi}, {"beta", b.beta}};
}

//------------------------------------------------------------------------------
// Scenario configs
//------------------------------------------------------------------------------

inline std::string to_string(FreqMode m)
{
    switch (m)
    {
    case FreqMode::equispaced:
        return "equispaced";
    case FreqMode::random:
        return "random";
    case FreqMode::explicit_list:
        return "explicit";
    }
    return "random";
}

inline std::string to_string(SourceMode m)
{
    switch (m)
    {
    case SourceMode::uncorrelated:
        return "uncorrelated";
    case SourceMode::coherent_fraction:
        return "coherent";
    case SourceMode::temporal:
        return "temporal";
    case SourceMode::random_phase:
        return "random_phase";
    }
    return "uncorrelated";
}

inline std::string to_string(MaskMode m)
{
    switch (m)
    {
    case MaskMode::complete:
        return "complete";
    case MaskMode::uniform_random:
        return "uniform";
    case MaskMode::bernoulli:
        return "bernoulli";
    case MaskMode::explicit_list:
        return "explicit";
    }
    return "complete";
}

namespace detail
{

template <typename E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> table, const char* what)
{
    for (const auto& [name, value] : table)
        if (s == name)
            return value;
    throw ConfigError(std::string("unknown ") + what + ": " + s);
}

} // namespace detail

inline json to_json(const ScenarioConfig& c)
{
    json j = {{"N", c.N},
              {"L", c.L},
              {"K", c.K},
              {"M", c.M},
              {"delta_min", c.delta_min},
              {"freq_mode", to_string(c.freq_mode)},
              {"source_mode", to_string(c.source_mode)},
              {"tau", c.tau},
              {"r", c.r},
              {"mask_mode", to_string(c.mask_mode)},
              {"p", c.p},
              {"sigma2", c.sigma2},
              {"seed", c.seed}};
    if (!c.freqs.empty())
        j["freqs"] = c.freqs;
    if (!c.powers.empty())
        j["powers"] = c.powers;
    if (!c.omega.empty())
        j["omega"] = c.omega;
    return j;
}

/// Parses and validates a scenario config; unknown keys are rejected.
inline ScenarioConfig config_from_json(const json& j)
{
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    static const std::vector<std::string> known = {"N",    "L",     "K",    "M",     "delta_min", "freq_mode",
                                                   "freqs", "source_mode", "tau", "r", "powers", "mask_mode",
                                                   "p",    "omega", "sigma2", "seed"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config key: " + key);

    ScenarioConfig c;
    try
    {
        c.N = j.value("N", c.N);
        c.L = j.value("L", c.L);
        c.K = j.value("K", c.K);
        c.M = j.value("M", c.M);
        c.delta_min = j.value("delta_min", c.delta_min);
        c.freq_mode = detail::parse_enum<FreqMode>(
            j.value("freq_mode", std::string("random")),
            {{"equispaced", FreqMode::equispaced}, {"random", FreqMode::random}, {"explicit", FreqMode::explicit_list}},
            "freq_mode");
        c.freqs = j.value("freqs", c.freqs);
        c.source_mode = detail::parse_enum<SourceMode>(j.value("source_mode", std::string("uncorrelated")),
                                                       {{"uncorrelated", SourceMode::uncorrelated},
                                                        {"coherent", SourceMode::coherent_fraction},
                                                        {"temporal", SourceMode::temporal},
                                                        {"random_phase", SourceMode::random_phase}},
                                                       "source_mode");
        c.tau = j.value("tau", c.tau);
        c.r = j.value("r", c.r);
        c.powers = j.value("powers", c.powers);
        c.mask_mode = detail::parse_enum<MaskMode>(j.value("mask_mode", std::string("complete")),
                                                   {{"complete", MaskMode::complete},
                                                    {"uniform", MaskMode::uniform_random},
                                                    {"bernoulli", MaskMode::bernoulli},
                                                    {"explicit", MaskMode::explicit_list}},
                                                   "mask_mode");
        c.p = j.value("p", c.p);
        c.omega = j.value("omega", c.omega);
        c.sigma2 = j.value("sigma2", c.sigma2);
        c.seed = j.value("seed", c.seed);
    }
    catch (const json::exception& e)
    {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (c.mask_mode == MaskMode::complete && c.M == 0)
        c.M = c.N;
    c.validate();
    return c;
}

//------------------------------------------------------------------------------
// Data files
//------------------------------------------------------------------------------

inline json to_json(const DataMatrix& d)
{
    json j = {{"N", d.N()}, {"L", d.L()}, {"omega", d.mask.indices()}, {"observed", to_json(d.observed)}};
    if (d.full)
        j["full"] = to_json(*d.full);
    if (d.noise_variance)
        j["noise_variance"] = *d.noise_variance;
    return j;
}

inline DataMatrix data_from_json(const json& j)
{
    try
    {
        DataMatrix d;
        const Index N = j.at("N").get<Index>();
        d.mask = SampleMask(N, j.at("omega").get<std::vector<Index>>());
        d.observed = matrix_from_json(j.at("observed"));
        if (d.observed.rows() != d.mask.M())
            throw ConfigError("data: observed rows do not match omega");
        if (j.contains("full"))
            d.full = matrix_from_json(j.at("full"));
        if (j.contains("noise_variance"))
            d.noise_variance = j.at("noise_variance").get<double>();
        return d;
    }
    catch (const json::exception& e)
    {
        throw ConfigError(std::string("data file: ") + e.what());
    }
}

inline json to_json(const Scenario& s, const ScenarioConfig& cfg)
{
    json j = to_json(s.data);
    j["truth"] = {{"freqs", to_json(s.freqs)}, {"S", to_json(s.sources.S)}};
    j["seed"] = cfg.seed;
    j["config"] = to_json(cfg);
    return j;
}

} // namespace jsfr

#endif
