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
/// \file core_model.hpp
///
/// Observation model for multiple measurement vectors sharing one frequency
/// support: Y = sum_k a(f_k) s_k, observed on a subset Omega of the rows
/// {0, ..., N-1} and optionally perturbed by circular complex Gaussian noise.
///
#ifndef JSFR_CORE_MODEL_HPP
#define JSFR_CORE_MODEL_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "jsfr/common.hpp"

namespace jsfr
{

using Rng = std::mt19937_64;

/// Circular complex Gaussian CN(0, variance): each real component has
/// variance variance/2.
inline cdouble complex_gaussian(Rng& rng, double variance = 1.0)
{
    std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
    const double re = nd(rng);
    const double im = nd(rng);
    return {re, im};
}

inline CMatrix complex_gaussian_matrix(Index rows, Index cols, Rng& rng,
                                       double variance = 1.0)
{
    CMatrix m(rows, cols);
    // Row-major fill so that draws do not depend on Eigen's storage order.
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            m(i, j) = complex_gaussian(rng, variance);
    return m;
}

//------------------------------------------------------------------------------
// FrequencySet
//------------------------------------------------------------------------------

/// Sorted set of distinct normalized frequencies on the unit circle [0, 1).
class FrequencySet
{
public:
    FrequencySet() = default;

    /// Values are reduced modulo 1 and sorted; exact duplicates are rejected.
    explicit FrequencySet(std::vector<double> freqs) : m_freqs(std::move(freqs))
    {
        for (double& f : m_freqs)
        {
            if (!std::isfinite(f))
                throw ConfigError("FrequencySet: non-finite frequency");
            f = wrap01(f);
        }
        std::sort(m_freqs.begin(), m_freqs.end());
        if (std::adjacent_find(m_freqs.begin(), m_freqs.end()) != m_freqs.end())
            throw ConfigError("FrequencySet: duplicate frequency");
    }

    FrequencySet(std::initializer_list<double> freqs)
        : FrequencySet(std::vector<double>(freqs))
    {
    }

    std::size_t size() const noexcept { return m_freqs.size(); }
    bool empty() const noexcept { return m_freqs.empty(); }
    double operator[](std::size_t i) const { return m_freqs[i]; }
    const std::vector<double>& values() const noexcept { return m_freqs; }
    auto begin() const noexcept { return m_freqs.begin(); }
    auto end() const noexcept { return m_freqs.end(); }

    /// Minimum wrap-around distance between two distinct elements;
    /// +infinity for fewer than two elements.
    double min_separation() const noexcept
    {
        if (m_freqs.size() < 2)
            return std::numeric_limits<double>::infinity();
        double best = 1.0 - m_freqs.back() + m_freqs.front();
        for (std::size_t i = 1; i < m_freqs.size(); ++i)
            best = std::min(best, m_freqs[i] - m_freqs[i - 1]);
        return std::min(best, 0.5);
    }

private:
    std::vector<double> m_freqs;
};

inline double min_separation(const FrequencySet& freqs)
{
    return freqs.min_separation();
}

//------------------------------------------------------------------------------
// Sources, masks, data
//------------------------------------------------------------------------------

/// K x L source amplitudes; row k is c_k * phi_k with c_k = ||s_k||_2.
struct SourceMatrix
{
    CMatrix S;

    Index rows() const noexcept { return S.rows(); }
    Index cols() const noexcept { return S.cols(); }

    RVector magnitudes() const { return S.rowwise().norm(); }

    CMatrix directions() const
    {
        CMatrix phi = S;
        for (Index k = 0; k < S.rows(); ++k)
        {
            const double c = S.row(k).norm();
            if (c > 0.0)
                phi.row(k) /= c;
        }
        return phi;
    }
};

/// Sorted distinct sampling indices in {0, ..., N-1}.
class SampleMask
{
public:
    SampleMask() = default;

    SampleMask(Index ambient, std::vector<Index> omega)
        : m_N(ambient), m_omega(std::move(omega))
    {
        std::sort(m_omega.begin(), m_omega.end());
        if (m_omega.empty())
            throw ConfigError("SampleMask: empty index set");
        if (std::adjacent_find(m_omega.begin(), m_omega.end()) != m_omega.end())
            throw ConfigError("SampleMask: duplicate index");
        if (m_omega.front() < 0 || m_omega.back() >= m_N)
            throw ConfigError("SampleMask: index out of range");
    }

    static SampleMask complete(Index ambient)
    {
        std::vector<Index> all(static_cast<std::size_t>(ambient));
        for (Index j = 0; j < ambient; ++j)
            all[static_cast<std::size_t>(j)] = j;
        return SampleMask(ambient, std::move(all));
    }

    Index N() const noexcept { return m_N; }
    Index M() const noexcept { return static_cast<Index>(m_omega.size()); }
    bool is_complete() const noexcept { return M() == m_N; }
    const std::vector<Index>& indices() const noexcept { return m_omega; }
    Index operator[](std::size_t i) const { return m_omega[i]; }

    /// Row selection of a full N x L matrix.
    CMatrix restrict(const CMatrix& full) const
    {
        if (full.rows() != m_N)
            throw DimensionError("SampleMask::restrict: row count mismatch");
        CMatrix out(M(), full.cols());
        for (Index i = 0; i < M(); ++i)
            out.row(i) = full.row(m_omega[static_cast<std::size_t>(i)]);
        return out;
    }

    /// Indicator vector of length N.
    std::vector<bool> indicator() const
    {
        std::vector<bool> in(static_cast<std::size_t>(m_N), false);
        for (Index j : m_omega)
            in[static_cast<std::size_t>(j)] = true;
        return in;
    }

    bool operator==(const SampleMask&) const = default;

private:
    Index m_N = 0;
    std::vector<Index> m_omega;
};

/// Observed data Y_Omega (M x L) with its mask; the full N x L matrix is kept
/// when it is known (synthetic data).
struct DataMatrix
{
    CMatrix observed;
    SampleMask mask;
    std::optional<CMatrix> full;
    std::optional<double> noise_variance;

    Index N() const noexcept { return mask.N(); }
    Index M() const noexcept { return mask.M(); }
    Index L() const noexcept { return observed.cols(); }

    static DataMatrix from_full(CMatrix Y, const SampleMask& mask)
    {
        DataMatrix d;
        d.observed = mask.restrict(Y);
        d.mask = mask;
        d.full = std::move(Y);
        return d;
    }

    /// Same data with a new mask; requires the full matrix.
    DataMatrix with_mask(const SampleMask& mask) const
    {
        if (!full)
            throw ConfigError("DataMatrix::with_mask: full data not available");
        DataMatrix d = from_full(*full, mask);
        d.noise_variance = noise_variance;
        return d;
    }
};

//------------------------------------------------------------------------------
// Atoms and synthesis
//------------------------------------------------------------------------------

/// Steering vector a(f) = [1, e^{i2 pi f}, ..., e^{i2 pi (N-1) f}]^T.
inline CVector atom(double f, Index N)
{
    if (N < 1)
        throw DimensionError("atom: N must be >= 1");
    CVector a(N);
    for (Index j = 0; j < N; ++j)
        a(j) = unit_phasor(static_cast<double>(j) * f);
    return a;
}

/// Rows of a(f) restricted to an arbitrary index list.
inline CVector atom(double f, std::span<const Index> rows)
{
    CVector a(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        a(static_cast<Index>(i)) = unit_phasor(static_cast<double>(rows[i]) * f);
    return a;
}

/// Columns a(f_k) for every k; N x K.
inline CMatrix steering_matrix(std::span<const double> freqs, Index N)
{
    CMatrix A(N, static_cast<Index>(freqs.size()));
    for (std::size_t k = 0; k < freqs.size(); ++k)
        A.col(static_cast<Index>(k)) = atom(freqs[k], N);
    return A;
}

inline CMatrix steering_matrix(std::span<const double> freqs, std::span<const Index> rows)
{
    CMatrix A(static_cast<Index>(rows.size()), static_cast<Index>(freqs.size()));
    for (std::size_t k = 0; k < freqs.size(); ++k)
        A.col(static_cast<Index>(k)) = atom(freqs[k], rows);
    return A;
}

inline CMatrix steering_matrix(const FrequencySet& freqs, Index N)
{
    return steering_matrix(std::span<const double>(freqs.values()), N);
}

inline CMatrix steering_matrix(const FrequencySet& freqs, const SampleMask& mask)
{
    return steering_matrix(std::span<const double>(freqs.values()),
                           std::span<const Index>(mask.indices()));
}

/// Complete noiseless data Y = A(f) S.
inline DataMatrix synthesize(const FrequencySet& freqs, const SourceMatrix& src, Index N)
{
    if (static_cast<Index>(freqs.size()) != src.rows())
        throw DimensionError("synthesize: |freqs| != rows(S)");
    if (N < 1)
        throw DimensionError("synthesize: N must be >= 1");
    CMatrix Y = steering_matrix(freqs, N) * src.S;
    return DataMatrix::from_full(std::move(Y), SampleMask::complete(N));
}

//------------------------------------------------------------------------------
// Scenario configuration
//------------------------------------------------------------------------------

enum class FreqMode
{
    equispaced,
    random,
    explicit_list
};

enum class SourceMode
{
    uncorrelated,
    coherent_fraction,
    temporal,
    random_phase // constant modulus sqrt(power), i.i.d. uniform phases
};

enum class MaskMode
{
    complete,
    uniform_random,
    bernoulli,
    explicit_list
};

struct ScenarioConfig
{
    Index N = 64;
    Index L = 1;
    Index K = 0; // 0: as many as the frequency generator yields
    Index M = 0; // 0: M = N
    double delta_min = 0.0;
    FreqMode freq_mode = FreqMode::random;
    std::vector<double> freqs; // explicit mode
    SourceMode source_mode = SourceMode::uncorrelated;
    double tau = 0.0;          // coherent fraction
    double r = 0.0;            // temporal correlation
    std::vector<double> powers; // optional per-source power scaling
    MaskMode mask_mode = MaskMode::complete;
    double p = 1.0;             // Bernoulli keep probability
    std::vector<Index> omega;   // explicit mask
    double sigma2 = 0.0;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (N < 1 || L < 1)
            throw ConfigError("scenario: N and L must be >= 1");
        if (K < 0)
            throw ConfigError("scenario: K must be >= 0");
        if (M < 0 || M > N)
            throw ConfigError("scenario: need 0 <= M <= N");
        if (tau < 0.0 || tau > 1.0)
            throw ConfigError("scenario: need 0 <= tau <= 1");
        if (r < -1.0 || r > 1.0)
            throw ConfigError("scenario: need -1 <= r <= 1");
        if (sigma2 < 0.0)
            throw ConfigError("scenario: sigma2 must be >= 0");
        if (freq_mode != FreqMode::explicit_list && !(delta_min > 0.0 && delta_min < 1.0))
            throw ConfigError("scenario: need 0 < delta_min < 1");
        if (freq_mode == FreqMode::explicit_list && freqs.empty())
            throw ConfigError("scenario: explicit frequency list is empty");
        if (mask_mode == MaskMode::bernoulli && !(p > 0.0 && p <= 1.0))
            throw ConfigError("scenario: need 0 < p <= 1");
    }
};

//------------------------------------------------------------------------------
// Generators
//------------------------------------------------------------------------------

/// Equispaced: floor(1/delta_min) frequencies with a uniform random offset in
/// [0, 1/K). Random: frequencies drawn uniformly from the set still compatible
/// with the separation constraint, until the circle is saturated or K_target
/// is reached.
inline FrequencySet gen_frequencies(FreqMode mode, double delta_min,
                                    std::optional<Index> K_target, Rng& rng)
{
    if (!(delta_min > 0.0 && delta_min < 1.0))
        throw ConfigError("gen_frequencies: need 0 < delta_min < 1");
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    if (mode == FreqMode::equispaced)
    {
        const auto K = static_cast<Index>(std::floor(1.0 / delta_min + 1e-9));
        if (K_target && *K_target > K)
            throw SaturationError("gen_frequencies: K exceeds separation capacity");
        const double spacing = 1.0 / static_cast<double>(K);
        const double offset = unif(rng) * spacing;
        std::vector<double> f(static_cast<std::size_t>(K));
        for (Index k = 0; k < K; ++k)
            f[static_cast<std::size_t>(k)] = offset + static_cast<double>(k) * spacing;
        return FrequencySet(std::move(f));
    }
    if (mode != FreqMode::random)
        throw ConfigError("gen_frequencies: unsupported mode");

    // Guard keeps the realized separation >= delta_min after rounding.
    const double guard = delta_min * (1.0 + 1e-12);
    std::vector<double> accepted;
    accepted.push_back(unif(rng));
    const std::size_t want =
        K_target ? static_cast<std::size_t>(*K_target) : std::numeric_limits<std::size_t>::max();
    while (accepted.size() < want)
    {
        std::sort(accepted.begin(), accepted.end());
        // Admissible arcs between cyclically consecutive frequencies.
        std::vector<std::pair<double, double>> arcs;
        double total = 0.0;
        for (std::size_t i = 0; i < accepted.size(); ++i)
        {
            const double lo = accepted[i];
            const double hi = (i + 1 < accepted.size()) ? accepted[i + 1] : accepted.front() + 1.0;
            const double len = (hi - guard) - (lo + guard);
            if (len > 0.0)
            {
                arcs.emplace_back(lo + guard, len);
                total += len;
            }
        }
        if (total <= 0.0)
            break;
        double pick = unif(rng) * total;
        std::size_t a = 0;
        while (a + 1 < arcs.size() && pick >= arcs[a].second)
        {
            pick -= arcs[a].second;
            ++a;
        }
        accepted.push_back(wrap01(arcs[a].first + std::min(pick, arcs[a].second)));
    }
    if (K_target && accepted.size() < static_cast<std::size_t>(*K_target))
        throw SaturationError("gen_frequencies: cannot place K frequencies at the requested separation");
    return FrequencySet(std::move(accepted));
}

/// L x L Toeplitz correlation matrix with entries r^{|i-j|}.
inline RMatrix temporal_correlation(Index L, double r)
{
    RMatrix R(L, L);
    for (Index i = 0; i < L; ++i)
        for (Index j = 0; j < L; ++j)
            R(i, j) = std::pow(r, static_cast<double>(std::abs(i - j)));
    return R;
}

/// Symmetric PSD square root with negative eigenvalues clamped.
inline RMatrix psd_sqrt(const RMatrix& R)
{
    Eigen::SelfAdjointEigenSolver<RMatrix> es(R);
    RVector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

inline CMatrix psd_sqrt(const CMatrix& R)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(R);
    RVector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

/// Source matrix generator.
///   uncorrelated      i.i.d. CN(0,1)
///   coherent_fraction ceil(tau K) rows replaced by scaled copies of one
///                     shared Gaussian row (unit phase times |scale| in [0.5, 1.5])
///   temporal          S0 R(r)^{1/2}
///   random_phase      unit modulus entries with uniform phases
inline SourceMatrix gen_sources(SourceMode mode, Index K, Index L, Rng& rng,
                                double tau = 0.0, double r = 0.0)
{
    if (K < 1 || L < 1)
        throw ConfigError("gen_sources: K and L must be >= 1");
    switch (mode)
    {
    case SourceMode::uncorrelated:
        return {complex_gaussian_matrix(K, L, rng)};
    case SourceMode::coherent_fraction: {
        if (tau < 0.0 || tau > 1.0)
            throw ConfigError("gen_sources: tau outside [0, 1]");
        CMatrix S = complex_gaussian_matrix(K, L, rng);
        CMatrix shared = complex_gaussian_matrix(1, L, rng);
        std::uniform_real_distribution<double> mag(0.5, 1.5);
        std::uniform_real_distribution<double> phase(0.0, 1.0);
        const auto m = static_cast<Index>(std::ceil(tau * static_cast<double>(K) - 1e-12));
        for (Index k = 0; k < K; ++k)
        {
            const double a = mag(rng);
            const double th = phase(rng);
            if (k < m)
                S.row(k) = (a * unit_phasor(th)) * shared;
        }
        return {std::move(S)};
    }
    case SourceMode::temporal: {
        if (r < -1.0 || r > 1.0)
            throw ConfigError("gen_sources: |r| > 1");
        CMatrix S0 = complex_gaussian_matrix(K, L, rng);
        RMatrix root = psd_sqrt(temporal_correlation(L, r));
        return {S0 * root.cast<cdouble>()};
    }
    case SourceMode::random_phase: {
        std::uniform_real_distribution<double> phase(0.0, 1.0);
        CMatrix S(K, L);
        for (Index k = 0; k < K; ++k)
            for (Index t = 0; t < L; ++t)
                S(k, t) = unit_phasor(phase(rng));
        return {std::move(S)};
    }
    }
    throw ConfigError("gen_sources: unknown mode");
}

/// Sampling mask generator. `count_or_p` is M for uniform_random and the keep
/// probability for bernoulli; ignored for complete.
inline SampleMask gen_mask(MaskMode mode, Index N, double count_or_p, Rng& rng)
{
    if (N < 1)
        throw ConfigError("gen_mask: N must be >= 1");
    switch (mode)
    {
    case MaskMode::complete:
        return SampleMask::complete(N);
    case MaskMode::uniform_random: {
        const auto M = static_cast<Index>(std::llround(count_or_p));
        if (M < 1 || M > N)
            throw ConfigError("gen_mask: need 1 <= M <= N");
        std::vector<Index> pool(static_cast<std::size_t>(N));
        for (Index j = 0; j < N; ++j)
            pool[static_cast<std::size_t>(j)] = j;
        // Partial Fisher-Yates.
        for (Index i = 0; i < M; ++i)
        {
            std::uniform_int_distribution<Index> pick(i, N - 1);
            std::swap(pool[static_cast<std::size_t>(i)],
                      pool[static_cast<std::size_t>(pick(rng))]);
        }
        pool.resize(static_cast<std::size_t>(M));
        return SampleMask(N, std::move(pool));
    }
    case MaskMode::bernoulli: {
        const double p = count_or_p;
        if (!(p > 0.0 && p <= 1.0))
            throw ConfigError("gen_mask: need 0 < p <= 1");
        std::bernoulli_distribution keep(p);
        constexpr int kMaxAttempts = 100;
        for (int attempt = 0; attempt < kMaxAttempts; ++attempt)
        {
            std::vector<Index> omega;
            for (Index j = 0; j < N; ++j)
                if (keep(rng))
                    omega.push_back(j);
            if (!omega.empty())
                return SampleMask(N, std::move(omega));
        }
        throw SaturationError("gen_mask: Bernoulli draws kept no index");
    }
    case MaskMode::explicit_list:
        break;
    }
    throw ConfigError("gen_mask: explicit masks are constructed directly");
}

/// Adds CN(0, sigma2) noise to every observed entry.
inline DataMatrix add_noise(const DataMatrix& data, double sigma2, Rng& rng)
{
    if (sigma2 < 0.0)
        throw ConfigError("add_noise: sigma2 must be >= 0");
    DataMatrix out = data;
    out.noise_variance = sigma2;
    if (sigma2 == 0.0)
        return out;
    out.observed += complex_gaussian_matrix(data.observed.rows(), data.observed.cols(), rng, sigma2);
    return out;
}

/// A generated problem instance: truth plus observed data.
struct Scenario
{
    FrequencySet freqs;
    SourceMatrix sources;
    DataMatrix data;
};

/// Draws frequencies, sources, mask and noise in that order from one stream
/// seeded with cfg.seed.
inline Scenario make_scenario(const ScenarioConfig& cfg)
{
    cfg.validate();
    Rng rng(cfg.seed);
    Scenario sc;
    switch (cfg.freq_mode)
    {
    case FreqMode::explicit_list:
        sc.freqs = FrequencySet(cfg.freqs);
        if (cfg.K > 0 && static_cast<Index>(sc.freqs.size()) != cfg.K)
            throw ConfigError("scenario: K does not match the explicit frequency list");
        break;
    case FreqMode::equispaced: {
        sc.freqs = gen_frequencies(FreqMode::equispaced, cfg.delta_min,
                                   cfg.K > 0 ? std::optional<Index>(cfg.K) : std::nullopt, rng);
        if (cfg.K > 0 && static_cast<Index>(sc.freqs.size()) > cfg.K)
        {
            std::vector<double> f(sc.freqs.begin(), sc.freqs.begin() + cfg.K);
            sc.freqs = FrequencySet(std::move(f));
        }
        break;
    }
    case FreqMode::random:
        sc.freqs = gen_frequencies(FreqMode::random, cfg.delta_min,
                                   cfg.K > 0 ? std::optional<Index>(cfg.K) : std::nullopt, rng);
        break;
    }
    const auto K = static_cast<Index>(sc.freqs.size());
    sc.sources = gen_sources(cfg.source_mode, K, cfg.L, rng, cfg.tau, cfg.r);
    if (!cfg.powers.empty())
    {
        if (static_cast<Index>(cfg.powers.size()) != K)
            throw ConfigError("scenario: powers must have one entry per frequency");
        for (Index k = 0; k < K; ++k)
        {
            const double pk = cfg.powers[static_cast<std::size_t>(k)];
            if (!(pk >= 0.0))
                throw ConfigError("scenario: powers must be >= 0");
            sc.sources.S.row(k) *= std::sqrt(pk);
        }
    }

    SampleMask mask;
    switch (cfg.mask_mode)
    {
    case MaskMode::complete:
        if (cfg.M != 0 && cfg.M != cfg.N)
            throw ConfigError("scenario: complete mask requires M = N");
        mask = SampleMask::complete(cfg.N);
        break;
    case MaskMode::uniform_random:
        mask = gen_mask(MaskMode::uniform_random, cfg.N, static_cast<double>(cfg.M > 0 ? cfg.M : cfg.N), rng);
        break;
    case MaskMode::bernoulli:
        mask = gen_mask(MaskMode::bernoulli, cfg.N, cfg.p, rng);
        break;
    case MaskMode::explicit_list:
        mask = SampleMask(cfg.N, cfg.omega);
        break;
    }
    sc.data = DataMatrix::from_full(steering_matrix(sc.freqs, cfg.N) * sc.sources.S, mask);
    if (cfg.sigma2 > 0.0)
        sc.data = add_noise(sc.data, cfg.sigma2, rng);
    return sc;
}

} // namespace jsfr

#endif
