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


#include <catch_amalgamated.hpp>

#include "jsfr/anm_solver.hpp"
#include "jsfr/retrieval.hpp"

using namespace jsfr;
using Catch::Approx;

TEST_CASE("single atom retrieval is exact")
{
    const Index N = 16;
    CVector u(N);
    for (Index j = 0; j < N; ++j)
        u(j) = 2.0 * unit_phasor(-0.41 * static_cast<double>(j));
    const CMatrix Y = 3.0 * atom(0.41, N) * CMatrix::Ones(1, 2);
    const Estimate e = retrieve_from_u(u, DataMatrix::from_full(Y, SampleMask::complete(N)));
    REQUIRE(e.size() == 1);
    CHECK(e.freqs[0] == Approx(0.41).margin(1e-8));
    CHECK(e.mean_amps(0) == Approx(3.0).margin(1e-8));
}

TEST_CASE("full-rank u is rejected")
{
    CVector u = CVector::Zero(8);
    u(0) = 1.0;
    CHECK_THROWS_AS(retrieve_from_u(u, DataMatrix::from_full(CMatrix::Ones(8, 1), SampleMask::complete(8))),
                    NonUniqueError);
}

TEST_CASE("retrieval after a two-atom solve, and agreement with dual peaks")
{
    Rng rng(41);
    const Index N = 64;
    const FrequencySet f{0.2, 0.5};
    const CMatrix S = complex_gaussian_matrix(2, 3, rng);
    const DataMatrix d = DataMatrix::from_full(steering_matrix(f, N) * S, SampleMask::complete(N));
    const SdpSolution s = solve(d, SolveMode::complete);
    const Estimate e = retrieve_from_u(s.u, d);
    REQUIRE(e.size() == 2);
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(wrap_distance(e.freqs[k], f[k]) < 1e-6);
    const FrequencySet fd = retrieve_from_dual(s.V, 16 * N);
    REQUIRE(fd.size() == 2);
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(wrap_distance(fd[k], e.freqs[k]) < 1e-6);
    // Amplitude consistency on the observed rows.
    const CMatrix A = steering_matrix(e.freqs, N);
    CHECK((A * e.S_hat - d.observed).norm() < 1e-6 * d.observed.norm());
}

TEST_CASE("retrieve_from_dual trivial cases")
{
    const Index N = 16;
    const CMatrix V = atom(0.73, N) * CMatrix::Ones(1, 1) / static_cast<double>(N);
    const FrequencySet f = retrieve_from_dual(V, 16 * N);
    REQUIRE(f.size() == 1);
    CHECK(wrap_distance(f[0], 0.73) < 1e-7);
    CHECK(retrieve_from_dual(CMatrix::Zero(N, 2), 16 * N).empty());
}

TEST_CASE("refinement recovers perturbed frequencies")
{
    Rng rng(42);
    std::uniform_real_distribution<double> sgn(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep)
    {
        const Index N = 32;
        const FrequencySet f = gen_frequencies(FreqMode::random, 2.0 / N, 4, rng);
        const CMatrix Y = steering_matrix(f, N) * complex_gaussian_matrix(4, 2, rng);
        const SampleMask mask = rep % 2 ? gen_mask(MaskMode::uniform_random, N, 20, rng) : SampleMask::complete(N);
        const DataMatrix d = DataMatrix::from_full(Y, mask);
        std::vector<double> init;
        for (double x : f)
            init.push_back(x + 1e-4 * (sgn(rng) > 0 ? 1.0 : -1.0));
        const Estimate e = refine_gauss_newton(FrequencySet(init), d);
        REQUIRE(e.size() == 4);
        CHECK_FALSE(e.warning);
        for (std::size_t k = 0; k < 4; ++k)
            CHECK(wrap_distance(e.freqs[k], f[k]) < 1e-12);
    }
}

TEST_CASE("single frequency refinement converges quickly")
{
    const Index N = 24;
    const DataMatrix d = DataMatrix::from_full(atom(0.3, N) * CMatrix::Ones(1, 1), SampleMask::complete(N));
    const Estimate e = refine_gauss_newton(FrequencySet{0.3 + 2e-3}, d);
    CHECK(e.freqs[0] == Approx(0.3).margin(1e-12));
    CHECK(e.refine_iterations <= 5);
    CHECK(e.mean_amps(0) == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("more frequencies than samples returns the least-squares estimate with a warning")
{
    const SampleMask mask(16, {0, 3, 7});
    const DataMatrix d = DataMatrix::from_full(atom(0.1, 16) * CMatrix::Ones(1, 1), mask);
    const Estimate e = refine_gauss_newton(FrequencySet{0.1, 0.3, 0.5, 0.7}, d);
    CHECK(e.warning);
    CHECK(e.size() == 4);
}

TEST_CASE("noiseless pipeline meets the success thresholds")
{
    Rng rng(43);
    const Index N = 32;
    const FrequencySet f = gen_frequencies(FreqMode::random, 2.5 / N, 5, rng);
    const CMatrix S = complex_gaussian_matrix(5, 3, rng);
    const DataMatrix d = DataMatrix::from_full(steering_matrix(f, N) * S, SampleMask::complete(N));
    const SdpSolution s = solve(d, SolveMode::complete);
    const Estimate e = refine_gauss_newton(retrieve_from_u(s.u, d).freqs, d);
    REQUIRE(e.size() == 5);
    double se = 0.0, amp = 0.0;
    for (std::size_t k = 0; k < 5; ++k)
    {
        se += std::pow(wrap_distance(e.freqs[k], f[k]), 2);
        amp = std::max(amp, std::abs(e.mean_amps(static_cast<Index>(k)) - S.row(static_cast<Index>(k)).norm() / std::sqrt(3.0)));
    }
    CHECK(std::sqrt(se / 5.0) < 1e-8);
    CHECK(amp < 1e-4);
    CHECK((reconstruct(e, N) - *d.full).norm() < 1e-8 * d.full->norm());
}
