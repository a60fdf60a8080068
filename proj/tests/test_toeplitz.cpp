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

#include <algorithm>

#include "jsfr/toeplitz.hpp"

using namespace jsfr;
using Catch::Approx;

namespace
{

CVector u_from_atoms(const std::vector<double>& f, const std::vector<double>& p, Index N)
{
    CVector u = CVector::Zero(N);
    for (std::size_t k = 0; k < f.size(); ++k)
        for (Index j = 0; j < N; ++j)
            u(j) += p[k] * unit_phasor(-static_cast<double>(j) * f[k]);
    return u;
}

CMatrix random_hermitian(Index N, Rng& rng)
{
    const CMatrix G = complex_gaussian_matrix(N, N, rng);
    return 0.5 * (G + G.adjoint());
}

// Brute-force NNLS: best unconstrained least-squares fit over all supports.
RVector nnls_brute(const RMatrix& A, const RVector& b)
{
    const Index n = A.cols();
    RVector best = RVector::Zero(n);
    double best_cost = b.squaredNorm();
    for (unsigned mask = 1; mask < (1u << n); ++mask)
    {
        std::vector<Index> cols;
        for (Index j = 0; j < n; ++j)
            if (mask & (1u << j))
                cols.push_back(j);
        RMatrix As(A.rows(), static_cast<Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c)
            As.col(static_cast<Index>(c)) = A.col(cols[c]);
        const RVector xs = As.colPivHouseholderQr().solve(b);
        if ((xs.array() < 0.0).any())
            continue;
        const double cost = (As * xs - b).squaredNorm();
        if (cost < best_cost)
        {
            best_cost = cost;
            best.setZero();
            for (std::size_t c = 0; c < cols.size(); ++c)
                best(cols[c]) = xs(static_cast<Index>(c));
        }
    }
    return best;
}

} // namespace

TEST_CASE("toeplitz_build small cases")
{
    CVector u(3);
    u << 1.0, 0.0, 0.0;
    CHECK((toeplitz_build(u) - CMatrix::Identity(3, 3)).norm() == 0.0);
    CVector v(2);
    v << 2.0, 2.0;
    CHECK((toeplitz_build(v) - 2.0 * CMatrix::Ones(2, 2)).norm() == 0.0);
    CVector bad(2);
    bad << cdouble(1.0, 0.5), 0.0;
    CHECK_THROWS_AS(toeplitz_build(bad), ConfigError);
}

TEST_CASE("toeplitz_build equals A P A^H")
{
    const std::vector<double> f = {0.07, 0.33, 0.71};
    const std::vector<double> p = {1.0, 2.5, 0.4};
    const Index N = 12;
    const CMatrix T = toeplitz_build(u_from_atoms(f, p, N));
    CMatrix APA = CMatrix::Zero(N, N);
    for (std::size_t k = 0; k < f.size(); ++k)
        APA += p[k] * atom(f[k], N) * atom(f[k], N).adjoint();
    CHECK((T - APA).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((T - T.adjoint()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adjoint average inverts the build and satisfies the adjoint identity")
{
    CHECK((toeplitz_adjoint_average(CMatrix::Identity(3, 3)) - CVector::Unit(3, 0)).norm() == 0.0);
    Rng rng(21);
    for (int rep = 0; rep < 20; ++rep)
    {
        const Index N = 3 + rep % 9;
        CVector u = complex_gaussian_matrix(N, 1, rng).col(0);
        u(0) = u(0).real();
        CHECK((toeplitz_adjoint_average(toeplitz_build(u)) - u).norm() < 1e-13 * u.norm());

        const CMatrix Z = complex_gaussian_matrix(N, N, rng);
        const double lhs = (toeplitz_build(u).adjoint() * Z).trace().real();
        const CVector avg = toeplitz_adjoint_average(Z);
        const RVector w = toeplitz_multiplicity(N);
        double rhs = 0.0;
        for (Index j = 0; j < N; ++j)
            rhs += w(j) * (std::conj(u(j)) * avg(j)).real();
        CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("psd_project")
{
    CMatrix D = CMatrix::Zero(2, 2);
    D(0, 0) = 1.0;
    D(1, 1) = -1.0;
    CMatrix E = CMatrix::Zero(2, 2);
    E(0, 0) = 1.0;
    CHECK((psd_project(D) - E).norm() < 1e-15);

    Rng rng(22);
    for (int rep = 0; rep < 10; ++rep)
    {
        const Index N = 2 + rep;
        const CMatrix Z = random_hermitian(N, rng);
        const CMatrix P = psd_project(Z);
        CHECK((psd_project(P) - P).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<CMatrix> es(P);
        CHECK(es.eigenvalues().minCoeff() > -1e-12);

        // Spectral characterization: the residual Z - P is negative semidefinite
        // and orthogonal to P.
        Eigen::SelfAdjointEigenSolver<CMatrix> er(Z - P);
        CHECK(er.eigenvalues().maxCoeff() < 1e-12);
        CHECK(std::abs((P.adjoint() * (Z - P)).trace()) < 1e-10);

        // No random PSD matrix is closer.
        const double d = (Z - P).norm();
        for (int t = 0; t < 20; ++t)
        {
            const CMatrix G = complex_gaussian_matrix(N, N, rng);
            const CMatrix X = P + 0.1 * G * G.adjoint();
            CHECK((Z - X).norm() >= d - 1e-12);
        }

        const CMatrix G = complex_gaussian_matrix(N, 2, rng);
        const CMatrix Q = G * G.adjoint();
        CHECK((psd_project(Q) - Q).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("nnls agrees with brute-force support enumeration")
{
    Rng rng(23);
    std::normal_distribution<double> g;
    for (int rep = 0; rep < 50; ++rep)
    {
        const Index m = 8, n = 5;
        RMatrix A(m, n);
        RVector b(m);
        for (Index i = 0; i < m; ++i)
        {
            b(i) = g(rng);
            for (Index j = 0; j < n; ++j)
                A(i, j) = g(rng);
        }
        const RVector x = nnls(A, b);
        const RVector y = nnls_brute(A, b);
        CHECK((x.array() >= 0.0).all());
        CHECK((A * x - b).squaredNorm() == Approx((A * y - b).squaredNorm()).epsilon(1e-9).margin(1e-12));
    }
}

TEST_CASE("vandermonde decomposition examples")
{
    {
        const VandermondeDecomp d = vandermonde_decompose(u_from_atoms({0.3}, {2.0}, 8));
        REQUIRE(d.order == 1);
        CHECK(d.unique);
        CHECK(d.freqs[0] == Approx(0.3).margin(1e-10));
        CHECK(d.powers[0] == Approx(2.0).margin(1e-10));
    }
    {
        const VandermondeDecomp d = vandermonde_decompose(u_from_atoms({0.1, 0.35}, {1.0, 2.0}, 8));
        REQUIRE(d.freqs.size() == 2);
        CHECK(d.freqs[0] == Approx(0.1).margin(1e-8));
        CHECK(d.freqs[1] == Approx(0.35).margin(1e-8));
    }
    {
        CVector u = CVector::Zero(6);
        u(0) = 1.0;
        const VandermondeDecomp d = vandermonde_decompose(u);
        CHECK(d.order == 6);
        CHECK_FALSE(d.unique);
        CHECK(d.freqs.empty());
    }
}

TEST_CASE("vandermonde round trip on random separated atoms")
{
    Rng rng(24);
    std::uniform_real_distribution<double> pw(0.2, 3.0);
    for (int rep = 0; rep < 40; ++rep)
    {
        const Index N = 16 + 4 * (rep % 5);
        const double delta = 1.5 / static_cast<double>(N);
        const Index K = 1 + rep % (N / 4);
        const FrequencySet f = gen_frequencies(FreqMode::random, delta, K, rng);
        std::vector<double> p(f.size());
        for (double& x : p)
            x = pw(rng);
        const CVector u = u_from_atoms(f.values(), p, N);
        const VandermondeDecomp d = vandermonde_decompose(u);
        REQUIRE(d.freqs.size() == f.size());
        CHECK(d.unique);
        for (std::size_t k = 0; k < f.size(); ++k)
        {
            CHECK(wrap_distance(d.freqs[k], f[k]) < 1e-8);
            CHECK(std::abs(d.powers[k] - p[k]) < 1e-8 * p[k]);
        }
        // Perturbation at the 1e-10 level keeps the same support.
        CVector up = u;
        for (Index j = 1; j < N; ++j)
            up(j) += 1e-10 * complex_gaussian(rng);
        const VandermondeDecomp dp = vandermonde_decompose(up);
        REQUIRE(dp.freqs.size() == f.size());
        for (std::size_t k = 0; k < f.size(); ++k)
            CHECK(wrap_distance(dp.freqs[k], f[k]) < 1e-7);
    }
}
