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
/// \file toeplitz.hpp
///
/// Hermitian Toeplitz matrices T(u) (u is the first row), the PSD cone
/// projection, and the Vandermonde decomposition T(u) = A(f) diag(p) A(f)^H of
/// a PSD Toeplitz matrix.
///
/// With a(f)_j = e^{i 2 pi j f}, the first row of A diag(p) A^H is
/// u_j = sum_k p_k e^{-i 2 pi j f_k}.
///
#ifndef JSFR_TOEPLITZ_HPP
#define JSFR_TOEPLITZ_HPP

#include <algorithm>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "jsfr/common.hpp"
#include "jsfr/core_model.hpp"

namespace jsfr
{

inline CMatrix toeplitz_build(const CVector& u)
{
    const Index N = u.size();
    if (N < 1)
        throw DimensionError("toeplitz_build: empty u");
    if (std::abs(u(0).imag()) > 1e-12 * std::max(1.0, std::abs(u(0))))
        throw ConfigError("toeplitz_build: u_1 must be real");
    CMatrix T(N, N);
    for (Index j = 0; j < N; ++j)
    {
        T(j, j) = u(0).real();
        for (Index k = j + 1; k < N; ++k)
        {
            T(j, k) = u(k - j);
            T(k, j) = std::conj(u(k - j));
        }
    }
    return T;
}

/// Per-diagonal average of a Hermitian matrix: u_j is the mean of the j-th
/// superdiagonal (averaged with the conjugated subdiagonal), u_1 real.
/// This is T^*(Z) divided by the diagonal multiplicities.
inline CVector toeplitz_adjoint_average(const CMatrix& Z)
{
    const Index N = Z.rows();
    if (Z.cols() != N)
        throw DimensionError("toeplitz_adjoint_average: matrix not square");
    CVector u(N);
    for (Index j = 0; j < N; ++j)
    {
        cdouble acc = 0.0;
        for (Index k = 0; k + j < N; ++k)
            acc += Z(k, k + j) + std::conj(Z(k + j, k));
        u(j) = acc / (2.0 * static_cast<double>(N - j));
    }
    u(0) = u(0).real();
    return u;
}

/// Number of times u_j appears in T(u) (both triangles counted).
inline RVector toeplitz_multiplicity(Index N)
{
    RVector w(N);
    w(0) = static_cast<double>(N);
    for (Index j = 1; j < N; ++j)
        w(j) = 2.0 * static_cast<double>(N - j);
    return w;
}

/// Frobenius-nearest PSD matrix (negative eigenvalues clamped to zero).
inline CMatrix psd_project(const CMatrix& Z)
{
    const CMatrix H = 0.5 * (Z + Z.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
    if (es.info() != Eigen::Success)
        throw NumericalError("psd_project: eigensolver failed");
    const RVector lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

/// Lawson-Hanson nonnegative least squares: min ||A x - b||, x >= 0.
inline RVector nnls(const RMatrix& A, const RVector& b, int max_iter = 0)
{
    const Index n = A.cols();
    if (max_iter <= 0)
        max_iter = static_cast<int>(3 * n + 10);
    RVector x = RVector::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const double tol = 1e-12 * std::max(1.0, A.norm() * b.norm());

    auto solve_passive = [&](RVector& z) {
        std::vector<Index> idx;
        for (Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)])
                idx.push_back(j);
        z.setZero(n);
        if (idx.empty())
            return;
        RMatrix Ap(A.rows(), static_cast<Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i)
            Ap.col(static_cast<Index>(i)) = A.col(idx[i]);
        RVector zp = Ap.colPivHouseholderQr().solve(b);
        for (std::size_t i = 0; i < idx.size(); ++i)
            z(idx[i]) = zp(static_cast<Index>(i));
    };

    for (int outer = 0; outer < max_iter; ++outer)
    {
        RVector w = A.transpose() * (b - A * x);
        Index best = -1;
        double wmax = tol;
        for (Index j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax)
            {
                wmax = w(j);
                best = j;
            }
        if (best < 0)
            break;
        passive[static_cast<std::size_t>(best)] = true;

        RVector z;
        for (int inner = 0; inner < max_iter; ++inner)
        {
            solve_passive(z);
            bool feasible = true;
            for (Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0)
                    feasible = false;
            if (feasible)
                break;
            double alpha = 1.0;
            for (Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0)
                    alpha = std::min(alpha, x(j) / (x(j) - z(j)));
            x += alpha * (z - x);
            for (Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && x(j) <= tol)
                {
                    passive[static_cast<std::size_t>(j)] = false;
                    x(j) = 0.0;
                }
        }
        x = z;
    }
    return x.cwiseMax(0.0);
}

struct VandermondeDecomp
{
    FrequencySet freqs;
    std::vector<double> powers; // aligned with freqs
    Index order = 0;
    bool unique = true;
    double residual = 0.0; // ||A diag(p) A^H - T(u)||_F
};

/// Vandermonde decomposition of a PSD Toeplitz matrix.
///
/// The rank r counts eigenvalues above rank_tol * lambda_max. Frequencies come
/// from the shift invariance of the r-dimensional signal subspace, powers from
/// a nonnegative least squares fit to u. A full-rank T(u) has no unique
/// decomposition and is reported with unique = false and no atoms.
inline VandermondeDecomp vandermonde_decompose(const CVector& u, double rank_tol = 1e-7)
{
    const Index N = u.size();
    const CMatrix T = toeplitz_build(u);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(T);
    if (es.info() != Eigen::Success)
        throw NumericalError("vandermonde_decompose: eigensolver failed");
    const RVector& lam = es.eigenvalues(); // ascending
    const double lmax = lam(N - 1);

    VandermondeDecomp out;
    if (lmax <= 0.0)
    {
        if (lmax < 0.0)
            throw NotPsdError("vandermonde_decompose: T(u) is negative definite");
        out.order = 0;
        out.residual = T.norm();
        return out;
    }
    if (lam(0) < -rank_tol * lmax)
        throw NotPsdError("vandermonde_decompose: T(u) is not PSD within tolerance");

    Index r = 0;
    for (Index i = 0; i < N; ++i)
        if (lam(i) > rank_tol * lmax)
            ++r;
    out.order = r;
    out.unique = r <= N - 1;
    if (!out.unique)
        return out;

    // Signal subspace and shift invariance Es[0:N-1] Psi = Es[1:N].
    const CMatrix Es = es.eigenvectors().rightCols(r);
    const CMatrix upper = Es.topRows(N - 1);
    const CMatrix lower = Es.bottomRows(N - 1);
    const CMatrix Psi = upper.completeOrthogonalDecomposition().solve(lower);
    Eigen::ComplexEigenSolver<CMatrix> ces(Psi);
    if (ces.info() != Eigen::Success)
        throw NumericalError("vandermonde_decompose: shift eigenproblem failed");

    std::vector<double> f(static_cast<std::size_t>(r));
    for (Index k = 0; k < r; ++k)
        f[static_cast<std::size_t>(k)] = wrap01(std::arg(ces.eigenvalues()(k)) / kTwoPi);
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());

    // Powers: u_j = sum_k p_k e^{-i 2 pi j f_k}, stacked as a real system.
    const auto K = static_cast<Index>(f.size());
    RMatrix B(2 * N, K);
    RVector rhs(2 * N);
    for (Index j = 0; j < N; ++j)
    {
        rhs(j) = u(j).real();
        rhs(N + j) = u(j).imag();
        for (Index k = 0; k < K; ++k)
        {
            const cdouble e = unit_phasor(-static_cast<double>(j) * f[static_cast<std::size_t>(k)]);
            B(j, k) = e.real();
            B(N + j, k) = e.imag();
        }
    }
    const RVector p = nnls(B, rhs);

    std::vector<double> kept_f;
    for (Index k = 0; k < K; ++k)
        if (p(k) > 0.0)
        {
            kept_f.push_back(f[static_cast<std::size_t>(k)]);
            out.powers.push_back(p(k));
        }
    out.freqs = FrequencySet(kept_f); // already sorted and distinct

    const CMatrix A = steering_matrix(std::span<const double>(kept_f), N);
    RVector pv = Eigen::Map<const RVector>(out.powers.data(), static_cast<Index>(out.powers.size()));
    out.residual = (A * pv.cast<cdouble>().asDiagonal() * A.adjoint() - T).norm();
    return out;
}

} // namespace jsfr

#endif
