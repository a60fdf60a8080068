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
/// \file retrieval.hpp
///
/// Frequency and amplitude estimates from a solved program, plus a variable
/// projection Levenberg-Marquardt refinement of the frequencies.
///
#ifndef JSFR_RETRIEVAL_HPP
#define JSFR_RETRIEVAL_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jsfr/anm_solver.hpp"
#include "jsfr/common.hpp"
#include "jsfr/core_model.hpp"
#include "jsfr/search.hpp"
#include "jsfr/toeplitz.hpp"

namespace jsfr
{

enum class EstimateSource
{
    vandermonde,
    dual_peaks
};

inline std::string to_string(EstimateSource s)
{
    return s == EstimateSource::vandermonde ? "vandermonde" : "dual_peaks";
}

struct Estimate
{
    FrequencySet freqs;
    RVector mean_amps; // c_j / sqrt(L), aligned with freqs
    CMatrix S_hat;     // K* x L, aligned with freqs
    EstimateSource source = EstimateSource::vandermonde;
    bool warning = false; // refinement stopped without a stationary point
    int refine_iterations = 0;

    std::size_t size() const noexcept { return freqs.size(); }

    /// Component indices ordered by decreasing mean amplitude.
    std::vector<std::size_t> order_by_amplitude() const
    {
        std::vector<std::size_t> idx(freqs.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return mean_amps(static_cast<Index>(a)) > mean_amps(static_cast<Index>(b));
        });
        return idx;
    }
};

/// Least-squares amplitudes for the given frequencies; the estimate is sorted
/// by frequency.
inline Estimate estimate_for(std::vector<double> f, const DataMatrix& data, EstimateSource src)
{
    for (double& x : f)
        x = wrap01(x);
    std::sort(f.begin(), f.end());
    Estimate est;
    est.source = src;
    est.freqs = FrequencySet(f);
    const auto K = static_cast<Index>(f.size());
    if (K == 0)
    {
        est.mean_amps = RVector(0);
        est.S_hat = CMatrix(0, data.L());
        return est;
    }
    const CMatrix A = steering_matrix(std::span<const double>(f), std::span<const Index>(data.mask.indices()));
    est.S_hat = A.completeOrthogonalDecomposition().solve(data.observed);
    est.mean_amps = est.S_hat.rowwise().norm() / std::sqrt(static_cast<double>(data.L()));
    return est;
}

/// Frequencies from the Vandermonde decomposition of T(u), amplitudes by least
/// squares on the observed rows.
inline Estimate retrieve_from_u(const CVector& u, const DataMatrix& data, double rank_tol = 1e-7)
{
    const VandermondeDecomp vd = vandermonde_decompose(u, rank_tol);
    if (!vd.unique)
        throw NonUniqueError("retrieve_from_u: T(u) has full rank; the decomposition is not unique");
    return estimate_for(vd.freqs.values(), data, EstimateSource::vandermonde);
}

/// Local maxima of ||a(f)^H V||_2 that come within 1e-3 of one.
inline FrequencySet retrieve_from_dual(const CMatrix& V, Index grid_size)
{
    if (V.size() == 0 || V.norm() == 0.0)
        return {};
    if (grid_size < 4 * V.rows())
        throw ConfigError("retrieve_from_dual: grid_size must be >= 4N");
    auto fn = [&](double f) { return dual_polynomial(V, f).norm(); };
    const auto peaks = scan_and_polish(fn, grid_size);
    std::vector<double> f;
    for (const auto& p : peaks)
    {
        if (p.value < 1.0 - 1e-3)
            break;
        const bool dup = std::any_of(f.begin(), f.end(), [&](double g) {
            return wrap_distance(g, p.f) < 0.5 / static_cast<double>(grid_size);
        });
        if (!dup)
            f.push_back(p.f);
    }
    return FrequencySet(f);
}

struct RefineOptions
{
    int max_iters = 100;
    double step_tol = 1e-14;
};

/// Variable projection refinement of min ||Y_Omega - A_Omega(f) S||_F^2.
///
/// S is eliminated by least squares; f takes Levenberg-Marquardt steps built
/// from the Kaufman approximation of the projected Jacobian.
inline Estimate refine_gauss_newton(const FrequencySet& init, const DataMatrix& data,
                                    const RefineOptions& opts = {},
                                    EstimateSource src = EstimateSource::vandermonde)
{
    const auto K = static_cast<Index>(init.size());
    const Index M = data.M();
    const Index L = data.L();
    if (K == 0)
        return estimate_for({}, data, src);
    if (K > M)
    {
        Estimate est = estimate_for(init.values(), data, src);
        est.warning = true;
        return est;
    }

    const std::vector<Index>& rows = data.mask.indices();
    RVector m(M);
    for (Index i = 0; i < M; ++i)
        m(i) = static_cast<double>(rows[static_cast<std::size_t>(i)]);

    struct Eval
    {
        CMatrix A;
        CMatrix S;
        CMatrix R;
        double cost = 0.0;
    };
    auto evaluate = [&](const RVector& f) {
        Eval e;
        e.A = steering_matrix(std::span<const double>(f.data(), static_cast<std::size_t>(K)),
                              std::span<const Index>(rows));
        e.S = e.A.completeOrthogonalDecomposition().solve(data.observed);
        e.R = data.observed - e.A * e.S;
        e.cost = e.R.squaredNorm();
        return e;
    };

    RVector f(K);
    for (Index k = 0; k < K; ++k)
        f(k) = init[static_cast<std::size_t>(k)];
    Eval cur = evaluate(f);
    double lambda = 1e-3;
    bool warning = false;
    int it = 0;

    for (; it < opts.max_iters; ++it)
    {
        // Projected Jacobian columns: -(I - P_A) dA/df_k S, stacked real/imag.
        Eigen::HouseholderQR<CMatrix> qr(cur.A);
        const CMatrix Q = qr.householderQ() * CMatrix::Identity(M, std::min(M, K));
        RMatrix J(2 * M * L, K);
        for (Index k = 0; k < K; ++k)
        {
            CVector d(M);
            for (Index i = 0; i < M; ++i)
                d(i) = kI * kTwoPi * m(i) * cur.A(i, k);
            CMatrix D = d * cur.S.row(k);
            D -= Q * (Q.adjoint() * D);
            const CMatrix Jk = -D;
            for (Index c = 0; c < L; ++c)
                for (Index i = 0; i < M; ++i)
                {
                    J(c * M + i, k) = Jk(i, c).real();
                    J(M * L + c * M + i, k) = Jk(i, c).imag();
                }
        }
        RVector r(2 * M * L);
        for (Index c = 0; c < L; ++c)
            for (Index i = 0; i < M; ++i)
            {
                r(c * M + i) = cur.R(i, c).real();
                r(M * L + c * M + i) = cur.R(i, c).imag();
            }

        const RMatrix H = J.transpose() * J;
        const RVector g = J.transpose() * r;
        RVector diag = H.diagonal().cwiseMax(1e-300);

        bool accepted = false;
        double step_norm = 0.0;
        while (lambda < 1e20)
        {
            RMatrix Hd = H;
            Hd.diagonal() += lambda * diag;
            const RVector delta = -Hd.ldlt().solve(g);
            if (!delta.allFinite())
            {
                lambda *= 10.0;
                continue;
            }
            step_norm = delta.norm();
            const RVector fn = f + delta;
            Eval trial = evaluate(fn);
            if (trial.cost <= cur.cost)
            {
                f = fn;
                cur = std::move(trial);
                lambda = std::max(lambda * 0.1, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
            if (step_norm < opts.step_tol)
                break;
        }
        if (!accepted)
        {
            // No decrease possible: fine at a stationary point, flagged otherwise.
            const double scale = std::max(J.norm() * r.norm(), 1e-300);
            warning = g.norm() > 1e-6 * scale && cur.cost > 1e-24 * data.observed.squaredNorm();
            break;
        }
        if (step_norm < opts.step_tol)
        {
            ++it;
            break;
        }
    }

    std::vector<double> fv(f.data(), f.data() + K);
    Estimate est = estimate_for(std::move(fv), data, src);
    est.warning = warning;
    est.refine_iterations = it;
    return est;
}

/// A(f_hat) S_hat over all N rows.
inline CMatrix reconstruct(const Estimate& est, Index N)
{
    if (est.size() == 0)
        return CMatrix::Zero(N, est.S_hat.cols());
    return steering_matrix(est.freqs, N) * est.S_hat;
}

} // namespace jsfr

#endif
