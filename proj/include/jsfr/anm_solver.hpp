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
/// \file anm_solver.hpp
///
/// Atomic norm semidefinite programs solved by ADMM on the PSD cone.
///
/// The lifted variable is the Hermitian matrix U = [[W, Y^H], [Y, T(u)]] of
/// size L + N and the objective is c * (tr W + tr T(u)) with c = 1/(2 sqrt N)
/// (scaled by tau in the noisy form). Each iteration costs one Hermitian
/// eigendecomposition of size L + N.
///
#ifndef JSFR_ANM_SOLVER_HPP
#define JSFR_ANM_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jsfr/common.hpp"
#include "jsfr/core_model.hpp"
#include "jsfr/search.hpp"
#include "jsfr/toeplitz.hpp"

namespace jsfr
{

struct SolverOptions
{
    double rho = 1.0;
    int max_iters = 20000;
    double tol_abs = 1e-9;
    double tol_rel = 1e-8;
    bool adaptive_rho = true;
    double relaxation = 1.0; // over-relaxation factor in [1, 2)

    void validate() const
    {
        if (!(rho > 0.0) || !(tol_abs > 0.0) || !(tol_rel > 0.0))
            throw ConfigError("SolverOptions: rho and tolerances must be positive");
        if (max_iters < 1)
            throw ConfigError("SolverOptions: max_iters must be >= 1");
        if (!(relaxation >= 1.0 && relaxation < 2.0))
            throw ConfigError("SolverOptions: relaxation must be in [1, 2)");
    }
};

enum class SolverStatus
{
    converged,
    max_iters,
    infeasible
};

inline std::string to_string(SolverStatus s)
{
    switch (s)
    {
    case SolverStatus::converged:
        return "converged";
    case SolverStatus::max_iters:
        return "max_iters";
    case SolverStatus::infeasible:
        return "infeasible";
    }
    return "unknown";
}

enum class SolveMode
{
    complete,
    missing
};

struct SdpSolution
{
    CMatrix Y;  // N x L
    CVector u;  // first row of T(u)
    CMatrix W;  // L x L
    CMatrix V;  // N x L dual matrix, zero off the mask
    double objective = 0.0; // (tr W + tr T(u)) / (2 sqrt N)
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    SolverStatus status = SolverStatus::converged;
    double tau = 0.0;          // noisy form only
    double fit_residual = 0.0; // ||Y_Omega - Y_Omega^o||_F^2
};

/// Thrown when the noisy-form bisection cannot hit its residual window.
class BisectionError : public NumericalError
{
public:
    BisectionError(const std::string& what, double closest)
        : NumericalError(what), closest_residual(closest)
    {
    }
    double closest_residual;
};

namespace detail
{

enum class RowKind : unsigned char
{
    free_row,
    fixed_row,
    penalized_row
};

struct SplitProblem
{
    Index N = 0;
    Index L = 0;
    CMatrix target; // N x L, rows used for fixed and penalized rows
    std::vector<RowKind> kind;
    double weight = 0.0; // trace weight c
};

struct SplitState
{
    CMatrix Z;
    CMatrix Lam;
    double rho = 0.0;
    bool warm = false;
};

struct SplitResult
{
    CMatrix U;
    int iterations = 0;
    double r = 0.0;
    double s = 0.0;
    bool converged = false;
};

inline SplitResult run_split(const SplitProblem& P, const SolverOptions& o, SplitState& st)
{
    const Index N = P.N;
    const Index L = P.L;
    const Index n = N + L;
    if (!st.warm)
    {
        st.Z = CMatrix::Zero(n, n);
        st.Lam = CMatrix::Zero(n, n);
        st.rho = o.rho;
        st.warm = true;
    }

    SplitResult res;
    CMatrix U = CMatrix::Zero(n, n);
    CMatrix G(n, n);
    CMatrix Zold(n, n);
    const double dim = static_cast<double>(n);

    for (int it = 1; it <= o.max_iters; ++it)
    {
        const double rho = st.rho;
        const double shift = P.weight / rho;
        G = st.Z - st.Lam;

        // W block.
        U.topLeftCorner(L, L) = 0.5 * (G.topLeftCorner(L, L) + G.topLeftCorner(L, L).adjoint());
        for (Index i = 0; i < L; ++i)
            U(i, i) -= shift;

        // Y block (rows L..L+N-1 of the lower-left corner, mirrored above).
        for (Index i = 0; i < N; ++i)
        {
            const auto ri = static_cast<std::size_t>(i);
            Eigen::RowVectorXcd y;
            switch (P.kind[ri])
            {
            case RowKind::fixed_row:
                y = P.target.row(i);
                break;
            case RowKind::free_row:
                y = 0.5 * (G.block(L + i, 0, 1, L) + G.block(0, L + i, L, 1).adjoint());
                break;
            case RowKind::penalized_row:
                y = (P.target.row(i) +
                     rho * (G.block(L + i, 0, 1, L) + G.block(0, L + i, L, 1).adjoint())) /
                    (1.0 + 2.0 * rho);
                break;
            }
            U.block(L + i, 0, 1, L) = y;
            U.block(0, L + i, L, 1) = y.adjoint();
        }

        // Toeplitz block.
        CVector u = toeplitz_adjoint_average(G.bottomRightCorner(N, N));
        u(0) -= shift;
        U.bottomRightCorner(N, N) = toeplitz_build(u);

        if (!U.allFinite())
            throw NumericalError("anm solver: non-finite iterate");

        Zold = st.Z;
        if (o.relaxation != 1.0)
        {
            const CMatrix Uh = o.relaxation * U + (1.0 - o.relaxation) * Zold;
            st.Z = psd_project(Uh + st.Lam);
            st.Lam += Uh - st.Z;
        }
        else
        {
            st.Z = psd_project(U + st.Lam);
            st.Lam += U - st.Z;
        }

        res.r = (U - st.Z).norm();
        res.s = rho * (st.Z - Zold).norm();
        res.iterations = it;
        const double eps_pri = dim * o.tol_abs + o.tol_rel * std::max(U.norm(), st.Z.norm());
        const double eps_dual = dim * o.tol_abs + o.tol_rel * rho * st.Lam.norm();
        if (res.r <= eps_pri && res.s <= eps_dual)
        {
            res.converged = true;
            break;
        }

        if (o.adaptive_rho && it % 50 == 0)
        {
            if (res.r > 10.0 * res.s)
            {
                st.rho *= 2.0;
                st.Lam *= 0.5;
            }
            else if (res.s > 10.0 * res.r)
            {
                st.rho *= 0.5;
                st.Lam *= 2.0;
            }
        }
    }
    res.U = std::move(U);
    return res;
}

/// Unpacks the lifted matrix into an SdpSolution, undoing the data scaling.
inline SdpSolution unpack(const SplitProblem& P, const SplitState& st, const SplitResult& r,
                          double scale)
{
    const Index N = P.N;
    const Index L = P.L;
    SdpSolution sol;
    sol.W = scale * r.U.topLeftCorner(L, L);
    sol.Y = scale * r.U.bottomLeftCorner(N, L);
    sol.u = scale * toeplitz_adjoint_average(r.U.bottomRightCorner(N, N));
    sol.objective = (sol.W.trace().real() + static_cast<double>(N) * sol.u(0).real()) /
                    (2.0 * std::sqrt(static_cast<double>(N)));
    // Scaled multiplier of the Y block, normalized so that ||V||_A^* <= 1 and
    // Re<V, Y> equals the objective; invariant under data scaling.
    sol.V = (st.rho / (P.weight * std::sqrt(static_cast<double>(N)))) * st.Lam.bottomLeftCorner(N, L);
    for (Index i = 0; i < N; ++i)
        if (P.kind[static_cast<std::size_t>(i)] == RowKind::free_row)
            sol.V.row(i).setZero();
    sol.iterations = r.iterations;
    sol.primal_residual = scale * r.r;
    sol.dual_residual = scale * r.s;
    sol.status = r.converged ? SolverStatus::converged : SolverStatus::max_iters;
    return sol;
}

inline SdpSolution zero_solution(Index N, Index L)
{
    SdpSolution sol;
    sol.Y = CMatrix::Zero(N, L);
    sol.u = CVector::Zero(N);
    sol.W = CMatrix::Zero(L, L);
    sol.V = CMatrix::Zero(N, L);
    return sol;
}

/// Row-rms scale of the observed data; the solver works on data / scale.
inline double data_scale(const DataMatrix& d)
{
    return d.observed.norm() / std::sqrt(static_cast<double>(std::max<Index>(d.M(), 1)));
}

inline SplitProblem make_problem(const DataMatrix& d, double scale, bool penalized, double weight)
{
    SplitProblem P;
    P.N = d.N();
    P.L = d.L();
    P.weight = weight;
    P.target = CMatrix::Zero(P.N, P.L);
    P.kind.assign(static_cast<std::size_t>(P.N), RowKind::free_row);
    const auto& om = d.mask.indices();
    for (std::size_t i = 0; i < om.size(); ++i)
    {
        P.target.row(om[i]) = d.observed.row(static_cast<Index>(i)) / scale;
        P.kind[static_cast<std::size_t>(om[i])] = penalized ? RowKind::penalized_row : RowKind::fixed_row;
    }
    return P;
}

inline void check_data(const DataMatrix& d)
{
    if (d.observed.rows() != d.M() || d.L() < 1 || d.N() < 1)
        throw DimensionError("anm solver: observed data does not match the mask");
    if (!d.observed.allFinite())
        throw ConfigError("anm solver: non-finite data");
}

} // namespace detail

/// Evaluates Q(f) = a(f)^H V row vector for rows 0..N-1.
inline Eigen::RowVectorXcd dual_polynomial(const CMatrix& V, double f)
{
    Eigen::RowVectorXcd q = Eigen::RowVectorXcd::Zero(V.cols());
    const cdouble step = unit_phasor(-f);
    cdouble e = 1.0;
    for (Index j = 0; j < V.rows(); ++j)
    {
        q += e * V.row(j);
        e *= step;
    }
    return q;
}

struct DualCheck
{
    double max_norm = 0.0;
    double argmax_f = 0.0;
};

/// sup_f ||a(f)^H V||_2 by grid search plus golden-section polish.
inline DualCheck dual_feasibility_check(const CMatrix& V, Index grid_size)
{
    if (grid_size < 4 * V.rows())
        throw ConfigError("dual_feasibility_check: grid_size must be >= 4N");
    if (V.size() == 0 || V.norm() == 0.0)
        return {};
    auto fn = [&](double f) { return dual_polynomial(V, f).norm(); };
    const auto peaks = scan_and_polish(fn, grid_size, 16);
    if (peaks.empty())
        return {fn(0.0), 0.0};
    return {peaks.front().value, peaks.front().f};
}

/// Atomic norm solve with exact data on Omega (complete or missing mode).
inline SdpSolution solve(const DataMatrix& data, SolveMode mode, const SolverOptions& opts = {})
{
    opts.validate();
    detail::check_data(data);
    if (mode == SolveMode::complete && !data.mask.is_complete())
        throw ConfigError("solve: complete mode requires M = N");
    const double scale = detail::data_scale(data);
    if (scale == 0.0)
        return detail::zero_solution(data.N(), data.L());
    const double c = 1.0 / (2.0 * std::sqrt(static_cast<double>(data.N())));
    const auto P = detail::make_problem(data, scale, false, c);
    detail::SplitState st;
    const auto r = detail::run_split(P, opts, st);
    SdpSolution sol = detail::unpack(P, st, r, scale);
    sol.fit_residual = (data.mask.restrict(sol.Y) - data.observed).squaredNorm();
    return sol;
}

inline double atomic_norm(const CMatrix& Y, const SolverOptions& opts = {})
{
    if (Y.size() == 0)
        throw DimensionError("atomic_norm: empty matrix");
    return solve(DataMatrix::from_full(Y, SampleMask::complete(Y.rows())), SolveMode::complete, opts)
        .objective;
}

/// Noisy form: min tau ||Y||_A + 1/2 ||Y_Omega - Y_Omega^o||_F^2 with tau chosen
/// by bisection so that the squared residual lands in [window * eps, eps].
inline SdpSolution solve_noisy(const DataMatrix& data, double epsilon, const SolverOptions& opts = {},
                               double window = 0.9)
{
    opts.validate();
    detail::check_data(data);
    if (!(epsilon >= 0.0))
        throw ConfigError("solve_noisy: epsilon must be >= 0");
    if (!(window > 0.0 && window < 1.0))
        throw ConfigError("solve_noisy: window must lie in (0, 1)");
    const double y2 = data.observed.squaredNorm();
    if (epsilon >= y2)
    {
        SdpSolution sol = detail::zero_solution(data.N(), data.L());
        sol.fit_residual = y2;
        return sol;
    }
    if (epsilon == 0.0)
        return solve(data, SolveMode::missing, opts);

    const Index N = data.N();
    const double scale = detail::data_scale(data);
    const double eps = epsilon / (scale * scale);
    const double inv2sqrtn = 1.0 / (2.0 * std::sqrt(static_cast<double>(N)));

    // Above tau_max the zero matrix is optimal.
    CMatrix padded = CMatrix::Zero(N, data.L());
    for (std::size_t i = 0; i < data.mask.indices().size(); ++i)
        padded.row(data.mask[i]) = data.observed.row(static_cast<Index>(i)) / scale;
    const double tau_max = dual_feasibility_check(padded, 16 * N).max_norm;

    detail::SplitProblem P = detail::make_problem(data, scale, true, 0.0);
    detail::SplitState st;
    double lo = 0.0;
    double hi = tau_max;
    double closest = y2 / (scale * scale);
    for (int step = 0; step < 40; ++step)
    {
        const double tau = lo > 0.0 ? std::sqrt(lo * hi) : 0.25 * hi;
        P.weight = tau * inv2sqrtn;
        const auto r = detail::run_split(P, opts, st);
        SdpSolution sol = detail::unpack(P, st, r, scale);
        const double fit = (data.mask.restrict(sol.Y) - data.observed).squaredNorm() / (scale * scale);
        if (std::abs(fit - eps) < std::abs(closest - eps))
            closest = fit;
        if (fit > eps)
            hi = tau;
        else if (fit < window * eps)
            lo = tau;
        else
        {
            sol.tau = tau * scale;
            sol.fit_residual = fit * scale * scale;
            return sol;
        }
    }
    throw BisectionError("solve_noisy: residual window not reached in 40 steps",
                         closest * scale * scale);
}

struct SpaCheck
{
    double spa_value = 0.0;
    double anm_value = 0.0;
};

/// Two independent evaluations of the same quantity: the sparse-covariance
/// cost (2N/L) ||Y V||_A with V = (Y^H Y / N)^{1/2}, and the covariance-fitting
/// SDP min tr(R T^{-1} R) + tr T with R = Y Y^H / L.
inline SpaCheck spa_cross_check(const CMatrix& Y, const SolverOptions& opts = {})
{
    const Index N = Y.rows();
    const Index L = Y.cols();
    if (N < 1 || L < 1)
        throw DimensionError("spa_cross_check: empty matrix");
    if (Y.norm() == 0.0)
        return {};
    const CMatrix Vh = psd_sqrt(CMatrix((Y.adjoint() * Y) / static_cast<double>(N)));
    SpaCheck out;
    out.spa_value = 2.0 * static_cast<double>(N) / static_cast<double>(L) * atomic_norm(Y * Vh, opts);
    const CMatrix R = (Y * Y.adjoint()) / static_cast<double>(L);
    out.anm_value = 2.0 * std::sqrt(static_cast<double>(N)) * atomic_norm(R, opts);
    return out;
}

} // namespace jsfr

#endif
