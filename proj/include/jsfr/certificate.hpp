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
/// \file certificate.hpp
///
/// Vector-valued dual polynomials built from the squared Fejer kernel
///
///     K(f) = [sin(pi (n+1) f) / ((n+1) sin(pi f))]^4
///          = 1/(n+1) sum_{j=-2n}^{2n} g_n(j) e^{-i 2 pi j f},
///
/// Q(f) = sum_k alpha_k K(f - f_k) + beta_k K'(f - f_k), and the numerical
/// checks that Q interpolates the sign rows Phi while staying below one in
/// norm elsewhere. Derivatives are taken in f measured in cycles.
///
/// Coefficient vectors over the symmetric index set {-2n, ..., 2n} are stored
/// at offset j + 2n.
///
#ifndef JSFR_CERTIFICATE_HPP
#define JSFR_CERTIFICATE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "jsfr/common.hpp"
#include "jsfr/core_model.hpp"
#include "jsfr/search.hpp"

namespace jsfr
{

struct KernelConfig
{
    int n = 2;
    double c0 = 0.0; // sqrt(|K''(0)|)

    explicit KernelConfig(int n_) : n(n_)
    {
        if (n < 1)
            throw ConfigError("KernelConfig: n must be >= 1");
        const double nn = static_cast<double>(n);
        c0 = std::sqrt(4.0 * kPi * kPi * nn * (nn + 2.0) / 3.0);
    }

    Index size() const noexcept { return 4 * static_cast<Index>(n) + 1; }
};

/// g_n(j) for j = -2n..2n: the self-convolution of the triangle
/// (1 - |k|/(n+1)) divided by n+1.
inline RVector gn_coeffs(int n)
{
    if (n < 1)
        throw ConfigError("gn_coeffs: n must be >= 1");
    const double m = static_cast<double>(n + 1);
    RVector g(4 * n + 1);
    for (int j = -2 * n; j <= 2 * n; ++j)
    {
        double acc = 0.0;
        for (int k = std::max(j - n - 1, -n - 1); k <= std::min(j + n + 1, n + 1); ++k)
            acc += (1.0 - std::abs(k) / m) * (1.0 - std::abs(j - k) / m);
        g(j + 2 * n) = acc / m;
    }
    return g;
}

/// Kernel defined by its Fourier weights w_j over {-2n..2n}:
/// K^{(l)}(f) = sum_j w_j (-i 2 pi j)^l e^{-i 2 pi j f}.
struct FourierKernel
{
    int n = 0;
    RVector w;

    static FourierKernel fejer(int n)
    {
        FourierKernel k;
        k.n = n;
        k.w = gn_coeffs(n) / static_cast<double>(n + 1);
        return k;
    }

    /// Weights zeroed outside the sampled set (mask over offsets j + 2n).
    static FourierKernel masked(int n, const std::vector<bool>& keep)
    {
        FourierKernel k = fejer(n);
        if (static_cast<Index>(keep.size()) != k.w.size())
            throw DimensionError("FourierKernel::masked: mask length must be 4n+1");
        for (Index j = 0; j < k.w.size(); ++j)
            if (!keep[static_cast<std::size_t>(j)])
                k.w(j) = 0.0;
        return k;
    }

    cdouble eval(double f, int l = 0) const
    {
        cdouble acc = 0.0;
        for (int j = -2 * n; j <= 2 * n; ++j)
        {
            const double wj = w(j + 2 * n);
            if (wj == 0.0)
                continue;
            const cdouble d = std::pow(cdouble(0.0, -kTwoPi * j), l);
            acc += wj * d * unit_phasor(-static_cast<double>(j) * f);
        }
        return acc;
    }
};

/// K^{(l)}(f) of the squared Fejer kernel via its Fourier sum.
inline cdouble fejer_sq(double f, int n, int l = 0)
{
    if (l < 0 || l > 3)
        throw ConfigError("fejer_sq: derivative order must be in 0..3");
    return FourierKernel::fejer(n).eval(f, l);
}

struct CoeffSystem
{
    CMatrix D0, D1, D2; // kernel and derivatives at f_j - f_k
    double c0 = 0.0;

    Index K() const noexcept { return D0.rows(); }

    /// The rescaled 2K x 2K matrix [[D0, D1/c0], [-D1/c0, -D2/c0^2]].
    CMatrix block() const
    {
        const Index K_ = K();
        CMatrix D(2 * K_, 2 * K_);
        D.topLeftCorner(K_, K_) = D0;
        D.topRightCorner(K_, K_) = D1 / c0;
        D.bottomLeftCorner(K_, K_) = -D1 / c0;
        D.bottomRightCorner(K_, K_) = -D2 / (c0 * c0);
        return D;
    }
};

inline CoeffSystem build_system(const FrequencySet& freqs, const FourierKernel& kernel)
{
    const auto K = static_cast<Index>(freqs.size());
    if (K < 1)
        throw ConfigError("build_system: need at least one frequency");
    CoeffSystem s;
    s.c0 = KernelConfig(kernel.n).c0;
    s.D0.resize(K, K);
    s.D1.resize(K, K);
    s.D2.resize(K, K);
    for (Index a = 0; a < K; ++a)
        for (Index b = 0; b < K; ++b)
        {
            const double d = freqs[static_cast<std::size_t>(a)] - freqs[static_cast<std::size_t>(b)];
            s.D0(a, b) = kernel.eval(d, 0);
            s.D1(a, b) = kernel.eval(d, 1);
            s.D2(a, b) = kernel.eval(d, 2);
        }
    return s;
}

struct Coefficients
{
    CMatrix alpha; // K x L
    CMatrix beta;  // K x L
    CMatrix D3;    // Schur complement D0 - D1 D2^{-1} D1
};

/// alpha = D3^{-1} Phi, beta = -D2^{-1} D1 alpha.
inline Coefficients solve_coefficients(const CoeffSystem& sys, const CMatrix& Phi)
{
    if (Phi.rows() != sys.K())
        throw DimensionError("solve_coefficients: Phi must have K rows");
    auto check = [](const Eigen::FullPivLU<CMatrix>& lu, const char* what) {
        if (!lu.isInvertible())
            throw NumericalError(what);
        const double rc = lu.rcond();
        if (!(rc > 1e-13))
            throw NumericalError(what);
    };
    Eigen::FullPivLU<CMatrix> lu2(sys.D2);
    check(lu2, "solve_coefficients: D2 is singular (frequencies too close or too few samples)");
    Coefficients c;
    c.D3 = sys.D0 - sys.D1 * lu2.solve(sys.D1);
    Eigen::FullPivLU<CMatrix> lu3(c.D3);
    check(lu3, "solve_coefficients: Schur complement is singular (frequencies too close or too few samples)");
    c.alpha = lu3.solve(Phi);
    c.beta = -lu2.solve(sys.D1 * c.alpha);
    return c;
}

struct DualPolynomial
{
    int n = 0;
    FourierKernel kernel;
    FrequencySet freqs;
    CMatrix Phi;
    CMatrix alpha;
    CMatrix beta;
    CMatrix V; // (4n+1) x L, row j + 2n holds the coefficient of e^{-i 2 pi j f}
    bool random_kernel = false;

    Index L() const noexcept { return Phi.cols(); }
};

namespace detail
{

inline CMatrix coefficients_to_V(const FourierKernel& ker, const FrequencySet& freqs, const CMatrix& alpha,
                                 const CMatrix& beta)
{
    const int n = ker.n;
    CMatrix V = CMatrix::Zero(4 * n + 1, alpha.cols());
    for (int j = -2 * n; j <= 2 * n; ++j)
    {
        const double wj = ker.w(j + 2 * n);
        if (wj == 0.0)
            continue;
        const cdouble dj(0.0, -kTwoPi * j);
        for (std::size_t k = 0; k < freqs.size(); ++k)
        {
            const cdouble e = unit_phasor(static_cast<double>(j) * freqs[k]);
            const auto kk = static_cast<Index>(k);
            V.row(j + 2 * n) += wj * e * (alpha.row(kk) + dj * beta.row(kk));
        }
    }
    return V;
}

inline void check_phi(const CMatrix& Phi, std::size_t K)
{
    if (static_cast<std::size_t>(Phi.rows()) != K || Phi.cols() < 1)
        throw DimensionError("dual polynomial: Phi must be K x L");
    for (Index k = 0; k < Phi.rows(); ++k)
        if (std::abs(Phi.row(k).norm() - 1.0) > 1e-12)
            throw ConfigError("dual polynomial: rows of Phi must have unit norm");
}

inline DualPolynomial build_with_kernel(const FrequencySet& freqs, const CMatrix& Phi, FourierKernel ker,
                                        bool random)
{
    check_phi(Phi, freqs.size());
    DualPolynomial q;
    q.n = ker.n;
    q.freqs = freqs;
    q.Phi = Phi;
    const CoeffSystem sys = build_system(freqs, ker);
    const Coefficients c = solve_coefficients(sys, Phi);
    q.alpha = c.alpha;
    q.beta = c.beta;
    q.V = coefficients_to_V(ker, freqs, c.alpha, c.beta);
    q.kernel = std::move(ker);
    q.random_kernel = random;
    return q;
}

} // namespace detail

inline DualPolynomial build_certificate(const FrequencySet& freqs, const CMatrix& Phi, int n)
{
    return detail::build_with_kernel(freqs, Phi, FourierKernel::fejer(n), false);
}

/// Certificate from the kernel restricted to the sampled offsets; the mask
/// lives on 4n+1 positions, position j + 2n standing for index j.
inline DualPolynomial build_random_certificate(const FrequencySet& freqs, const CMatrix& Phi,
                                               const SampleMask& mask, int n)
{
    if (mask.N() != 4 * static_cast<Index>(n) + 1)
        throw DimensionError("build_random_certificate: mask must cover 4n+1 indices");
    return detail::build_with_kernel(freqs, Phi, FourierKernel::masked(n, mask.indicator()), true);
}

/// Q^{(l)}(f) from the kernel form.
inline Eigen::RowVectorXcd q_eval(const DualPolynomial& q, double f, int l = 0)
{
    if (l < 0 || l > 2)
        throw ConfigError("q_eval: derivative order must be in 0..2");
    Eigen::RowVectorXcd out = Eigen::RowVectorXcd::Zero(q.L());
    for (std::size_t k = 0; k < q.freqs.size(); ++k)
    {
        const auto kk = static_cast<Index>(k);
        out += q.kernel.eval(f - q.freqs[k], l) * q.alpha.row(kk) +
               q.kernel.eval(f - q.freqs[k], l + 1) * q.beta.row(kk);
    }
    return out;
}

/// Q^{(l)}(f) = sum_j (-i 2 pi j)^l e^{-i 2 pi j f} V_j from the coefficients.
inline Eigen::RowVectorXcd q_eval_fourier(const DualPolynomial& q, double f, int l = 0)
{
    const int n = q.n;
    Eigen::RowVectorXcd out = Eigen::RowVectorXcd::Zero(q.L());
    const cdouble step = unit_phasor(-f);
    cdouble e = unit_phasor(2.0 * n * f); // e^{-i 2 pi j f} at j = -2n
    for (int j = -2 * n; j <= 2 * n; ++j)
    {
        const cdouble d = l == 0 ? cdouble(1.0) : std::pow(cdouble(0.0, -kTwoPi * j), l);
        out += (d * e) * q.V.row(j + 2 * n);
        e *= step;
    }
    return out;
}

/// Coefficients over indices 0..4n for atoms a(f)_j = e^{i 2 pi j f}: the
/// polynomial is built for the twisted signs e^{i 2 pi 2n f_k} phi_k and its
/// coefficients are shifted by 2n, so a(f)^H V_general interpolates Phi.
inline CMatrix general_index_V(const FrequencySet& freqs, const CMatrix& Phi, int n,
                               const std::optional<SampleMask>& mask = std::nullopt)
{
    CMatrix twisted = Phi;
    for (std::size_t k = 0; k < freqs.size(); ++k)
        twisted.row(static_cast<Index>(k)) *= unit_phasor(2.0 * n * freqs[k]);
    const DualPolynomial q =
        mask ? build_random_certificate(freqs, twisted, *mask, n) : build_certificate(freqs, twisted, n);
    return q.V; // offset j + 2n is exactly the general index
}

/// ||X||_{2,inf}: the largest row 2-norm.
inline double two_inf_norm(const CMatrix& X)
{
    return X.rows() == 0 ? 0.0 : X.rowwise().norm().maxCoeff();
}

/// Induced (2,inf) norm of X -> P X, equal to the largest row 1-norm of P.
inline double induced_two_inf(const CMatrix& P)
{
    return P.rows() == 0 ? 0.0 : P.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double near_half_width(int n)
{
    return 8.245e-2 / static_cast<double>(n);
}

struct CertReport
{
    double interp_err = 0.0; // max_k ||Q(f_k) - phi_k||
    double deriv_err = 0.0;  // max_k ||Q'(f_k)|| / c0
    double sup_far = 0.0;
    double sup_location = 0.0;
    double min_neg_curvature = -std::numeric_limits<double>::infinity(); // max of (1/2) d^2||Q||^2/df^2 near T
    bool pass = false;
};

/// Checks interpolation, the far-region supremum and near-region concavity of
/// ||Q(f)||_2. grid_size = 0 selects 32 n ceil(sqrt(L)).
inline CertReport certify(const DualPolynomial& q, Index grid_size = 0)
{
    const int n = q.n;
    const double c0 = KernelConfig(n).c0;
    const Index L = q.L();
    const double min_grid = 16.0 * n * std::sqrt(static_cast<double>(L));
    if (grid_size == 0)
        grid_size = 32 * static_cast<Index>(n) * static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(L))));
    if (static_cast<double>(grid_size) < min_grid)
        throw ConfigError("certify: grid_size must be >= 16 n sqrt(L)");

    CertReport rep;
    for (std::size_t k = 0; k < q.freqs.size(); ++k)
    {
        const auto kk = static_cast<Index>(k);
        rep.interp_err = std::max(rep.interp_err, (q_eval_fourier(q, q.freqs[k], 0) - q.Phi.row(kk)).norm());
        rep.deriv_err = std::max(rep.deriv_err, q_eval_fourier(q, q.freqs[k], 1).norm() / c0);
    }

    const double nu = near_half_width(n);
    auto dist_to_support = [&](double f) {
        double d = 1.0;
        for (double fk : q.freqs)
            d = std::min(d, wrap_distance(f, fk));
        return d;
    };

    // Far region: grid scan, polish inside the region, plus the region edges.
    auto norm_q = [&](double f) { return q_eval_fourier(q, f, 0).norm(); };
    auto far_fn = [&](double f) {
        return dist_to_support(f) < nu ? -1.0 : norm_q(f);
    };
    const double h = 1.0 / static_cast<double>(grid_size);
    std::vector<double> vals(static_cast<std::size_t>(grid_size));
    for (Index g = 0; g < grid_size; ++g)
        vals[static_cast<std::size_t>(g)] = far_fn(static_cast<double>(g) * h);
    rep.sup_far = -1.0;
    for (Index g : cyclic_local_maxima(vals))
    {
        const double c = static_cast<double>(g) * h;
        Peak p = golden_section_max(far_fn, c - h, c + h);
        if (p.value < vals[static_cast<std::size_t>(g)])
            p = {c, vals[static_cast<std::size_t>(g)]};
        if (p.value > rep.sup_far)
        {
            rep.sup_far = p.value;
            rep.sup_location = wrap01(p.f);
        }
    }
    for (double fk : q.freqs)
        for (double edge : {fk - nu, fk + nu})
        {
            const double v = norm_q(edge);
            if (v > rep.sup_far)
            {
                rep.sup_far = v;
                rep.sup_location = wrap01(edge);
            }
        }
    rep.sup_far = std::max(rep.sup_far, 0.0);

    // Near region: (1/2) d^2 ||Q||^2 / df^2 = ||Q'||^2 + Re(Q'' Q^H).
    const int pts = std::max<int>(64, static_cast<int>(4.0 * nu * static_cast<double>(grid_size)));
    for (double fk : q.freqs)
        for (int i = 0; i <= pts; ++i)
        {
            const double f = fk - nu + 2.0 * nu * i / pts;
            const auto Q0 = q_eval_fourier(q, f, 0);
            const auto Q1 = q_eval_fourier(q, f, 1);
            const auto Q2 = q_eval_fourier(q, f, 2);
            const double curv = Q1.squaredNorm() + (Q2 * Q0.adjoint())(0, 0).real();
            rep.min_neg_curvature = std::max(rep.min_neg_curvature, curv);
        }

    rep.pass = rep.interp_err <= 1e-8 && rep.deriv_err <= 1e-8 && rep.sup_far < 1.0 &&
               (q.freqs.empty() || rep.min_neg_curvature < 0.0);
    return rep;
}

/// Norms bounded by the separation lemmas for the deterministic kernel.
struct BoundMargins
{
    double i_minus_d0 = 0.0;     // ||I - D0||_inf
    double d1 = 0.0;             // ||D1||_inf
    double d2 = 0.0;             // ||K''(0) I - D2||_inf
    double i_minus_d3inv = 0.0;  // ||I - D3^{-1}||_inf
    double alpha_minus_phi = 0.0; // ||alpha - Phi||_{2,inf}
    double beta = 0.0;           // ||beta||_{2,inf}
};

inline BoundMargins bound_margins(const FrequencySet& freqs, const CMatrix& Phi, int n)
{
    const FourierKernel ker = FourierKernel::fejer(n);
    const CoeffSystem sys = build_system(freqs, ker);
    const Coefficients c = solve_coefficients(sys, Phi);
    const auto K = sys.K();
    const CMatrix I = CMatrix::Identity(K, K);
    const double k2 = -KernelConfig(n).c0 * KernelConfig(n).c0;
    BoundMargins b;
    b.i_minus_d0 = induced_two_inf(I - sys.D0);
    b.d1 = induced_two_inf(sys.D1);
    b.d2 = induced_two_inf(k2 * I - sys.D2);
    b.i_minus_d3inv = induced_two_inf(I - c.D3.inverse());
    b.alpha_minus_phi = two_inf_norm(c.alpha - Phi);
    b.beta = two_inf_norm(c.beta);
    return b;
}

/// ||p^{-1} Dbar - D||_2 for one Bernoulli(p) mask over {-2n..2n}, where D and
/// Dbar are the rescaled block matrices of the full and masked kernels.
inline double random_kernel_deviation(const FrequencySet& freqs, int n, double p, const SampleMask& mask)
{
    if (!(p > 0.0 && p <= 1.0))
        throw ConfigError("random_kernel_deviation: p must be in (0, 1]");
    const CMatrix D = build_system(freqs, FourierKernel::fejer(n)).block();
    const CMatrix Db = build_system(freqs, FourierKernel::masked(n, mask.indicator())).block();
    const CMatrix diff = Db / p - D;
    Eigen::JacobiSVD<CMatrix> svd(diff);
    return svd.singularValues()(0);
}

} // namespace jsfr

#endif
