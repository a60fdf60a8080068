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
/// \file spark.hpp
///
/// Spark facts for the dictionary {a_Omega(f)} that can be read off the sample
/// index set, and the l0 uniqueness condition that uses them.
///
#ifndef JSFR_SPARK_HPP
#define JSFR_SPARK_HPP

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "jsfr/common.hpp"
#include "jsfr/core_model.hpp"

namespace jsfr
{

struct SparkInfo
{
    Index lower = 2;
    Index upper = 2;
    bool is_two = false;
    std::optional<Index> exact;
    Index gcd = 0; // gcd of the index differences (0 when M = 1)
};

/// Exact spark in the two checkable cases (non-coprime differences give 2,
/// consecutive indices give M + 1), bounds [3, M + 1] otherwise.
inline SparkInfo spark_info(const SampleMask& mask)
{
    const Index M = mask.M();
    if (M < 1)
        throw ConfigError("spark_info: empty index set");
    const auto& om = mask.indices(); // sorted
    SparkInfo s;
    s.upper = M + 1;
    Index g = 0;
    for (Index m : om)
        g = std::gcd(g, m - om.front());
    s.gcd = g;
    if (M == 1 || g >= 2)
    {
        // Any two atoms whose frequencies differ by a multiple of 1/g coincide
        // up to a unimodular scale.
        s.is_two = true;
        s.lower = 2;
        s.upper = 2;
        s.exact = 2;
        return s;
    }
    if (om.back() - om.front() == M - 1)
    {
        s.lower = M + 1;
        s.exact = M + 1;
        return s;
    }
    s.lower = 3;
    return s;
}

/// Sufficient condition for a unique l0 solution given a lower bound on the
/// spark: 2K < spark_lb - 1 + rank(Y_Omega).
inline bool l0_condition_check(Index spark_lb, Index rank_yobs, Index K)
{
    if (spark_lb < 2 || rank_yobs < 1 || K < 0)
        throw ConfigError("l0_condition_check: need spark_lb >= 2, rank >= 1, K >= 0");
    return 2 * K < spark_lb - 1 + rank_yobs;
}

/// sum over primes p <= floor(N/M) of p * C(ceil(N/p), M) / C(N, M), evaluated
/// in exact rational arithmetic: a bound on the probability that M indices
/// drawn uniformly from {0, ..., N-1} have non-coprime differences.
inline double spark2_probability_bound(unsigned N, unsigned M)
{
    using boost::multiprecision::cpp_int;
    using boost::multiprecision::cpp_rational;
    if (M < 1 || M > N)
        throw ConfigError("spark2_probability_bound: need 1 <= M <= N");

    auto binom = [](unsigned n, unsigned k) {
        if (k > n)
            return cpp_int(0);
        k = std::min(k, n - k);
        cpp_int r = 1;
        for (unsigned i = 1; i <= k; ++i)
            r = r * (n - k + i) / i; // exact at every step
        return r;
    };
    auto is_prime = [](unsigned p) {
        if (p < 2)
            return false;
        for (unsigned d = 2; d * d <= p; ++d)
            if (p % d == 0)
                return false;
        return true;
    };

    const cpp_int denom = binom(N, M);
    cpp_int numer = 0;
    for (unsigned p = 2; p <= N / M; ++p)
        if (is_prime(p))
            numer += cpp_int(p) * binom((N + p - 1) / p, M);
    return static_cast<double>(cpp_rational(numer, denom));
}

} // namespace jsfr

#endif
