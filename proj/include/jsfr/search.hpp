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

#ifndef JSFR_SEARCH_HPP
#define JSFR_SEARCH_HPP

#include <algorithm>
#include <utility>
#include <vector>

#include "jsfr/common.hpp"

namespace jsfr
{

struct Peak
{
    double f = 0.0;
    double value = 0.0;
};

/// Golden-section maximization of a function on [lo, hi]; arguments are passed
/// through unwrapped so callers may work on a local chart of the circle.
template <typename Fn>
Peak golden_section_max(Fn&& fn, double lo, double hi, int iters = 60)
{
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo;
    double b = hi;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = fn(x1);
    double f2 = fn(x2);
    for (int it = 0; it < iters && (b - a) > 1e-15; ++it)
    {
        if (f1 < f2)
        {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = fn(x2);
        }
        else
        {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = fn(x1);
        }
    }
    return f1 >= f2 ? Peak{x1, f1} : Peak{x2, f2};
}

/// Indices of cyclic local maxima (value >= both neighbours, > at least one)
/// of a uniformly sampled periodic function.
inline std::vector<Index> cyclic_local_maxima(const std::vector<double>& v)
{
    std::vector<Index> out;
    const auto n = static_cast<Index>(v.size());
    if (n == 0)
        return out;
    if (n == 1)
        return {0};
    for (Index i = 0; i < n; ++i)
    {
        const double prev = v[static_cast<std::size_t>((i + n - 1) % n)];
        const double next = v[static_cast<std::size_t>((i + 1) % n)];
        const double cur = v[static_cast<std::size_t>(i)];
        if (cur >= prev && cur > next)
            out.push_back(i);
    }
    return out;
}

/// Grid scan followed by golden-section polish of each local maximum within
/// +/- one grid step. Returns polished peaks sorted by decreasing value.
template <typename Fn>
std::vector<Peak> scan_and_polish(Fn&& fn, Index grid_size, std::size_t max_polish = 0)
{
    std::vector<double> vals(static_cast<std::size_t>(grid_size));
    const double h = 1.0 / static_cast<double>(grid_size);
    for (Index g = 0; g < grid_size; ++g)
        vals[static_cast<std::size_t>(g)] = fn(static_cast<double>(g) * h);
    std::vector<Index> idx = cyclic_local_maxima(vals);
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
        return vals[static_cast<std::size_t>(a)] > vals[static_cast<std::size_t>(b)];
    });
    if (max_polish > 0 && idx.size() > max_polish)
        idx.resize(max_polish);
    std::vector<Peak> peaks;
    peaks.reserve(idx.size());
    for (Index g : idx)
    {
        const double c = static_cast<double>(g) * h;
        Peak p = golden_section_max(fn, c - h, c + h);
        if (p.value < vals[static_cast<std::size_t>(g)])
            p = {c, vals[static_cast<std::size_t>(g)]};
        p.f = wrap01(p.f);
        peaks.push_back(p);
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.value > b.value; });
    return peaks;
}

} // namespace jsfr

#endif
