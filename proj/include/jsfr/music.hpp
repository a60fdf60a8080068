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
/// \file music.hpp
///
/// MUSIC pseudospectrum on the observed rows (sparse arrays use a_Omega(f)).
///
#ifndef JSFR_MUSIC_HPP
#define JSFR_MUSIC_HPP

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "jsfr/common.hpp"
#include "jsfr/core_model.hpp"
#include "jsfr/search.hpp"

namespace jsfr
{

struct MusicResult
{
    std::vector<double> grid;     // f_g = g / grid_size
    std::vector<double> spectrum; // P(f_g)
    FrequencySet peaks;           // up to K strongest local maxima, polished
};

inline MusicResult music(const DataMatrix& data, Index K, Index grid_size = 0)
{
    const Index M = data.M();
    if (K < 1 || K >= M)
        throw ConfigError("music: need 1 <= K < M");
    if (grid_size <= 0)
        grid_size = 16 * data.N();

    const CMatrix R = data.observed * data.observed.adjoint() / static_cast<double>(data.L());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(R);
    if (es.info() != Eigen::Success)
        throw NumericalError("music: eigensolver failed");
    const CMatrix En = es.eigenvectors().leftCols(M - K); // ascending eigenvalues
    const std::vector<Index>& rows = data.mask.indices();

    auto pseudo = [&](double f) {
        const CVector a = atom(f, std::span<const Index>(rows));
        const double d = (En.adjoint() * a).squaredNorm();
        return 1.0 / std::max(d, 1e-300);
    };

    MusicResult out;
    out.grid.resize(static_cast<std::size_t>(grid_size));
    out.spectrum.resize(static_cast<std::size_t>(grid_size));
    for (Index g = 0; g < grid_size; ++g)
    {
        const double f = static_cast<double>(g) / static_cast<double>(grid_size);
        out.grid[static_cast<std::size_t>(g)] = f;
        out.spectrum[static_cast<std::size_t>(g)] = pseudo(f);
    }
    const auto peaks = scan_and_polish(pseudo, grid_size, static_cast<std::size_t>(K));
    std::vector<double> f;
    for (const auto& p : peaks)
        if (std::none_of(f.begin(), f.end(), [&](double x) { return x == p.f; }))
            f.push_back(p.f);
    out.peaks = FrequencySet(f);
    return out;
}

} // namespace jsfr

#endif
